#include <iostream>

#include "CLI11.hpp"
#include "rotator/run.hpp"

// Exit codes: 0 success, 2 schema error, 3 numerical-check failure, 1 other.
int main(int argc, char** argv) {
    CLI::App app{"rotatorsim: spin-1/2 rigid-rotator wave/guidance simulator"};
    app.require_subcommand(1);

    std::string scenario_path, manifest_path, out_dir = "out";
    std::uint64_t seed = 0;
    int threads = 1;
    bool no_svg = false;

    CLI::App* run = app.add_subcommand("run", "execute a scenario");
    run->add_option("scenario", scenario_path, "scenario JSON file")->required();
    run->add_option("--out-dir", out_dir, "output directory");
    run->add_option("--seed", seed, "override the ensemble seed");
    run->add_option("--threads", threads, "worker threads for trajectory ensembles");
    run->add_flag("--no-svg", no_svg, "skip SVG plot emission");

    CLI::App* validate = app.add_subcommand("validate", "parse and validate a scenario");
    validate->add_option("scenario", scenario_path, "scenario JSON file")->required();

    CLI::App* report = app.add_subcommand("report", "check a run manifest");
    report->add_option("manifest", manifest_path, "manifest JSON file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) {
            const rotator::Scenario sc = rotator::parse_scenario(scenario_path);
            std::cout << "valid scenario, hash " << rotator::scenario_hash(sc) << "\n";
            return 0;
        }
        if (run->parsed()) {
            const rotator::Scenario sc = rotator::parse_scenario(scenario_path);
            rotator::RunConfig rc;
            rc.out_dir = out_dir;
            rc.seed = seed;
            rc.threads = threads;
            rc.emit_svg = !no_svg;
            const rotator::RunManifest m = rotator::run_scenario(sc, rc);
            std::cout << "run complete: " << m.outputs.size() << " outputs, content hash "
                      << m.content_hash << ", checks "
                      << (m.checks_passed ? "PASS" : "FAIL") << "\n";
            return m.checks_passed ? 0 : 3;
        }
        if (report->parsed()) {
            std::string summary;
            const bool ok = rotator::report_manifest(manifest_path, summary);
            std::cout << summary;
            return ok ? 0 : 3;
        }
    } catch (const rotator::SchemaError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const rotator::SimError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
