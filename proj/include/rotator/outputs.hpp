#pragma once

#include <string>
#include <vector>

#include "rotator/guidance.hpp"
#include "rotator/propagator.hpp"

namespace rotator {

// One verification check: name, measured residual(s), pinned tolerance.
struct CheckResult {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string detail;
};

struct SvgSeries {
    std::string label;
    std::vector<double> x, y;
};

// Minimal SVG line plot; loglog plots annotate the least-squares slope of
// each series.
std::string svg_line_plot(const std::string& title, const std::string& xlabel,
                          const std::string& ylabel, const std::vector<SvgSeries>& series,
                          bool loglog);

std::string trajectory_csv(const std::vector<Trajectory>& trajs);
std::string observables_csv(const std::vector<double>& times, const std::vector<Observables>& obs);

void write_text_file(const std::string& path, const std::string& content);

struct ManifestEntry {
    std::string mode;
    std::string path;      // relative to the output directory
    std::string fnv_hash;  // content hash
};

struct RunManifest {
    std::string scenario_hash;
    std::uint64_t seed = 0;
    std::string version;
    std::vector<ManifestEntry> outputs;
    bool checks_passed = true;
    double wall_ms = 0.0;       // informational; excluded from content_hash
    std::string content_hash;   // over scenario hash, seed and output hashes

    void finalize();  // computes content_hash
    std::string to_json() const;
};

}  // namespace rotator
