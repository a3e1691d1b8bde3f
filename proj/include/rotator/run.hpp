#pragma once

#include <string>
#include <vector>

#include "rotator/galileo.hpp"
#include "rotator/outputs.hpp"
#include "rotator/scenario.hpp"
#include "rotator/unified_source.hpp"

namespace rotator {

inline constexpr const char* kToolVersion = "rotatorsim 0.1.0";

struct RunConfig {
    std::string out_dir = "out";
    std::uint64_t seed = 0;  // 0 keeps the scenario's seed
    int threads = 1;
    bool emit_svg = true;
};

// --------------------------------------------------------------------------
// Verification suites (library-level so the CLI and the acceptance tests
// share one implementation).
// --------------------------------------------------------------------------

// Operator algebra: orthonormality, Clifford/commutator relations, the
// A-matrix divergence identity and the metric relation, and the sigma
// integrals. All tolerances pinned at 1e-12.
std::vector<CheckResult> verify_algebra_suite(const RotatorParams& params, std::uint64_t seed);

struct ConvergenceReport {
    std::string name;
    std::vector<double> h;          // grid spacings or widths
    std::vector<double> residual;   // one per h
    std::vector<double> ratios;     // successive residual ratios
    double expected_ratio = 4.0;
    double ratio_tolerance = 0.4;
    bool pass = false;
};

// Identity-(6) residual refinement over three grids for three (psi, f)
// pairs; fd2 gives expected ratio 4, fd4 gives 16.
std::vector<ConvergenceReport> verify_identity6_suite(const VerifyConfig& cfg,
                                                      const RotatorParams& params);

// Dual-route source agreement across mollifier widths (w, w/2, w/4).
ConvergenceReport verify_source_suite(const VerifyConfig& cfg, const RotatorParams& params);

struct CovarianceSuiteReport {
    std::vector<CovarianceReport> elements;  // translation, boost, time shift
    double element_budget = 0.0;
    CovarianceReport rotation_full;          // at epsilon
    CovarianceReport rotation_half;          // at epsilon/2
    double rotation_ratio = 0.0;
    bool pass = false;
};

CovarianceSuiteReport verify_covariance_suite(double epsilon, int threads);

// --------------------------------------------------------------------------
// Orchestration
// --------------------------------------------------------------------------

RunManifest run_scenario(const Scenario& sc, const RunConfig& rc);

// Validates a written manifest: files exist and hash correctly. Returns
// true when everything checks out.
bool report_manifest(const std::string& manifest_path, std::string& summary_out);

}  // namespace rotator
