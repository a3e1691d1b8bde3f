#pragma once

#include <string>
#include <vector>

#include "rotator/guidance.hpp"
#include "rotator/propagator.hpp"

namespace rotator {

struct VerifyConfig {
    std::vector<int> identity6_grids{32, 64, 128};
    std::string identity6_deriv = "fd2";
    double identity6_time = 0.25;
    std::vector<double> source_widths{0.2, 0.1, 0.05};
    double source_width_angle = 0.1;
    double covariance_epsilon = 0.02;
};

// Fully validated run configuration. Unknown keys anywhere in the document
// are schema errors; defaults are filled before hashing so reruns of the
// same file hash identically.
struct Scenario {
    RotatorParams params;
    GridSpec grid;
    ExternalFields fields;
    std::string fields_type = "zero";
    InitialState initial;
    PropagatorConfig prop;
    double t_final = 1.0;

    VelocityMode guidance_mode = VelocityMode::rotator;
    double guidance_dt = 1e-2;
    int record_stride = 1;
    EulerTriple theta0{0.5 * kPi, 0.3, 0.5};

    EnsembleSpec ensemble;
    bool has_ensemble = false;

    std::vector<std::string> modes;
    VerifyConfig verify;

    std::string canonical_json;  // defaults applied; input to the scenario hash
};

Scenario parse_scenario(const std::string& path);
Scenario parse_scenario_text(const std::string& text);

// FNV-1a over the canonical serialization.
std::string scenario_hash(const Scenario& sc);
std::uint64_t fnv1a(const std::string& data);

}  // namespace rotator
