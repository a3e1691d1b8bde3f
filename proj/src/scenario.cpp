#include "rotator/scenario.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace rotator {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) throw SchemaError(path + "." + it.key(), "unknown key");
    }
}

double get_num(const json& obj, const std::string& path, const char* key, double dflt,
               bool required = false) {
    if (!obj.contains(key)) {
        if (required) throw SchemaError(path + "." + key, "missing required field");
        return dflt;
    }
    if (!obj[key].is_number()) throw SchemaError(path + "." + key, "expected a number");
    return obj[key].get<double>();
}

std::string get_str(const json& obj, const std::string& path, const char* key,
                    const std::string& dflt) {
    if (!obj.contains(key)) return dflt;
    if (!obj[key].is_string()) throw SchemaError(path + "." + key, "expected a string");
    return obj[key].get<std::string>();
}

Vec3 get_vec3(const json& obj, const std::string& path, const char* key, const Vec3& dflt) {
    if (!obj.contains(key)) return dflt;
    const json& a = obj[key];
    if (!a.is_array() || a.size() > 3) throw SchemaError(path + "." + key, "expected [x,y,z]");
    Vec3 v = dflt;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_number()) throw SchemaError(path + "." + key, "expected numbers");
        v[i] = a[i].get<double>();
    }
    return v;
}

RotatorParams parse_params(const json& j) {
    check_keys(j, "params", {"m", "l", "I", "mm", "hbar"});
    const double m = get_num(j, "params", "m", 1.0);
    const double mm = get_num(j, "params", "mm", 1.0);
    const double hbar = get_num(j, "params", "hbar", 1.0);
    if (m <= 0.0) throw SchemaError("params.m", "must be positive");
    if (hbar <= 0.0) throw SchemaError("params.hbar", "must be positive");

    if (j.contains("l") && j.contains("I")) {
        const double l = get_num(j, "params", "l", 1.0), I = get_num(j, "params", "I", 1.0);
        if (l <= 0.0) throw SchemaError("params.l", "must be positive");
        if (std::abs(I - m * l * l) > 1e-12 * I)
            throw SchemaError("params.I", "inconsistent with m*l^2");
        return RotatorParams::from_mass_length(m, l, mm, hbar);
    }
    if (j.contains("I")) {
        const double I = get_num(j, "params", "I", 1.0);
        if (I <= 0.0) throw SchemaError("params.I", "must be positive");
        return RotatorParams::from_mass_inertia(m, I, mm, hbar);
    }
    const double l = get_num(j, "params", "l", 1.0);
    if (l <= 0.0) throw SchemaError("params.l", "must be positive");
    return RotatorParams::from_mass_length(m, l, mm, hbar);
}

GridSpec parse_grid(const json& j) {
    check_keys(j, "grid", {"dims", "extent", "points"});
    GridSpec g;
    g.dims = static_cast<int>(get_num(j, "grid", "dims", 1));
    if (g.dims < 1 || g.dims > 3) throw SchemaError("grid.dims", "must be 1..3");
    if (!j.contains("extent") || !j.contains("points"))
        throw SchemaError("grid", "extent and points are required");
    const json& e = j["extent"];
    const json& p = j["points"];
    if (!e.is_array() || static_cast<int>(e.size()) != g.dims)
        throw SchemaError("grid.extent", "expected one entry per dimension");
    if (!p.is_array() || static_cast<int>(p.size()) != g.dims)
        throw SchemaError("grid.points", "expected one entry per dimension");
    g.extent = {1.0, 1.0, 1.0};
    g.points = {1, 1, 1};
    for (int d = 0; d < g.dims; ++d) {
        g.extent[d] = e[d].get<double>();
        g.points[d] = p[d].get<int>();
        if (g.extent[d] <= 0.0) throw SchemaError("grid.extent", "must be positive");
        if (g.points[d] < 8) throw SchemaError("grid.points", "need at least 8 points per dim");
    }
    return g;
}

ExternalFields parse_fields(const json& j, std::string& type_out) {
    check_keys(j, "fields", {"type", "b", "b0", "v0", "axis", "wavelength", "k", "mode"});
    const std::string type = get_str(j, "fields", "type", "zero");
    type_out = type;
    ExternalFields f;
    if (type == "zero") {
        f = ExternalFields::zero();
    } else if (type == "uniform_b") {
        f = ExternalFields::uniform_b(get_vec3(j, "fields", "b", Vec3{{0.0, 0.0, 1.0}}));
    } else if (type == "symmetric_gauge_b") {
        f = ExternalFields::symmetric_gauge(get_num(j, "fields", "b0", 1.0));
    } else if (type == "cosine_v") {
        f = ExternalFields::cosine_v(get_num(j, "fields", "v0", 0.1),
                                     static_cast<int>(get_num(j, "fields", "axis", 0)),
                                     get_num(j, "fields", "wavelength", 1.0, true));
    } else if (type == "harmonic_v") {
        f = ExternalFields::harmonic_v(get_num(j, "fields", "k", 1.0));
    } else {
        throw SchemaError("fields.type", "unknown field type '" + type + "'");
    }
    const std::string mode = get_str(j, "fields", "mode", "independent");
    if (mode == "curl_checked")
        f.mode = ExternalFields::Mode::curl_checked;
    else if (mode != "independent")
        throw SchemaError("fields.mode", "expected independent|curl_checked");
    return f;
}

InitialState parse_initial(const json& j) {
    check_keys(j, "initial", {"center", "width", "wavevector", "polarization"});
    InitialState in;
    in.center = get_vec3(j, "initial", "center", Vec3{});
    in.width = get_num(j, "initial", "width", 1.0);
    if (in.width <= 0.0) throw SchemaError("initial.width", "must be positive");
    in.wavevector = get_vec3(j, "initial", "wavevector", Vec3{});
    if (j.contains("polarization")) {
        const json& p = j["polarization"];
        if (!p.is_array() || p.size() != 2 || !p[0].is_array() || p[0].size() != 2 ||
            !p[1].is_array() || p[1].size() != 2)
            throw SchemaError("initial.polarization", "expected [[re,im],[re,im]]");
        in.polarization.a = cplx(p[0][0].get<double>(), p[0][1].get<double>());
        in.polarization.b = cplx(p[1][0].get<double>(), p[1][1].get<double>());
    }
    return in;
}

void parse_propagator(const json& j, PropagatorConfig& cfg, double& t_final) {
    check_keys(j, "propagator", {"dt", "scheme", "variant", "steps_per_output", "t_final"});
    cfg.dt = get_num(j, "propagator", "dt", 1e-3);
    if (cfg.dt <= 0.0) throw SchemaError("propagator.dt", "must be positive");
    const std::string scheme = get_str(j, "propagator", "scheme", "split_step_spectral");
    if (scheme == "split_step_spectral")
        cfg.scheme = Scheme::split_step_spectral;
    else if (scheme == "crank_nicolson")
        cfg.scheme = Scheme::crank_nicolson;
    else
        throw SchemaError("propagator.scheme", "expected split_step_spectral|crank_nicolson");
    const std::string variant = get_str(j, "propagator", "variant", "pauli_eq29");
    if (variant == "pauli_eq29")
        cfg.variant = EquationVariant::pauli_eq29;
    else if (variant == "bopp_haag_eq27")
        cfg.variant = EquationVariant::bopp_haag_eq27;
    else
        throw SchemaError("propagator.variant", "expected pauli_eq29|bopp_haag_eq27");
    cfg.steps_per_output = static_cast<int>(get_num(j, "propagator", "steps_per_output", 1));
    if (cfg.steps_per_output < 1)
        throw SchemaError("propagator.steps_per_output", "must be >= 1");
    t_final = get_num(j, "propagator", "t_final", 1.0);
    if (t_final <= 0.0) throw SchemaError("propagator.t_final", "must be positive");
}

void parse_guidance(const json& j, Scenario& sc) {
    check_keys(j, "guidance", {"mode", "dt", "record_stride", "theta0"});
    const std::string mode = get_str(j, "guidance", "mode", "rotator");
    if (mode == "rotator")
        sc.guidance_mode = VelocityMode::rotator;
    else if (mode == "pauli")
        sc.guidance_mode = VelocityMode::pauli;
    else if (mode == "pauli_plus_spin")
        sc.guidance_mode = VelocityMode::pauli_plus_spin;
    else
        throw SchemaError("guidance.mode", "expected rotator|pauli|pauli_plus_spin");
    sc.guidance_dt = get_num(j, "guidance", "dt", 1e-2);
    if (sc.guidance_dt <= 0.0) throw SchemaError("guidance.dt", "must be positive");
    sc.record_stride = static_cast<int>(get_num(j, "guidance", "record_stride", 1));
    const Vec3 th = get_vec3(j, "guidance", "theta0",
                             Vec3{{0.5 * kPi, 0.3, 0.5}});
    sc.theta0 = EulerTriple{th[0], th[1], th[2]};
}

void parse_ensemble(const json& j, Scenario& sc) {
    check_keys(j, "ensemble", {"count", "sampling", "seed", "points"});
    sc.has_ensemble = true;
    sc.ensemble.count = static_cast<int>(get_num(j, "ensemble", "count", 1));
    if (sc.ensemble.count < 1) throw SchemaError("ensemble.count", "must be >= 1");
    const std::string s = get_str(j, "ensemble", "sampling", "density_weighted");
    if (s == "density_weighted")
        sc.ensemble.sampling = EnsembleSpec::Sampling::density_weighted;
    else if (s == "uniform")
        sc.ensemble.sampling = EnsembleSpec::Sampling::uniform;
    else if (s == "explicit")
        sc.ensemble.sampling = EnsembleSpec::Sampling::explicit_list;
    else
        throw SchemaError("ensemble.sampling", "expected density_weighted|uniform|explicit");
    sc.ensemble.seed = static_cast<std::uint64_t>(get_num(j, "ensemble", "seed", 1));
    if (j.contains("points")) {
        for (const auto& p : j["points"]) {
            if (!p.is_array() || p.size() != 6)
                throw SchemaError("ensemble.points", "expected [q1,q2,q3,t1,t2,t3] entries");
            Vec3 q{{p[0].get<double>(), p[1].get<double>(), p[2].get<double>()}};
            EulerTriple th{p[3].get<double>(), p[4].get<double>(), p[5].get<double>()};
            sc.ensemble.points.emplace_back(q, th);
        }
    }
}

void parse_verify(const json& j, VerifyConfig& v) {
    check_keys(j, "verify",
               {"identity6_grids", "identity6_deriv", "identity6_time", "source_widths",
                "source_width_angle", "covariance_epsilon"});
    if (j.contains("identity6_grids")) {
        v.identity6_grids.clear();
        for (const auto& g : j["identity6_grids"]) v.identity6_grids.push_back(g.get<int>());
        if (v.identity6_grids.size() < 3)
            throw SchemaError("verify.identity6_grids", "need at least 3 grids");
    }
    v.identity6_deriv = get_str(j, "verify", "identity6_deriv", v.identity6_deriv);
    if (v.identity6_deriv != "fd2" && v.identity6_deriv != "fd4")
        throw SchemaError("verify.identity6_deriv", "expected fd2|fd4");
    v.identity6_time = get_num(j, "verify", "identity6_time", v.identity6_time);
    if (j.contains("source_widths")) {
        v.source_widths.clear();
        for (const auto& w : j["source_widths"]) v.source_widths.push_back(w.get<double>());
        if (v.source_widths.size() < 3)
            throw SchemaError("verify.source_widths", "need at least 3 widths");
    }
    v.source_width_angle = get_num(j, "verify", "source_width_angle", v.source_width_angle);
    v.covariance_epsilon = get_num(j, "verify", "covariance_epsilon", v.covariance_epsilon);
}

const std::vector<std::string> kKnownModes = {"propagate",     "trajectories", "verify-algebra",
                                              "verify-identity6", "verify-source", "covariance",
                                              "unified-field"};

}  // namespace

Scenario parse_scenario_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError("$", std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw SchemaError("$", "top level must be an object");
    check_keys(j, "$",
               {"params", "grid", "fields", "initial", "propagator", "guidance", "ensemble",
                "modes", "verify"});

    Scenario sc;
    sc.params = j.contains("params") ? parse_params(j["params"]) : RotatorParams{};
    if (!j.contains("grid")) throw SchemaError("grid", "missing required section");
    sc.grid = parse_grid(j["grid"]);
    if (j.contains("fields")) sc.fields = parse_fields(j["fields"], sc.fields_type);
    else sc.fields = ExternalFields::zero();
    if (j.contains("initial")) sc.initial = parse_initial(j["initial"]);
    if (j.contains("propagator")) parse_propagator(j["propagator"], sc.prop, sc.t_final);
    if (j.contains("guidance")) parse_guidance(j["guidance"], sc);
    if (j.contains("ensemble")) parse_ensemble(j["ensemble"], sc);
    if (j.contains("verify")) parse_verify(j["verify"], sc.verify);

    if (j.contains("modes")) {
        if (!j["modes"].is_array()) throw SchemaError("modes", "expected an array");
        for (const auto& m : j["modes"]) {
            const std::string name = m.get<std::string>();
            bool known = false;
            for (const auto& k : kKnownModes)
                if (k == name) known = true;
            if (!known) throw SchemaError("modes", "unknown mode '" + name + "'");
            sc.modes.push_back(name);
        }
    } else {
        sc.modes = {"propagate"};
    }

    // canonical form with defaults applied, used for the manifest hash
    json canon;
    canon["params"] = {{"m", sc.params.m}, {"I", sc.params.I}, {"l", sc.params.l},
                       {"mm", sc.params.mm}, {"hbar", sc.params.hbar}};
    canon["grid"] = {{"dims", sc.grid.dims},
                     {"extent", {sc.grid.extent[0], sc.grid.extent[1], sc.grid.extent[2]}},
                     {"points", {sc.grid.points[0], sc.grid.points[1], sc.grid.points[2]}}};
    canon["fields_type"] = sc.fields_type;
    canon["initial"] = {{"center", {sc.initial.center[0], sc.initial.center[1], sc.initial.center[2]}},
                        {"width", sc.initial.width},
                        {"wavevector",
                         {sc.initial.wavevector[0], sc.initial.wavevector[1], sc.initial.wavevector[2]}},
                        {"polarization",
                         {{sc.initial.polarization.a.real(), sc.initial.polarization.a.imag()},
                          {sc.initial.polarization.b.real(), sc.initial.polarization.b.imag()}}}};
    canon["propagator"] = {{"dt", sc.prop.dt},
                           {"scheme", sc.prop.scheme == Scheme::split_step_spectral
                                          ? "split_step_spectral" : "crank_nicolson"},
                           {"variant", sc.prop.variant == EquationVariant::pauli_eq29
                                           ? "pauli_eq29" : "bopp_haag_eq27"},
                           {"steps_per_output", sc.prop.steps_per_output},
                           {"t_final", sc.t_final}};
    canon["guidance"] = {{"dt", sc.guidance_dt},
                         {"record_stride", sc.record_stride},
                         {"theta0", {sc.theta0.alpha, sc.theta0.beta, sc.theta0.gamma}}};
    canon["ensemble"] = {{"count", sc.ensemble.count}, {"seed", sc.ensemble.seed}};
    canon["modes"] = sc.modes;
    sc.canonical_json = canon.dump();
    return sc;
}

Scenario parse_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IOError("cannot open scenario file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario_text(buf.str());
}

std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string scenario_hash(const Scenario& sc) {
    std::ostringstream os;
    os << std::hex << fnv1a(sc.canonical_json);
    return os.str();
}

}  // namespace rotator
