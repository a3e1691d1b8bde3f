#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include "rotator/propagator.hpp"
#include "rotator/unified_source.hpp"

using namespace rotator;

namespace {

GridSpec grid_1d(int n, double box) {
    GridSpec g;
    g.dims = 1;
    g.extent = {box, 1.0, 1.0};
    g.points = {n, 1, 1};
    return g;
}

}  // namespace

TEST_CASE("analytic free packet satisfies the free wave equation") {
    const RotatorParams p = RotatorParams::from_mass_length(1.7, 0.9);
    FreePacketPsi psi;
    psi.center = Vec3{{3.0, 0, 0}};
    psi.k = Vec3{{0.8, 0, 0}};
    psi.sigma = 1.3;
    for (double t : {0.0, 0.4, 2.0}) {
        for (double x : {2.0, 3.5, 5.0}) {
            const SpaceJet j = psi.scalar_jet(Vec3{{x, 0, 0}}, t, p);
            const cplx residual = kI * p.hbar * j.dt +
                                  p.hbar * p.hbar / (2.0 * p.m) * j.d2[0] -
                                  3.0 * p.hbar * p.hbar / (8.0 * p.I) * j.v;
            CHECK(std::abs(residual) < 1e-12);
        }
    }
}

TEST_CASE("init_state: normalization, polarization, guards") {
    const RotatorParams p = RotatorParams::from_mass_length(1.0, 1.0);
    GridSpec g = grid_1d(128, 40.0);
    InitialState in;
    in.center = Vec3{{20.0, 0, 0}};
    in.width = 1.5;
    in.polarization = C2{1.0, 0.0};
    const SpinorField f = init_state(g, in);
    CHECK(std::abs(f.norm_sq() - 1.0) < 1e-10);
    const Observables ob = observables(f, p);
    CHECK(ob.mean_spin[2] == doctest::Approx(0.5 * p.hbar).epsilon(1e-10));
    CHECK(std::abs(ob.mean_position[0] - 20.0) < g.spacing(0));

    InitialState xpol = in;
    xpol.polarization = C2{1.0, 1.0};  // normalized internally
    const Observables ob2 = observables(init_state(g, xpol), p);
    CHECK(ob2.mean_spin[0] == doctest::Approx(0.5 * p.hbar).epsilon(1e-10));
    CHECK(std::abs(ob2.mean_spin[2]) < 1e-12);

    InitialState wide = in;
    wide.width = 6.0;  // > extent/8
    CHECK_THROWS_AS(init_state(g, wide), PacketTooWide);
    InitialState narrow = in;
    narrow.width = 0.5 * g.spacing(0);
    CHECK_THROWS_AS(init_state(g, narrow), PacketTooWide);
}

TEST_CASE("free propagation matches the closed-form packet") {
    const RotatorParams p = RotatorParams::from_mass_length(1.0, 1.0);
    GridSpec g = grid_1d(128, 40.0);
    FreePacketPsi exact;
    exact.center = Vec3{{20.0, 0, 0}};
    exact.k = Vec3{{1.2, 0, 0}};
    exact.sigma = 1.5;
    exact.chi = C2{1.0, 0.0};

    SpinorField st = exact.sample(g, 0.0, p);
    PropagatorConfig cfg;
    cfg.dt = 0.01;
    cfg.variant = EquationVariant::pauli_eq29;
    const double t_final = 2.0;
    auto frames = propagate(st, ExternalFields::zero(), p, cfg, t_final);
    const SpinorField& got = frames.back();

    // pauli_eq29 drops the Casimir energy the analytic solution carries
    const SpinorField want = exact.sample(g, t_final, p);
    const cplx casimir = std::polar(1.0, 3.0 * p.hbar * t_final / (8.0 * p.I));
    double worst = 0.0;
    for (std::size_t n = 0; n < g.total(); ++n)
        worst = std::max(worst, std::abs(got.comp[0][n] - casimir * want.comp[0][n]));
    CHECK(worst < 1e-10);

    // packet spreading law sigma_t^2 = sigma^2 (1 + (hbar t / 2 m sigma^2)^2)
    double var = 0.0, norm = 0.0;
    const Observables ob = observables(got, p);
    for (std::size_t n = 0; n < g.total(); ++n) {
        const double rho = got.at(n).norm_sq();
        const double dx = g.node(n)[0] - ob.mean_position[0];
        var += rho * dx * dx;
        norm += rho;
    }
    var /= norm;
    const double s2 = exact.sigma * exact.sigma;
    const double want_var = s2 * (1.0 + std::pow(p.hbar * t_final / (2.0 * p.m * s2), 2));
    CHECK(var == doctest::Approx(want_var).epsilon(1e-8));
}

TEST_CASE("spin precession in a uniform field") {
    const RotatorParams p = RotatorParams::from_mass_length(1.0, 1.0, 0.8);
    GridSpec g = grid_1d(64, 32.0);
    InitialState in;
    in.center = Vec3{{16.0, 0, 0}};
    in.width = 1.5;
    const double r = 1.0 / std::sqrt(2.0);
    in.polarization = C2{r, r};
    SpinorField st = init_state(g, in);

    const double b0 = 1.3;
    ExternalFields fields = ExternalFields::uniform_b(Vec3{{0.0, 0.0, b0}});
    PropagatorConfig cfg;
    cfg.dt = 0.02;
    for (int k = 1; k <= 50; ++k) {
        st = step(st, fields, p, cfg);
        const Observables ob = observables(st, p);
        const double want = 0.5 * p.hbar * std::cos(p.mm * b0 * st.time);
        CHECK(std::abs(ob.mean_spin[0] - want) < 1e-12);
    }
}

TEST_CASE("constant scalar potential only shifts the global phase") {
    const RotatorParams p = RotatorParams::from_mass_length(1.0, 1.0);
    GridSpec g = grid_1d(64, 32.0);
    InitialState in;
    in.center = Vec3{{16.0, 0, 0}};
    in.width = 2.0;
    SpinorField st = init_state(g, in);
    ExternalFields fields = ExternalFields::zero();
    fields.V = [](const Vec3&, double) { return 2.7; };
    ExternalFields free_fields = ExternalFields::zero();

    PropagatorConfig cfg;
    cfg.dt = 0.05;
    SpinorField with_v = st, without_v = st;
    for (int k = 0; k < 20; ++k) {
        with_v = step(with_v, fields, p, cfg);
        without_v = step(without_v, free_fields, p, cfg);
    }
    const cplx phase = std::polar(1.0, -2.7 * with_v.time / p.hbar);
    double worst = 0.0;
    for (std::size_t n = 0; n < g.total(); ++n)
        worst = std::max(worst,
                         std::abs(with_v.comp[0][n] - phase * without_v.comp[0][n]));
    CHECK(worst < 1e-12);
}

TEST_CASE("bopp-haag variant differs by the Casimir global phase at B = 0") {
    const RotatorParams p = RotatorParams::from_mass_length(1.0, 0.7);
    GridSpec g = grid_1d(64, 32.0);
    InitialState in;
    in.center = Vec3{{16.0, 0, 0}};
    in.width = 2.0;
    in.wavevector = Vec3{{0.6, 0, 0}};
    in.polarization = C2{0.8, cplx(0, 0.6)};
    const SpinorField st = init_state(g, in);

    PropagatorConfig pauli_cfg, bh_cfg;
    pauli_cfg.dt = bh_cfg.dt = 0.02;
    bh_cfg.variant = EquationVariant::bopp_haag_eq27;
    const double t_final = 1.0;
    const SpinorField a = propagate(st, ExternalFields::zero(), p, pauli_cfg, t_final).back();
    const SpinorField b = propagate(st, ExternalFields::zero(), p, bh_cfg, t_final).back();

    const cplx phase = std::polar(1.0, -3.0 * p.hbar * t_final / (8.0 * p.I));
    double worst_phase = 0.0, worst_rho = 0.0;
    for (std::size_t n = 0; n < g.total(); ++n) {
        worst_phase = std::max(worst_phase, std::abs(b.comp[0][n] - phase * a.comp[0][n]));
        worst_rho = std::max(worst_rho, std::abs(b.at(n).norm_sq() - a.at(n).norm_sq()));
    }
    CHECK(worst_phase < 1e-12);
    CHECK(worst_rho < 1e-10);
}

TEST_CASE("norm conservation over 1000 steps, both schemes") {
    const RotatorParams p = RotatorParams::from_mass_length(1.0, 1.0);
    GridSpec g = grid_1d(64, 32.0);
    InitialState in;
    in.center = Vec3{{16.0, 0, 0}};
    in.width = 1.5;
    in.wavevector = Vec3{{0.8, 0, 0}};
    for (Scheme scheme : {Scheme::split_step_spectral, Scheme::crank_nicolson}) {
        SpinorField st = init_state(g, in);
        PropagatorConfig cfg;
        cfg.dt = 0.01;
        cfg.scheme = scheme;
        for (int k = 0; k < 1000; ++k) st = step(st, ExternalFields::zero(), p, cfg);
        CHECK(std::abs(st.norm_sq() - 1.0) < 1e-10);
    }
}

TEST_CASE("crank-nicolson and split-step agree at O(dt^2)") {
    const RotatorParams p = RotatorParams::from_mass_length(1.0, 1.0);
    GridSpec g = grid_1d(64, 32.0);
    InitialState in;
    in.center = Vec3{{16.0, 0, 0}};
    in.width = 2.0;
    in.wavevector = Vec3{{0.5, 0, 0}};
    const SpinorField st = init_state(g, in);
    ExternalFields fields = ExternalFields::cosine_v(0.4, 0, 32.0);

    auto scheme_gap = [&](double dt) {
        PropagatorConfig ss, cn;
        ss.dt = cn.dt = dt;
        cn.scheme = Scheme::crank_nicolson;
        const SpinorField a = propagate(st, fields, p, ss, 0.64).back();
        const SpinorField b = propagate(st, fields, p, cn, 0.64).back();
        double worst = 0.0;
        for (std::size_t n = 0; n < g.total(); ++n) {
            worst = std::max(worst, std::abs(a.comp[0][n] - b.comp[0][n]));
            worst = std::max(worst, std::abs(a.comp[1][n] - b.comp[1][n]));
        }
        return worst;
    };
    const double gap1 = scheme_gap(0.02), gap2 = scheme_gap(0.01);
    CHECK(gap1 / gap2 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("split-step converges at second order against a fine reference") {
    const RotatorParams p = RotatorParams::from_mass_length(1.0, 1.0);
    GridSpec g = grid_1d(64, 32.0);
    InitialState in;
    in.center = Vec3{{16.0, 0, 0}};
    in.width = 2.0;
    in.wavevector = Vec3{{0.5, 0, 0}};
    const SpinorField st = init_state(g, in);
    ExternalFields fields = ExternalFields::cosine_v(0.5, 0, 32.0);

    PropagatorConfig fine;
    fine.dt = 1e-3;
    const SpinorField ref = propagate(st, fields, p, fine, 0.512).back();
    auto err = [&](double dt) {
        PropagatorConfig cfg;
        cfg.dt = dt;
        const SpinorField a = propagate(st, fields, p, cfg, 0.512).back();
        double worst = 0.0;
        for (std::size_t n = 0; n < g.total(); ++n)
            worst = std::max(worst, std::abs(a.comp[0][n] - ref.comp[0][n]));
        return worst;
    };
    const double e1 = err(0.032), e2 = err(0.016);
    const double order = std::log2(e1 / e2);
    CHECK(order == doctest::Approx(2.0).epsilon(0.10));
}

TEST_CASE("unstable input raises UnstableStep") {
    const RotatorParams p = RotatorParams::from_mass_length(1.0, 1.0);
    GridSpec g = grid_1d(64, 32.0);
    SpinorField st = SpinorField::zeros(g);
    st.comp[0][3] = cplx(std::numeric_limits<double>::quiet_NaN(), 0.0);
    PropagatorConfig cfg;
    cfg.dt = 0.01;
    CHECK_THROWS_AS(step(st, ExternalFields::zero(), p, cfg), UnstableStep);
}

TEST_CASE("propagate stores snapshots on the requested cadence") {
    const RotatorParams p = RotatorParams::from_mass_length(1.0, 1.0);
    GridSpec g = grid_1d(64, 32.0);
    InitialState in;
    in.center = Vec3{{16.0, 0, 0}};
    in.width = 1.5;
    PropagatorConfig cfg;
    cfg.dt = 0.01;
    cfg.steps_per_output = 10;
    const auto frames = propagate(init_state(g, in), ExternalFields::zero(), p, cfg, 0.5);
    CHECK(frames.size() == 6);  // t = 0, 0.1, ..., 0.5
    CHECK(frames.back().time == doctest::Approx(0.5));
}
