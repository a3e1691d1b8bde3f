#include "rotator/propagator.hpp"

#include <cmath>
#include <sstream>

namespace rotator {

SpinorField init_state(const GridSpec& grid, const InitialState& init) {
    grid.validate();
    for (int d = 0; d < grid.dims; ++d) {
        if (init.width > grid.extent[d] / 8.0)
            throw PacketTooWide("init_state: packet width exceeds extent/8");
        if (init.width < 2.0 * grid.spacing(d))
            throw PacketTooWide("init_state: packet width under 2 grid spacings");
    }
    C2 pol = init.polarization;
    const double pn = std::sqrt(pol.norm_sq());
    if (pn <= 0.0) throw SimError("init_state: zero polarization");
    pol = pol * (1.0 / pn);

    SpinorField f = SpinorField::zeros(grid);
    // |Psi|^2 has per-axis variance width^2: amplitude exp(-r^2 / (4 width^2))
    const double inv4w2 = 1.0 / (4.0 * init.width * init.width);
    for (std::size_t n = 0; n < grid.total(); ++n) {
        const Vec3 x = grid.node(n);
        double r2 = 0.0, phase = 0.0;
        for (int d = 0; d < grid.dims; ++d) {
            const double dx = x[d] - init.center[d];
            r2 += dx * dx;
            phase += init.wavevector[d] * x[d];
        }
        const cplx amp = std::exp(-r2 * inv4w2) * std::polar(1.0, phase);
        f.set(n, pol * amp);
    }
    f.normalize();
    f.time = 0.0;
    return f;
}

namespace {

// kinetic phase angles E(k) tau / hbar with E = (hbar k - A)^2 / 2m
std::vector<double> kinetic_angles(const GridSpec& grid, const Vec3& a_uniform,
                                   const RotatorParams& p, double tau) {
    std::vector<double> ang(grid.total());
    for (std::size_t f = 0; f < ang.size(); ++f) {
        const auto ijk = grid.unflatten(f);
        double e = 0.0;
        for (int d = 0; d < grid.dims; ++d) {
            const double m = p.hbar * grid.kvalue(ijk[d], d) - a_uniform[d];
            e += m * m;
        }
        ang[f] = e / (2.0 * p.m) * tau / p.hbar;
    }
    return ang;
}

void kinetic_substep(SpinorField& s, const ExternalFields& fields, const RotatorParams& p,
                     double tau, Scheme scheme, double t_mid) {
    if (!fields.a_uniform)
        throw UnsupportedField("propagator: spatially varying vector potential not supported");
    const Vec3 a0 = fields.A(Vec3{}, t_mid);
    const std::vector<double> ang = kinetic_angles(s.grid, a0, p, tau);
    for (int c = 0; c < 2; ++c) {
        std::vector<cplx> spec = fft_forward(s.grid, s.comp[c]);
        for (std::size_t f = 0; f < spec.size(); ++f) {
            if (scheme == Scheme::split_step_spectral) {
                spec[f] *= std::polar(1.0, -ang[f]);
            } else {
                const cplx half(0.0, 0.5 * ang[f]);
                spec[f] *= (1.0 - half) / (1.0 + half);  // Cayley form, |.| = 1
            }
        }
        s.comp[c] = fft_inverse(s.grid, spec);
    }
}

void potential_spin_substep(SpinorField& s, const ExternalFields& fields, const RotatorParams& p,
                            double dt, EquationVariant variant, double t_mid) {
    const bool bopp = (variant == EquationVariant::bopp_haag_eq27);
    const double casimir = bopp ? 3.0 * p.hbar * p.hbar / (8.0 * p.I) : 0.0;
    for (std::size_t n = 0; n < s.grid.total(); ++n) {
        const Vec3 x = s.grid.node(n);
        const Vec3 b = fields.B(x, t_mid);
        double veff = fields.V(x, t_mid) + casimir;
        const double bmag = b.norm();
        if (bopp) veff += 0.5 * p.I * (p.mm * bmag) * (p.mm * bmag);

        C2 v = s.at(n);
        if (bmag > 0.0) {
            // exact 2x2 unitary exp(-i mm (hbar/2) B.sigma dt / hbar), Rodrigues form
            const double phi = 0.5 * p.mm * bmag * dt;
            const Vec3 bh = b / bmag;
            Mat2c bs;
            for (int i = 0; i < 3; ++i) bs = bs + pauli(i) * cplx(bh[i], 0.0);
            const Mat2c u = Mat2c::identity() * cplx(std::cos(phi), 0.0) - bs * (kI * std::sin(phi));
            v = u * v;
        }
        v = v * std::polar(1.0, -veff * dt / p.hbar);
        s.set(n, v);
    }
}

}  // namespace

SpinorField step(const SpinorField& state, const ExternalFields& fields,
                 const RotatorParams& params, const PropagatorConfig& cfg) {
    const double n_before = state.norm_sq();
    SpinorField s = state;
    const double t_mid = state.time + 0.5 * cfg.dt;
    kinetic_substep(s, fields, params, 0.5 * cfg.dt, cfg.scheme, t_mid);
    potential_spin_substep(s, fields, params, cfg.dt, cfg.variant, t_mid);
    kinetic_substep(s, fields, params, 0.5 * cfg.dt, cfg.scheme, t_mid);
    s.time = state.time + cfg.dt;

    const double drift = std::abs(s.norm_sq() - n_before);
    if (!(drift < 1e-6)) {
        std::ostringstream msg;
        msg << "step: norm drift " << drift << " in one step at t=" << state.time;
        throw UnstableStep(msg.str());
    }
    return s;
}

std::vector<SpinorField> propagate(const SpinorField& state, const ExternalFields& fields,
                                   const RotatorParams& params, const PropagatorConfig& cfg,
                                   double t_final) {
    if (!(t_final > state.time)) throw SimError("propagate: t_final must exceed state time");
    const long n_steps = std::lround((t_final - state.time) / cfg.dt);
    std::vector<SpinorField> frames;
    frames.reserve(static_cast<std::size_t>(n_steps / std::max(1, cfg.steps_per_output)) + 2);
    frames.push_back(state);
    SpinorField cur = state;
    for (long it = 1; it <= n_steps; ++it) {
        cur = step(cur, fields, params, cfg);
        if (it % std::max(1, cfg.steps_per_output) == 0 || it == n_steps) frames.push_back(cur);
    }
    return frames;
}

Observables observables(const SpinorField& state, const RotatorParams& params) {
    Observables ob;
    const double vol = state.grid.cell_volume();
    Vec3 xsum{}, ssum{};
    double nsum = 0.0;
    for (std::size_t n = 0; n < state.grid.total(); ++n) {
        const C2 v = state.at(n);
        const double rho = v.norm_sq();
        nsum += rho;
        const Vec3 x = state.grid.node(n);
        xsum += x * rho;
        for (int i = 0; i < 3; ++i)
            ssum[i] += 0.5 * params.hbar * v.dot(pauli(i) * v).real();
    }
    ob.norm = nsum * vol;
    ob.mean_position = xsum / nsum;
    ob.mean_spin = ssum / nsum;
    return ob;
}

}  // namespace rotator
