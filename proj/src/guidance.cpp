#include "rotator/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace rotator {

// ---------------------------------------------------------------------------
// SnapshotSeries
// ---------------------------------------------------------------------------

SnapshotSeries::SnapshotSeries(std::vector<SpinorField> frames, DerivKind kind)
    : frames_(std::move(frames)) {
    if (frames_.empty()) throw SimError("SnapshotSeries: no frames");
    evals_.reserve(frames_.size());
    for (const SpinorField& f : frames_) {
        evals_.emplace_back(f, kind);
        max_density_ = std::max(max_density_, evals_.back().max_angular_density());
    }
}

SpinorJet SnapshotSeries::jet(const Vec3& x, double t, bool need_second) const {
    if (frames_.size() == 1) return evals_[0].jet(x, need_second);
    // clamp a hair beyond the ends so RK4 stages at t_end evaluate cleanly
    const double t0 = t_begin(), t1 = t_end();
    const double tc = std::clamp(t, t0, t1);
    auto it = std::upper_bound(frames_.begin(), frames_.end(), tc,
                               [](double v, const SpinorField& f) { return v < f.time; });
    std::size_t hi = static_cast<std::size_t>(it - frames_.begin());
    hi = std::min(std::max<std::size_t>(hi, 1), frames_.size() - 1);
    const std::size_t lo = hi - 1;
    const double span = frames_[hi].time - frames_[lo].time;
    const double s = span > 0.0 ? (tc - frames_[lo].time) / span : 0.0;

    const SpinorJet ja = evals_[lo].jet(x, need_second);
    const SpinorJet jb = evals_[hi].jet(x, need_second);
    SpinorJet out;
    const double w0 = 1.0 - s;
    out.psi = ja.psi * w0 + jb.psi * s;
    for (int d = 0; d < 3; ++d) {
        out.dpsi[d] = ja.dpsi[d] * w0 + jb.dpsi[d] * s;
        out.d2psi[d] = ja.d2psi[d] * w0 + jb.d2psi[d] * s;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Velocities
// ---------------------------------------------------------------------------

Vec3 velocity_translational_from_jet(const SpinorJet& jet, const FieldSample& fs,
                                     const EulerTriple& angles, const RotatorParams& params,
                                     double threshold_abs, int dims) {
    const LocalState ls = kernels_from_jet(jet, angles, params, threshold_abs);
    Vec3 v;
    for (int d = 0; d < dims; ++d) v[d] = (ls.dS_x[d] - fs.A[d]) / params.m;
    return v;
}

Vec3 velocity_translational(const FieldEvaluator& ev, const ExternalFields& fields, const Vec3& x,
                            const EulerTriple& angles, const RotatorParams& params,
                            const NodeThreshold& thr) {
    const FieldSample fs = eval_external_fields(fields, x, ev.field().time);
    return velocity_translational_from_jet(ev.jet(x, false), fs, angles, params,
                                           thr.absolute(ev), ev.field().grid.dims);
}

Vec3 velocity_angular_from_jet(const SpinorJet& jet, const FieldSample& fs,
                               const EulerTriple& angles, const RotatorParams& params,
                               double threshold_abs, double pole_margin) {
    const LocalState ls = kernels_from_jet(jet, angles, params, threshold_abs);
    const AMatrix A = a_matrix(angles, pole_margin);
    Vec3 v;
    for (int r = 0; r < 3; ++r) {
        double s = 0.0;
        for (int i = 0; i < 3; ++i)
            s += A.a(i, r) * (ls.MS[i] + params.mm * params.I * fs.B[i]);
        v[r] = s / params.I;
    }
    return v;
}

Vec3 velocity_angular(const FieldEvaluator& ev, const ExternalFields& fields, const Vec3& x,
                      const EulerTriple& angles, const RotatorParams& params,
                      const NodeThreshold& thr, double pole_margin) {
    const FieldSample fs = eval_external_fields(fields, x, ev.field().time);
    return velocity_angular_from_jet(ev.jet(x, false), fs, angles, params, thr.absolute(ev),
                                     pole_margin);
}

Vec3 velocity_pauli_from_jet(const SpinorJet& jet, const FieldSample& fs,
                             const RotatorParams& params, double threshold_abs, int dims) {
    const double den = jet.psi.norm_sq();
    if (den < threshold_abs * 8.0 * kPi * kPi)
        throw NodeSingularity("velocity_pauli: Psi^dag Psi below threshold");
    Vec3 v;
    for (int d = 0; d < dims; ++d) {
        const cplx cur = jet.psi.dot(jet.dpsi[d]);  // Psi^dag d_i Psi
        v[d] = (params.hbar * cur.imag() / den - fs.A[d]) / params.m;
    }
    return v;
}

Vec3 velocity_pauli(const FieldEvaluator& ev, const ExternalFields& fields, const Vec3& x,
                    const RotatorParams& params, const NodeThreshold& thr) {
    const FieldSample fs = eval_external_fields(fields, x, ev.field().time);
    return velocity_pauli_from_jet(ev.jet(x, false), fs, params,
                                   thr.rel * ev.max_angular_density(), ev.field().grid.dims);
}

Vec3 velocity_spin_supplement_from_jet(const SpinorJet& jet, const RotatorParams& params,
                                       double threshold_abs) {
    const double den = jet.psi.norm_sq();
    if (den < threshold_abs * 8.0 * kPi * kPi)
        throw NodeSingularity("velocity_spin_supplement: Psi^dag Psi below threshold");
    // d_j (Psi^dag Psi s_k) = (hbar/2) * 2 Re(Psi^dag sigma_k d_j Psi)
    Mat3 grad_rho_s;  // [j][k]
    for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
            grad_rho_s(j, k) = params.hbar * jet.psi.dot(pauli(k) * jet.dpsi[j]).real();
    Vec3 v;
    for (int i = 0; i < 3; ++i) {
        const int j = (i + 1) % 3, k = (i + 2) % 3;
        v[i] = (grad_rho_s(j, k) - grad_rho_s(k, j)) / (params.m * den);
    }
    return v;
}

Vec3 velocity_spin_supplement(const FieldEvaluator& ev, const Vec3& x,
                              const RotatorParams& params, const NodeThreshold& thr) {
    return velocity_spin_supplement_from_jet(ev.jet(x, false), params,
                                             thr.rel * ev.max_angular_density());
}

// ---------------------------------------------------------------------------
// Trajectory integration
// ---------------------------------------------------------------------------

namespace {

struct PhaseState {
    Vec3 q;
    Vec3 th;  // unwrapped working copy of the Euler angles
};

PhaseState derivative(const PhaseState& y, double t, VelocityMode mode,
                      const SnapshotSeries& series, const ExternalFields& fields,
                      const RotatorParams& params, double thr_abs, double pole_margin,
                      int dims) {
    const SpinorJet jet = series.jet(y.q, t, false);
    const FieldSample fs = eval_external_fields(fields, y.q, t);
    const EulerTriple an = EulerTriple{y.th[0], y.th[1], y.th[2]}.wrapped();
    PhaseState dy{};
    switch (mode) {
        case VelocityMode::rotator:
            dy.q = velocity_translational_from_jet(jet, fs, an, params, thr_abs, dims);
            dy.th = velocity_angular_from_jet(jet, fs, an, params, thr_abs, pole_margin);
            break;
        case VelocityMode::pauli:
            dy.q = velocity_pauli_from_jet(jet, fs, params, thr_abs, dims);
            break;
        case VelocityMode::pauli_plus_spin:
            dy.q = velocity_pauli_from_jet(jet, fs, params, thr_abs, dims);
            dy.q += velocity_spin_supplement_from_jet(jet, params, thr_abs);
            break;
    }
    return dy;
}

}  // namespace

Trajectory integrate_trajectory(const Vec3& q0, const EulerTriple& theta0, VelocityMode mode,
                                const SnapshotSeries& series, const ExternalFields& fields,
                                const RotatorParams& params, const IntegrationOptions& opt) {
    Trajectory traj;
    const double thr_abs = series.threshold_abs(opt.node_threshold);
    const int dims = series.frame(0).grid.dims;
    const double t0 = series.t_begin(), t1 = series.t_end();
    const long n_steps = std::lround((t1 - t0) / opt.dt);

    PhaseState y{q0, {{theta0.alpha, theta0.beta, theta0.gamma}}};

    auto record = [&](double t) {
        const EulerTriple an = EulerTriple{y.th[0], y.th[1], y.th[2]}.wrapped();
        traj.times.push_back(t);
        traj.q.push_back(y.q);
        traj.theta.push_back(an);
        const SpinorJet jet = series.jet(y.q, t, false);
        if (mode == VelocityMode::rotator) {
            const BasisPair u = basis_u(an);
            const double rho = std::norm(jet.psi.a * u.u1 + jet.psi.b * u.u2);
            traj.rho_at_particle.push_back(rho);
            traj.conserved_density_log.push_back(std::log(rho * std::abs(std::sin(an.alpha))));
            const FieldSample fs = eval_external_fields(fields, y.q, t);
            const Vec3 vth =
                velocity_angular_from_jet(jet, fs, an, params, thr_abs, opt.pole_margin);
            const AMatrix A = a_matrix(an, opt.pole_margin);
            Vec3 body;
            for (int i = 0; i < 3; ++i) {
                double s = 0.0;
                for (int r = 0; r < 3; ++r) s += A.a(i, r) * vth[r];
                body[i] = params.I * s;
            }
            traj.spin_diag.push_back(body);
        } else {
            const double den = jet.psi.norm_sq();
            traj.rho_at_particle.push_back(den);
            traj.conserved_density_log.push_back(std::log(den));
            Vec3 s;
            for (int i = 0; i < 3; ++i)
                s[i] = 0.5 * params.hbar * jet.psi.dot(pauli(i) * jet.psi).real() / den;
            traj.spin_diag.push_back(s);
        }
    };

    try {
        record(t0);
        for (long it = 0; it < n_steps; ++it) {
            const double t = t0 + it * opt.dt;
            const double h = opt.dt;
            const PhaseState k1 = derivative(y, t, mode, series, fields, params, thr_abs,
                                             opt.pole_margin, dims);
            PhaseState y2{y.q + k1.q * (0.5 * h), y.th + k1.th * (0.5 * h)};
            const PhaseState k2 = derivative(y2, t + 0.5 * h, mode, series, fields, params,
                                             thr_abs, opt.pole_margin, dims);
            PhaseState y3{y.q + k2.q * (0.5 * h), y.th + k2.th * (0.5 * h)};
            const PhaseState k3 = derivative(y3, t + 0.5 * h, mode, series, fields, params,
                                             thr_abs, opt.pole_margin, dims);
            PhaseState y4{y.q + k3.q * h, y.th + k3.th * h};
            const PhaseState k4 = derivative(y4, t + h, mode, series, fields, params, thr_abs,
                                             opt.pole_margin, dims);
            y.q += (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q) * (h / 6.0);
            y.th += (k1.th + 2.0 * k2.th + 2.0 * k3.th + k4.th) * (h / 6.0);
            // wrap after the full step
            const EulerTriple w = EulerTriple{y.th[0], y.th[1], y.th[2]}.wrapped();
            y.th = {{w.alpha, w.beta, w.gamma}};
            if ((it + 1) % opt.record_stride == 0 || it + 1 == n_steps) record(t + h);
        }
    } catch (const NodeSingularity&) {
        traj.status = Trajectory::Status::node_abort;
    } catch (const PoleSingularity&) {
        traj.status = Trajectory::Status::pole_abort;
    }
    return traj;
}

double free_spinup_rate(const EulerTriple& theta0, const RotatorParams& params,
                        double pole_margin) {
    const double c = std::cos(0.5 * theta0.alpha);
    if (std::abs(c) < pole_margin)
        throw PoleSingularity("free_spinup: theta0_1 at the u1 zero (alpha = pi)");
    return params.hbar / (4.0 * params.I * c * c);
}

EulerTriple free_spinup_analytic(const EulerTriple& theta0, const RotatorParams& params, double t,
                                 double pole_margin) {
    const double nu = free_spinup_rate(theta0, params, pole_margin);
    return EulerTriple{theta0.alpha, theta0.beta - nu * t, theta0.gamma - nu * t}.wrapped();
}

// ---------------------------------------------------------------------------
// Ensembles
// ---------------------------------------------------------------------------

std::vector<std::pair<Vec3, EulerTriple>> sample_initial_points(const EnsembleSpec& spec,
                                                                const SnapshotSeries& series) {
    if (spec.count < 1) throw SimError("EnsembleSpec: count must be >= 1");
    std::vector<std::pair<Vec3, EulerTriple>> pts;
    if (spec.sampling == EnsembleSpec::Sampling::explicit_list) {
        if (static_cast<int>(spec.points.size()) < spec.count)
            throw SimError("EnsembleSpec: explicit list shorter than count");
        pts.assign(spec.points.begin(), spec.points.begin() + spec.count);
        return pts;
    }

    const FieldEvaluator& ev = series.evaluator(0);
    const GridSpec& g = series.frame(0).grid;
    Rng rng(spec.seed);
    auto draw_point = [&](Rng& r) {
        Vec3 x;
        for (int d = 0; d < g.dims; ++d) x[d] = r.uniform(0.0, g.extent[d]);
        EulerTriple an{r.uniform(0.0, kPi), r.uniform(0.0, 2.0 * kPi), r.uniform(0.0, 4.0 * kPi)};
        return std::make_pair(x, an);
    };

    if (spec.sampling == EnsembleSpec::Sampling::uniform) {
        for (int n = 0; n < spec.count; ++n) pts.push_back(draw_point(rng));
        return pts;
    }

    // density_weighted: rejection from |psi|^2 sin(alpha), with the envelope
    // bound max_angular_density >= rho pointwise
    const double bound = ev.max_angular_density();
    const long max_attempts = 1000000;
    long attempts = 0;
    while (static_cast<int>(pts.size()) < spec.count) {
        if (++attempts > max_attempts)
            throw SamplingFailure("density-weighted rejection exceeded 1e6 attempts");
        auto [x, an] = draw_point(rng);
        const double target = rho_at(ev, x, an) * std::sin(an.alpha);
        if (rng.uniform() * bound < target) pts.emplace_back(x, an);
    }
    return pts;
}

std::vector<Trajectory> run_ensemble(const EnsembleSpec& spec, VelocityMode mode,
                                     const SnapshotSeries& series, const ExternalFields& fields,
                                     const RotatorParams& params, const IntegrationOptions& opt,
                                     int n_threads) {
    const auto pts = sample_initial_points(spec, series);
    std::vector<Trajectory> out(pts.size());

    auto worker = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            out[i] = integrate_trajectory(pts[i].first, pts[i].second, mode, series, fields,
                                          params, opt);
    };

    const int nt = std::max(1, n_threads);
    if (nt == 1 || pts.size() < 2) {
        worker(0, pts.size());
    } else {
        // static partition; each slot written by exactly one thread, so the
        // result is bitwise identical for any thread count
        std::vector<std::thread> pool;
        const std::size_t chunk = (pts.size() + nt - 1) / nt;
        for (int tix = 0; tix < nt; ++tix) {
            const std::size_t b = tix * chunk;
            const std::size_t e = std::min(pts.size(), b + chunk);
            if (b >= e) break;
            pool.emplace_back(worker, b, e);
        }
        for (auto& th : pool) th.join();
    }
    return out;
}

}  // namespace rotator
