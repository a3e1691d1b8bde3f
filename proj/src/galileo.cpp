#include "rotator/galileo.hpp"

#include <cmath>
#include <sstream>

namespace rotator {

SpinHalfRotation SpinHalfRotation::from_epsilon(const Vec3& eps) {
    SpinHalfRotation r;
    r.S = Mat2c::identity();
    for (int i = 0; i < 3; ++i) r.S = r.S + pauli(i) * (0.5 * kI * eps[i]);
    r.a = Mat3::identity();
    // a_ij = delta_ij + eps_k eps_ijk
    r.a(0, 1) += eps[2];  r.a(1, 0) -= eps[2];
    r.a(1, 2) += eps[0];  r.a(2, 1) -= eps[0];
    r.a(2, 0) += eps[1];  r.a(0, 2) -= eps[1];

    // exact exponentials (Rodrigues)
    const double th = eps.norm();
    if (th < 1e-300) {
        r.S_exact = Mat2c::identity();
        r.a_exact = Mat3::identity();
        return r;
    }
    const Vec3 n = eps / th;
    Mat2c ns;
    for (int i = 0; i < 3; ++i) ns = ns + pauli(i) * cplx(n[i], 0.0);
    r.S_exact = Mat2c::identity() * cplx(std::cos(0.5 * th), 0.0) + ns * (kI * std::sin(0.5 * th));

    Mat3 K;  // K x = n cross x ... using the same sign convention as a
    K(0, 1) = n[2];  K(1, 0) = -n[2];
    K(1, 2) = n[0];  K(2, 1) = -n[0];
    K(2, 0) = n[1];  K(0, 2) = -n[1];
    Mat3 K2 = K * K;
    r.a_exact = Mat3::identity();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            r.a_exact(i, j) += std::sin(th) * K(i, j) + (1.0 - std::cos(th)) * K2(i, j);
    return r;
}

namespace {

void check_element_fits_grid(const GalileoElement& g, const GridSpec& grid) {
    for (int d = grid.dims; d < 3; ++d) {
        if (std::abs(g.c[d]) > 1e-14 || std::abs(g.w[d]) > 1e-14)
            throw ResampleOutOfBand("translation/boost along an inactive grid dimension");
    }
    if (grid.dims == 1 && g.epsilon.norm() > 1e-14)
        throw ResampleOutOfBand("rotation requires at least 2 active dimensions");
    if (grid.dims == 2 && (std::abs(g.epsilon[0]) > 1e-14 || std::abs(g.epsilon[1]) > 1e-14))
        throw ResampleOutOfBand("rotation axis must be normal to the 2-D grid plane");
}

}  // namespace

SpinorField transform_spinor_state(const SpinorField& state, const GalileoElement& g,
                                   const RotatorParams& params) {
    g.validate();
    check_element_fits_grid(g, state.grid);
    const SpinHalfRotation rot = SpinHalfRotation::from_epsilon(g.epsilon);
    const Mat3 a_inv = rot.a_exact.transpose();
    const Vec3 aw = rot.a_exact.transpose() * g.w;  // (a^T w) appears in chi
    const double t = state.time;

    const FieldEvaluator ev(state, DerivKind::spectral);
    SpinorField out = SpinorField::zeros(state.grid);
    out.time = t + g.d;
    for (std::size_t n = 0; n < state.grid.total(); ++n) {
        const Vec3 xp = state.grid.node(n);
        const Vec3 x = a_inv * (xp + g.w * t - g.c);
        const double chi = params.m * (0.5 * g.w.dot(g.w) * t - aw.dot(x));
        const C2 val = rot.S_exact * ev.value(x) * std::polar(1.0, chi / params.hbar);
        out.set(n, val);
    }
    return out;
}

EulerTriple transform_angles(const EulerTriple& angles, const Vec3& eta, double pole_margin) {
    const AMatrix A = a_matrix(angles, pole_margin);
    EulerTriple out = angles;
    for (int i = 0; i < 3; ++i) {
        out.alpha += eta[i] * A.a(i, 0);
        out.beta += eta[i] * A.a(i, 1);
        out.gamma += eta[i] * A.a(i, 2);
    }
    return out.wrapped();
}

double angle_map_jacobian_det(const EulerTriple& angles, const Vec3& eta, double pole_margin) {
    Mat3 J = Mat3::identity();
    for (int r = 0; r < 3; ++r)
        for (int s = 0; s < 3; ++s) {
            double sum = 0.0;
            for (int i = 0; i < 3; ++i)
                sum += eta[i] * a_matrix_jet(i, r, angles, pole_margin).d[s].real();
            J(r, s) += sum;
        }
    return J.det();
}

ExternalFields transform_fields(const ExternalFields& fields, const GalileoElement& g) {
    g.validate();
    const SpinHalfRotation rot = SpinHalfRotation::from_epsilon(g.epsilon);
    const Mat3 a = rot.a_exact;
    const Mat3 a_inv = a.transpose();
    const Vec3 aw = a.transpose() * g.w;
    const GalileoElement ge = g;
    const ExternalFields src = fields;

    ExternalFields out;
    out.mode = fields.mode;
    out.curl_tolerance = fields.curl_tolerance;
    out.a_uniform = fields.a_uniform;
    out.A = [src, a, a_inv, ge](const Vec3& xp, double tp) {
        const double t = tp - ge.d;
        const Vec3 x = a_inv * (xp + ge.w * t - ge.c);
        return a * src.A(x, t);
    };
    out.B = [src, a, a_inv, ge](const Vec3& xp, double tp) {
        const double t = tp - ge.d;
        const Vec3 x = a_inv * (xp + ge.w * t - ge.c);
        return a * src.B(x, t);
    };
    out.V = [src, a_inv, aw, ge](const Vec3& xp, double tp) {
        const double t = tp - ge.d;
        const Vec3 x = a_inv * (xp + ge.w * t - ge.c);
        return src.V(x, t) - aw.dot(src.A(x, t));
    };
    return out;
}

Trajectory transform_trajectory(const Trajectory& traj, const GalileoElement& g) {
    g.validate();
    const SpinHalfRotation rot = SpinHalfRotation::from_epsilon(g.epsilon);
    Trajectory out;
    out.status = traj.status;
    out.rho_at_particle = traj.rho_at_particle;
    out.conserved_density_log = traj.conserved_density_log;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const double t = traj.times[k];
        out.times.push_back(t + g.d);
        out.q.push_back(rot.a_exact * traj.q[k] - g.w * t + g.c);
        // theta' = theta - eps_i A_i^r(theta), the eta = -eps convention
        out.theta.push_back(transform_angles(traj.theta[k], -g.epsilon));
        out.spin_diag.push_back(rot.a_exact * traj.spin_diag[k]);
    }
    return out;
}

double correspondence_eq40_residual(const Vec3& eps, const std::vector<EulerTriple>& samples) {
    const SpinHalfRotation rot = SpinHalfRotation::from_epsilon(eps);
    double worst = 0.0;
    for (const EulerTriple& an : samples) {
        for (int a = 1; a <= 2; ++a) {
            const AngJet2 ua = basis_jet(a, an);
            // D(eps) u_a = u_a + (i/hbar) eps_i M_i u_a  (hbar cancels)
            cplx lhs = ua.v;
            for (int i = 0; i < 3; ++i)
                lhs += kI * eps[i] * apply_angular_momentum_jet(i, ua, 1.0, an).v;
            // u_b S^b_a with the generator-form S
            const cplx u1 = basis_jet(1, an).v, u2 = basis_jet(2, an).v;
            const cplx rhs = u1 * rot.S(0, a - 1) + u2 * rot.S(1, a - 1);
            worst = std::max(worst, std::abs(lhs - rhs));
        }
    }
    return worst;
}

double pushforward_eq43_residual(const Vec3& eta, const EulerTriple& an, const C2& coeffs,
                                 const RotatorParams& params) {
    const EulerTriple anp = transform_angles(an, eta);
    const SpinHalfRotation rot = SpinHalfRotation::from_epsilon(Vec3{} - eta);
    // coefficients of D(-eta) F
    C2 shifted = coeffs;
    for (int i = 0; i < 3; ++i)
        shifted = shifted - pauli(i) * coeffs * (0.5 * kI * eta[i]);

    double worst = 0.0;
    for (int i = 0; i < 3; ++i) {
        const C2 lhs_c = apply_angular_momentum(i, shifted, params.hbar);
        const BasisPair up = basis_u(anp);
        const cplx lhs = lhs_c.a * up.u1 + lhs_c.b * up.u2;

        cplx rhs = 0.0;
        const BasisPair u = basis_u(an);
        for (int k = 0; k < 3; ++k) {
            const C2 mk = apply_angular_momentum(k, coeffs, params.hbar);
            rhs += rot.a(i, k) * (mk.a * u.u1 + mk.b * u.u2);
        }
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Covariance pipelines
// ---------------------------------------------------------------------------

namespace {

std::string describe(const GalileoElement& g) {
    std::ostringstream os;
    os << "d=" << g.d << " c=(" << g.c[0] << "," << g.c[1] << "," << g.c[2] << ")"
       << " eps=(" << g.epsilon[0] << "," << g.epsilon[1] << "," << g.epsilon[2] << ")"
       << " w=(" << g.w[0] << "," << g.w[1] << "," << g.w[2] << ")";
    return os.str();
}

double phase_aligned_state_residual(const SpinorField& a, const SpinorField& b) {
    // global phase fixed at the largest-magnitude value of a
    std::size_t best = 0;
    double best_mag = -1.0;
    for (std::size_t n = 0; n < a.grid.total(); ++n) {
        const double m = a.at(n).norm_sq();
        if (m > best_mag) {
            best_mag = m;
            best = n;
        }
    }
    const cplx va = a.comp[0][best] != 0.0 ? a.comp[0][best] : a.comp[1][best];
    const cplx vb = b.comp[0][best] != 0.0 ? b.comp[0][best] : b.comp[1][best];
    cplx phase = 1.0;
    if (std::abs(vb) > 0.0) phase = (va / vb) / std::abs(va / vb);

    double num = 0.0, scale = 0.0;
    for (std::size_t n = 0; n < a.grid.total(); ++n) {
        const C2 da = a.at(n);
        const C2 db = b.at(n) * phase;
        num = std::max(num, std::abs(da.a - db.a));
        num = std::max(num, std::abs(da.b - db.b));
        scale = std::max(scale, std::sqrt(da.norm_sq()));
    }
    return num / scale;
}

double circular_distance(double a, double b, double period) {
    double d = std::abs(std::fmod(a - b, period));
    return std::min(d, period - d);
}

}  // namespace

CovarianceReport covariance_residual(const CovarianceScenario& sc, const GalileoElement& g,
                                     int n_threads) {
    g.validate();
    CovarianceReport rep;
    rep.element = describe(g);

    const SpinHalfRotation rot = SpinHalfRotation::from_epsilon(g.epsilon);
    IntegrationOptions opt;
    opt.dt = sc.traj_dt;

    // pipeline A: propagate in the original frame, then transform
    const SpinorField st0 = init_state(sc.grid, sc.initial);
    auto framesA = propagate(st0, sc.fields, sc.params, sc.prop, sc.t_final);
    const SpinorField endA = framesA.back();
    SnapshotSeries seriesA(std::move(framesA));
    const Trajectory trajA = integrate_trajectory(sc.q0, sc.theta0, VelocityMode::rotator,
                                                  seriesA, sc.fields, sc.params, opt);
    const SpinorField endA_transformed = transform_spinor_state(endA, g, sc.params);
    const Trajectory trajA_transformed = transform_trajectory(trajA, g);

    // pipeline B: transform the initial data and fields, then propagate
    const SpinorField st0B = transform_spinor_state(st0, g, sc.params);
    const ExternalFields fieldsB = transform_fields(sc.fields, g);
    const Vec3 q0B = rot.a_exact * sc.q0 + g.c;  // t0 = 0
    const EulerTriple theta0B = transform_angles(sc.theta0, Vec3{} - g.epsilon);
    auto framesB = propagate(st0B, fieldsB, sc.params, sc.prop, sc.t_final + g.d);
    const SpinorField endB = framesB.back();
    SnapshotSeries seriesB(std::move(framesB));
    const Trajectory trajB = integrate_trajectory(q0B, theta0B, VelocityMode::rotator, seriesB,
                                                  fieldsB, sc.params, opt);

    rep.state_residual = phase_aligned_state_residual(endA_transformed, endB);

    // trajectories share step times modulo the time shift
    const std::size_t nk = std::min(trajA_transformed.size(), trajB.size());
    for (std::size_t k = 0; k < nk; ++k) {
        const Vec3 dq = trajA_transformed.q[k] - trajB.q[k];
        rep.trajectory_residual_q = std::max(rep.trajectory_residual_q, dq.norm());
        const EulerTriple ta = trajA_transformed.theta[k], tb = trajB.theta[k];
        double dth = std::abs(ta.alpha - tb.alpha);
        dth = std::max(dth, circular_distance(ta.beta, tb.beta, 2.0 * kPi));
        dth = std::max(dth, circular_distance(ta.gamma, tb.gamma, 4.0 * kPi));
        rep.trajectory_residual_theta = std::max(rep.trajectory_residual_theta, dth);
    }

    // spin vector: rotate frame-A mean spin into frame B
    const Vec3 sA = rot.a_exact * observables(endA, sc.params).mean_spin;
    const Vec3 sB = observables(endB, sc.params).mean_spin;
    rep.spin_residual = (sA - sB).norm() / sc.params.hbar;

    // mollified unified field around the particle, compared on frame-B nodes
    MollifiedParticle pA{trajA.q.back(), trajA.theta.back(), sc.mollifier_width_x,
                         sc.mollifier_width_angle};
    MollifiedParticle pB{trajB.q.back(), trajB.theta.back(), sc.mollifier_width_x,
                         sc.mollifier_width_angle};
    const FieldEvaluator evA(endA, DerivKind::spectral);
    const FieldEvaluator evB(endB, DerivKind::spectral);
    const Mat3 a_inv = rot.a_exact.transpose();
    const Vec3 aw = rot.a_exact.transpose() * g.w;
    const double tA = endA.time;

    double u_res = 0.0, u_scale = 0.0;
    const GridSpec& grid = sc.grid;
    for (int off = -2; off <= 2; ++off) {
        for (int axis = 0; axis < grid.dims; ++axis) {
            Vec3 xp = pB.q;
            xp[axis] += off * grid.spacing(axis);
            const Vec3 x = a_inv * (xp + g.w * tA - g.c);
            const double chi = sc.params.m * (0.5 * g.w.dot(g.w) * tA - aw.dot(x));
            const C2 uA = unified_field_discrete(evA, pA, x);
            const C2 uA_tr = rot.S_exact * uA * std::polar(1.0, chi / sc.params.hbar);
            const C2 uB = unified_field_discrete(evB, pB, xp);
            u_res = std::max(u_res, std::abs(uA_tr.a - uB.a));
            u_res = std::max(u_res, std::abs(uA_tr.b - uB.b));
            u_scale = std::max(u_scale, std::sqrt(uB.norm_sq()));
        }
    }
    rep.unified_residual = u_scale > 0.0 ? u_res / u_scale : 0.0;
    (void)n_threads;
    return rep;
}

}  // namespace rotator
