#include "rotator/unified_source.hpp"

#include <cmath>

namespace rotator {

// ---------------------------------------------------------------------------
// SpaceJet arithmetic
// ---------------------------------------------------------------------------

SpaceJet SpaceJet::operator+(const SpaceJet& o) const {
    SpaceJet r;
    r.v = v + o.v;
    r.dt = dt + o.dt;
    for (int i = 0; i < 3; ++i) {
        r.d[i] = d[i] + o.d[i];
        r.d2[i] = d2[i] + o.d2[i];
    }
    return r;
}

SpaceJet SpaceJet::operator-(const SpaceJet& o) const {
    SpaceJet r;
    r.v = v - o.v;
    r.dt = dt - o.dt;
    for (int i = 0; i < 3; ++i) {
        r.d[i] = d[i] - o.d[i];
        r.d2[i] = d2[i] - o.d2[i];
    }
    return r;
}

SpaceJet SpaceJet::operator*(const SpaceJet& o) const {
    SpaceJet r;
    r.v = v * o.v;
    r.dt = dt * o.v + v * o.dt;
    for (int i = 0; i < 3; ++i) {
        r.d[i] = d[i] * o.v + v * o.d[i];
        r.d2[i] = d2[i] * o.v + 2.0 * d[i] * o.d[i] + v * o.d2[i];
    }
    return r;
}

SpaceJet SpaceJet::operator/(const SpaceJet& o) const {
    SpaceJet r;
    r.v = v / o.v;
    r.dt = (dt - r.v * o.dt) / o.v;
    for (int i = 0; i < 3; ++i) {
        r.d[i] = (d[i] - r.v * o.d[i]) / o.v;
        r.d2[i] = (d2[i] - r.v * o.d2[i] - 2.0 * r.d[i] * o.d[i]) / o.v;
    }
    return r;
}

SpaceJet SpaceJet::operator*(cplx s) const {
    SpaceJet r;
    r.v = v * s;
    r.dt = dt * s;
    for (int i = 0; i < 3; ++i) {
        r.d[i] = d[i] * s;
        r.d2[i] = d2[i] * s;
    }
    return r;
}

SpaceJet SpaceJet::conj() const {
    SpaceJet r;
    r.v = std::conj(v);
    r.dt = std::conj(dt);
    for (int i = 0; i < 3; ++i) {
        r.d[i] = std::conj(d[i]);
        r.d2[i] = std::conj(d2[i]);
    }
    return r;
}

SpaceJet SpaceJet::log() const {
    SpaceJet r;
    r.v = std::log(v);
    r.dt = dt / v;
    for (int i = 0; i < 3; ++i) {
        r.d[i] = d[i] / v;
        r.d2[i] = d2[i] / v - d[i] * d[i] / (v * v);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Mollifier building blocks
// ---------------------------------------------------------------------------

Jet1D wrapped_gaussian_jet(double x, double center, double sigma, double period) {
    double u = std::fmod(x - center, period);
    if (u < -0.5 * period) u += period;
    if (u >= 0.5 * period) u -= period;
    const int K = 2 + static_cast<int>(8.0 * sigma / period);
    const double norm = 1.0 / (sigma * std::sqrt(2.0 * kPi));
    Jet1D j;
    for (int n = -K; n <= K; ++n) {
        const double s = u + n * period;
        const double g = norm * std::exp(-0.5 * s * s / (sigma * sigma));
        j.v += g;
        j.d += -s / (sigma * sigma) * g;
        j.d2 += (s * s / (sigma * sigma) - 1.0) / (sigma * sigma) * g;
    }
    return j;
}

Jet1D cos_window_jet(double alpha, double c_center, double c_sigma) {
    const double rt2 = std::sqrt(2.0);
    const double z = c_sigma * std::sqrt(0.5 * kPi) *
                     (std::erf((1.0 - c_center) / (rt2 * c_sigma)) -
                      std::erf((-1.0 - c_center) / (rt2 * c_sigma)));
    const double c = std::cos(alpha), s = std::sin(alpha);
    const double u = c - c_center;
    const double m = std::exp(-0.5 * u * u / (c_sigma * c_sigma)) / z;
    const double mp = -u / (c_sigma * c_sigma) * m;
    const double mpp = (u * u / (c_sigma * c_sigma) - 1.0) / (c_sigma * c_sigma) * m;
    Jet1D j;
    j.v = m;
    j.d = -s * mp;              // d/d alpha through c = cos alpha
    j.d2 = s * s * mpp - c * mp;
    return j;
}

namespace {

AngJet2 jet_alpha_only(double v, double d, double d2) {
    AngJet2 j;
    j.v = v;
    j.d[0] = d;
    j.h[0][0] = d2;
    return j;
}

// separable angular jet from per-angle 1-D jets
AngJet2 separable_ang_jet(const Jet1D& A, const Jet1D& B, const Jet1D& C) {
    AngJet2 j;
    j.v = A.v * B.v * C.v;
    j.d[0] = A.d * B.v * C.v;
    j.d[1] = A.v * B.d * C.v;
    j.d[2] = A.v * B.v * C.d;
    j.h[0][0] = A.d2 * B.v * C.v;
    j.h[1][1] = A.v * B.d2 * C.v;
    j.h[2][2] = A.v * B.v * C.d2;
    j.h[0][1] = j.h[1][0] = A.d * B.d * C.v;
    j.h[0][2] = j.h[2][0] = A.d * B.v * C.d;
    j.h[1][2] = j.h[2][1] = A.v * B.d * C.d;
    return j;
}

}  // namespace

AngJet2 ang_jet_one() { return AngJet2::constant(1.0); }
AngJet2 ang_jet_cos_alpha(const EulerTriple& an) {
    return jet_alpha_only(std::cos(an.alpha), -std::sin(an.alpha), -std::cos(an.alpha));
}
AngJet2 ang_jet_sin_alpha(const EulerTriple& an) {
    return jet_alpha_only(std::sin(an.alpha), std::cos(an.alpha), -std::sin(an.alpha));
}
AngJet2 ang_jet_cos_beta(const EulerTriple& an) {
    AngJet2 j;
    j.v = std::cos(an.beta);
    j.d[1] = -std::sin(an.beta);
    j.h[1][1] = -std::cos(an.beta);
    return j;
}
AngJet2 ang_jet_sin_beta(const EulerTriple& an) {
    AngJet2 j;
    j.v = std::sin(an.beta);
    j.d[1] = std::cos(an.beta);
    j.h[1][1] = -std::sin(an.beta);
    return j;
}
AngJet2 ang_jet_cos_half_gamma(const EulerTriple& an) {
    AngJet2 j;
    j.v = std::cos(0.5 * an.gamma);
    j.d[2] = -0.5 * std::sin(0.5 * an.gamma);
    j.h[2][2] = -0.25 * std::cos(0.5 * an.gamma);
    return j;
}

SmoothDensityF mollified_particle_f(const MollifiedParticle& p, const GridSpec& grid) {
    const double st = std::sin(p.theta.alpha);
    if (st < 1e-6)
        throw PoleSingularity("mollified_particle_f: particle orientation at chart pole");
    const double wc = p.width_angle * st;
    const MollifiedParticle pc = p;
    const GridSpec g = grid;

    SmoothDensityF f;
    f.spatial = [pc, g](const Vec3& x, double) {
        SpaceJet j = SpaceJet::constant(1.0);
        for (int d = 0; d < g.dims; ++d) {
            const Jet1D w = wrapped_gaussian_jet(x[d], pc.q[d], pc.width_x, g.extent[d]);
            SpaceJet axis = SpaceJet::constant(w.v);
            axis.d[d] = w.d;
            axis.d2[d] = w.d2;
            j = j * axis;
        }
        return j;
    };
    f.angular = [pc, wc](const EulerTriple& an) {
        const Jet1D A = cos_window_jet(an.alpha, std::cos(pc.theta.alpha), wc);
        const Jet1D B = wrapped_gaussian_jet(an.beta, pc.theta.beta, pc.width_angle, 2.0 * kPi);
        const Jet1D C = wrapped_gaussian_jet(an.gamma, pc.theta.gamma, pc.width_angle, 4.0 * kPi);
        return separable_ang_jet(A, B, C);
    };
    return f;
}

ModulationFunctions modulation_at(const EulerTriple& an) {
    const BasisPair u = basis_u(an);
    ModulationFunctions m;
    m.v11 = m.v22 = 1.0;
    m.v21 = std::conj(u.u2) / std::conj(u.u1);
    m.v12 = std::conj(u.u1) / std::conj(u.u2);
    return m;
}

// ---------------------------------------------------------------------------
// Analytic free packet
// ---------------------------------------------------------------------------

SpaceJet FreePacketPsi::scalar_jet(const Vec3& x, double t, const RotatorParams& p) const {
    SpaceJet total = SpaceJet::constant(1.0);
    for (int d = 0; d < dims; ++d) {
        const double s2 = sigma * sigma;
        const cplx a = 1.0 + kI * p.hbar * t / (2.0 * p.m * s2);
        const double v = p.hbar * k[d] / p.m;
        const double X = x[d] - center[d] - v * t;
        const cplx D = 4.0 * s2 * a;
        const cplx norm = std::pow(2.0 * kPi * s2, -0.25) / std::sqrt(a);
        const cplx expo = kI * k[d] * (x[d] - center[d]) -
                          kI * p.hbar * k[d] * k[d] * t / (2.0 * p.m) - X * X / D;
        const cplx val = norm * std::exp(expo);

        SpaceJet axis = SpaceJet::constant(val);
        const cplx dlog = kI * k[d] - 2.0 * X / D;
        axis.d[d] = dlog * val;
        axis.d2[d] = (dlog * dlog - 2.0 / D) * val;
        const cplx ap = kI * p.hbar / (2.0 * p.m * s2);
        const cplx Dp = 4.0 * s2 * ap;
        const cplx dtlog = -0.5 * ap / a - kI * p.hbar * k[d] * k[d] / (2.0 * p.m) +
                           2.0 * X * v / D + X * X * Dp / (D * D);
        axis.dt = dtlog * val;
        total = total * axis;
    }
    // Casimir phase of the spin-1/2 angular sector
    const double wc = 3.0 * p.hbar / (8.0 * p.I);
    SpaceJet phase = SpaceJet::constant(std::polar(1.0, -wc * t));
    phase.dt = -kI * wc * phase.v;
    return total * phase;
}

C2 FreePacketPsi::spinor_at(const Vec3& x, double t, const RotatorParams& p) const {
    const cplx s = scalar_jet(x, t, p).v;
    return chi * s;
}

SpinorField FreePacketPsi::sample(const GridSpec& grid, double t, const RotatorParams& p) const {
    SpinorField f = SpinorField::zeros(grid);
    for (std::size_t n = 0; n < grid.total(); ++n) f.set(n, spinor_at(grid.node(n), t, p));
    f.time = t;
    return f;
}

// ---------------------------------------------------------------------------
// Source term G and the identity residual
// ---------------------------------------------------------------------------

namespace {

// unit-l inverse angular metric
Mat3 unit_inverse_metric(double alpha) {
    const double s = std::sin(alpha);
    const double cot = std::cos(alpha) / s, csc = 1.0 / s;
    Mat3 g;
    g(0, 0) = 1.0;
    g(1, 1) = csc * csc;
    g(2, 2) = csc * csc;
    g(1, 2) = g(2, 1) = -cot * csc;
    return g;
}

SpaceJet spatial_psi_jet(const SpinorJet& sj, const BasisPair& u) {
    SpaceJet j;
    j.v = sj.psi.a * u.u1 + sj.psi.b * u.u2;
    for (int d = 0; d < 3; ++d) {
        j.d[d] = sj.dpsi[d].a * u.u1 + sj.dpsi[d].b * u.u2;
        j.d2[d] = sj.d2psi[d].a * u.u1 + sj.d2psi[d].b * u.u2;
    }
    return j;
}

cplx eval_G(const SpaceJet& psi_sp, const AngJet2& psi_ang, const SpaceJet& fx,
            const AngJet2& fang, const EulerTriple& an, const RotatorParams& p, int dims,
            double thr_abs) {
    const double rho = std::norm(psi_sp.v);
    if (rho < thr_abs) throw NodeSingularity("source_G: rho below node threshold");

    const double inv_l2 = 1.0 / (p.l * p.l);
    const Mat3 g3 = unit_inverse_metric(an.alpha);

    const SpaceJet logr_sp = (psi_sp * psi_sp.conj()).log();
    const AngJet2 logr_ang = (psi_ang * psi_ang.conj()).log();

    cplx lap_log = inv_l2 * angular_laplacian_unit(logr_ang, an);
    cplx lap_f = inv_l2 * fx.v * angular_laplacian_unit(fang, an);
    cplx grad = 0.0;
    for (int i = 0; i < dims; ++i) {
        lap_log += logr_sp.d2[i];
        lap_f += fx.d2[i] * fang.v;
        grad += fx.d[i] * fang.v * logr_sp.d[i];
    }
    for (int r = 0; r < 3; ++r)
        for (int s = 0; s < 3; ++s)
            grad += inv_l2 * g3(r, s) * fx.v * fang.d[r] * logr_ang.d[s];

    const cplx fval = fx.v * fang.v;
    const double pref = p.hbar * p.hbar / (2.0 * p.m);
    return pref * (fval * lap_log + grad - lap_f) / std::conj(psi_sp.v);
}

}  // namespace

cplx source_G(const FieldEvaluator& ev, const SmoothDensityF& f, const Vec3& x,
              const EulerTriple& an, const RotatorParams& params, const NodeThreshold& thr) {
    const SpinorJet sj = ev.jet(x, true);
    const BasisPair u = basis_u(an);
    const SpaceJet psi_sp = spatial_psi_jet(sj, u);
    const AngJet2 psi_ang = basis_jet(1, an) * sj.psi.a + basis_jet(2, an) * sj.psi.b;
    const double t = ev.field().time;
    return eval_G(psi_sp, psi_ang, f.spatial(x, t), f.angular(an), an, params,
                  ev.field().grid.dims, thr.absolute(ev));
}

ResidualStats identity6_residual(const FreePacketPsi& psi, const SmoothDensityF& f,
                                 const GridSpec& grid, DerivKind deriv, double t,
                                 const std::vector<std::pair<Vec3, EulerTriple>>& samples,
                                 const RotatorParams& params) {
    const SpinorField field = psi.sample(grid, t, params);
    const FieldEvaluator ev(field, deriv);
    const int dims = grid.dims;
    const double hb = params.hbar;

    ResidualStats stats;
    double sum = 0.0;
    for (const auto& [x, an] : samples) {
        const SpinorJet sj = ev.jet(x, true);
        const BasisPair u = basis_u(an);
        const cplx chi_u = psi.chi.a * u.u1 + psi.chi.b * u.u2;

        // spatial jets of psi at fixed angle; grid derivatives, exact dt
        SpaceJet psi_sp = spatial_psi_jet(sj, u);
        psi_sp.dt = psi.scalar_jet(x, t, params).dt * chi_u;
        const AngJet2 psi_ang = basis_jet(1, an) * sj.psi.a + basis_jet(2, an) * sj.psi.b;

        const SpaceJet fx = f.spatial(x, t);
        const AngJet2 fang = f.angular(an);

        // u = psi - f / psi*
        const SpaceJet u_sp = psi_sp - (fx * fang.v) / psi_sp.conj();
        const AngJet2 u_ang = psi_ang - (fang * fx.v) / psi_ang.conj();

        // F(u) for the free operator
        cplx Fu = kI * hb * u_sp.dt;
        for (int i = 0; i < dims; ++i) Fu += hb * hb / (2.0 * params.m) * u_sp.d2[i];
        Fu += hb * hb / (2.0 * params.I) * angular_laplacian_unit(u_ang, an);

        const cplx G = eval_G(psi_sp, psi_ang, fx, fang, an, params, dims, 0.0);

        // continuity bracket: d_t f + (1/sqrt g) d_mu (f sqrt g v^mu)
        cplx bracket = fx.dt * fang.v;
        for (int i = 0; i < dims; ++i) {
            const cplx dlog = psi_sp.d[i] / psi_sp.v;
            const double vi = hb / params.m * dlog.imag();
            const double dvi =
                hb / params.m * (psi_sp.d2[i] / psi_sp.v - dlog * dlog).imag();
            bracket += fx.d[i] * fang.v * vi + fx.v * fang.v * dvi;
        }
        // angular divergence of f v^r through first-order jets
        std::array<AngJet1, 3> w;
        const AngJet1 f_ang1 = (fang * fx.v).order1();
        for (int r = 0; r < 3; ++r) {
            AngJet1 vr{};
            for (int i = 0; i < 3; ++i) {
                const AngJet1 m = apply_angular_momentum_jet(i, psi_ang, hb, an);
                const AngJet1 ratio = m / psi_ang.order1();
                const AngJet1 re = (ratio + ratio.conj()) * cplx(0.5, 0.0);
                vr = vr + a_matrix_jet(i, r, an).order1() * re;
            }
            vr = vr * cplx(1.0 / params.I, 0.0);
            w[r] = f_ang1 * vr;
        }
        bracket += divergence_angular(w, an);

        const cplx residual = Fu - G + kI * hb / std::conj(psi_sp.v) * bracket;
        const double mag = std::abs(residual);
        stats.max_abs = std::max(stats.max_abs, mag);
        sum += mag;
        ++stats.n;
    }
    stats.mean_abs = stats.n ? sum / stats.n : 0.0;
    return stats;
}

// ---------------------------------------------------------------------------
// Functional-derivative source, both routes
// ---------------------------------------------------------------------------

namespace {

// frozen-at-the-particle derivative coefficients of the quantum potential,
// indexed over the 6-D block-diagonal metric
struct ElCoefficients {
    double c0 = 0.0;
    std::array<double, 3> c1_sp{}, c1_an{};
    double c2_sp = 0.0;
    Mat3 c2_an;
};

ElCoefficients el_coefficients(const SpinorJet& sjq, const MollifiedParticle& p, int dims,
                               const RotatorParams& params, double thr_abs) {
    const double inv_l2 = 1.0 / (params.l * params.l);
    const BasisPair uq = basis_u(p.theta);
    const SpaceJet psiq_sp = spatial_psi_jet(sjq, uq);
    const AngJet2 psiq_ang =
        basis_jet(1, p.theta) * sjq.psi.a + basis_jet(2, p.theta) * sjq.psi.b;
    const SpaceJet rho_sp = psiq_sp * psiq_sp.conj();
    const AngJet2 rho_ang = psiq_ang * psiq_ang.conj();
    const double rho = rho_sp.v.real();
    if (rho < thr_abs)
        throw NodeSingularity("functional_derivative_source_el: rho(q) below threshold");

    const Mat3 g3 = unit_inverse_metric(p.theta.alpha);
    const double cot_t = std::cos(p.theta.alpha) / std::sin(p.theta.alpha);
    const std::array<double, 3> gamma_ang{inv_l2 * cot_t, 0.0, 0.0};

    double gamma_p = 0.0, gPP = 0.0, gpp = 0.0;
    std::array<double, 3> p_sp{}, p_an{};
    for (int i = 0; i < dims; ++i) {
        p_sp[i] = rho_sp.d[i].real();
        gPP += rho_sp.d2[i].real();
        gpp += p_sp[i] * p_sp[i];
    }
    for (int r = 0; r < 3; ++r) {
        p_an[r] = rho_ang.d[r].real();
        gamma_p += gamma_ang[r] * p_an[r];
        for (int s = 0; s < 3; ++s) {
            gPP += inv_l2 * g3(r, s) * rho_ang.h[r][s].real();
            gpp += inv_l2 * g3(r, s) * p_an[r] * p_an[s];
        }
    }

    const double common = -params.hbar * params.hbar / (2.0 * params.m);
    ElCoefficients c;
    c.c0 = common * (-gamma_p / (2.0 * rho * rho) - gPP / (2.0 * rho * rho) +
                     gpp / (2.0 * rho * rho * rho));
    for (int i = 0; i < dims; ++i) c.c1_sp[i] = common * (-p_sp[i] / (2.0 * rho * rho));
    for (int r = 0; r < 3; ++r) {
        double gp = 0.0;
        for (int s = 0; s < 3; ++s) gp += g3(r, s) * p_an[s];
        c.c1_an[r] = common * (gamma_ang[r] / (2.0 * rho) - inv_l2 * gp / (2.0 * rho * rho));
    }
    c.c2_sp = common / (2.0 * rho);  // same for every active axis
    for (int r = 0; r < 3; ++r)
        for (int s = 0; s < 3; ++s) c.c2_an(r, s) = common * inv_l2 * g3(r, s) / (2.0 * rho);
    return c;
}

// EL route value from precomputed coefficients and mollifier jets
cplx el_value(const ElCoefficients& c, const SpaceJet& nx, const AngJet2& dang, int dims,
              const EulerTriple& an, cplx psival) {
    cplx val = c.c0 * nx.v * dang.v;
    for (int i = 0; i < dims; ++i) val -= c.c1_sp[i] * nx.d[i] * dang.v;
    for (int r = 0; r < 3; ++r) val -= c.c1_an[r] * nx.v * dang.d[r];
    for (int i = 0; i < dims; ++i) val += c.c2_sp * nx.d2[i] * dang.v;
    for (int r = 0; r < 3; ++r)
        for (int s = 0; s < 3; ++s) val += c.c2_an(r, s) * nx.v * dang.h[r][s];
    return 2.0 / std::sin(an.alpha) * psival * val;
}

double circ_dist(double a, double b, double period) {
    double d = std::abs(std::fmod(a - b, period));
    return std::min(d, period - d);
}

// 8-sigma support window of the angular mollifier
struct AngularWindow {
    double c0, wc, beta0, wb, gamma0, wg;
    AngularWindow(const MollifiedParticle& p)
        : c0(std::cos(p.theta.alpha)),
          wc(p.width_angle * std::sin(p.theta.alpha)),
          beta0(p.theta.beta),
          wb(p.width_angle),
          gamma0(p.theta.gamma),
          wg(p.width_angle) {}
    bool contains_alpha(double alpha) const { return std::abs(std::cos(alpha) - c0) <= 8.0 * wc; }
    bool contains_beta(double beta) const { return circ_dist(beta, beta0, 2.0 * kPi) <= 8.0 * wb; }
    bool contains_gamma(double gamma) const {
        return circ_dist(gamma, gamma0, 4.0 * kPi) <= 8.0 * wg;
    }
};

}  // namespace

cplx functional_derivative_source(const FieldEvaluator& ev, const MollifiedParticle& p,
                                  const Vec3& x, const EulerTriple& an,
                                  const RotatorParams& params, const NodeThreshold& thr) {
    const SmoothDensityF f = mollified_particle_f(p, ev.field().grid);
    return source_G(ev, f, x, an, params, thr);
}

cplx functional_derivative_source_el(const FieldEvaluator& ev, const MollifiedParticle& p,
                                     const Vec3& x, const EulerTriple& an,
                                     const RotatorParams& params, const NodeThreshold& thr) {
    const GridSpec& grid = ev.field().grid;
    const ElCoefficients c = el_coefficients(ev.jet(p.q, true), p, grid.dims, params,
                                             thr.absolute(ev));
    const SmoothDensityF f = mollified_particle_f(p, grid);
    const SpaceJet nx = f.spatial(x, 0.0);
    const AngJet2 dang = f.angular(an) * ang_jet_sin_alpha(an);  // delta6 = Nx * fang * sin a
    const BasisPair u = basis_u(an);
    const C2 psi_x = ev.value(x);
    return el_value(c, nx, dang, grid.dims, an, psi_x.a * u.u1 + psi_x.b * u.u2);
}

std::vector<SourcePairing> source_dual_route_pairings(
    const FieldEvaluator& ev, const MollifiedParticle& p, const RotatorParams& params,
    const std::vector<std::function<double(const Vec3&, const EulerTriple&)>>& phis,
    const QuadratureOrder& order) {
    const GridSpec& grid = ev.field().grid;
    const int dims = grid.dims;
    const QuadratureRule rule(order);
    const SmoothDensityF f = mollified_particle_f(p, grid);
    const AngularWindow window(p);

    // one pass of whole-grid derivatives instead of per-point mode sums
    const std::vector<SpinorJet> jets = all_node_jets(ev.field(), ev.kind());
    const ElCoefficients elc = el_coefficients(ev.jet(p.q, true), p, dims, params, 0.0);

    // angular-node tables for the in-window nodes
    struct AngNode {
        EulerTriple an;
        double weight;
        BasisPair u;
        AngJet2 ju1, ju2, fang, dang;
        double lap_fang_unit;  // Laplace-Beltrami of fang (unit l)
    };
    std::vector<AngNode> nodes;
    for (std::size_t ia = 0; ia < rule.alpha.size(); ++ia) {
        if (!window.contains_alpha(rule.alpha[ia])) continue;
        for (std::size_t ib = 0; ib < rule.beta.size(); ++ib) {
            if (!window.contains_beta(rule.beta[ib])) continue;
            for (std::size_t ig = 0; ig < rule.gamma.size(); ++ig) {
                if (!window.contains_gamma(rule.gamma[ig])) continue;
                AngNode node;
                node.an = EulerTriple{rule.alpha[ia], rule.beta[ib], rule.gamma[ig]};
                node.weight = rule.w_alpha[ia] * rule.w_beta[ib] * rule.w_gamma[ig];
                node.u = basis_u(node.an);
                node.ju1 = basis_jet(1, node.an);
                node.ju2 = basis_jet(2, node.an);
                node.fang = f.angular(node.an);
                node.dang = node.fang * ang_jet_sin_alpha(node.an);
                node.lap_fang_unit = angular_laplacian_unit(node.fang, node.an).real();
                nodes.push_back(std::move(node));
            }
        }
    }

    const double vol = grid.cell_volume();
    const double pref = params.hbar * params.hbar / (2.0 * params.m);
    const double inv_l2 = 1.0 / (params.l * params.l);
    std::vector<cplx> sum_g(phis.size()), sum_el(phis.size());

    for (std::size_t n = 0; n < grid.total(); ++n) {
        const Vec3 x = grid.node(n);
        bool in_support = true;
        for (int d = 0; d < dims; ++d)
            if (circ_dist(x[d], p.q[d], grid.extent[d]) > 8.0 * p.width_x) in_support = false;
        if (!in_support) continue;
        const SpinorJet& jet = jets[n];
        const SpaceJet nx = f.spatial(x, 0.0);

        for (const AngNode& node : nodes) {
            const double w = vol * node.weight;
            // route G
            const SpaceJet psi_sp = spatial_psi_jet(jet, node.u);
            const AngJet2 psi_ang = node.ju1 * jet.psi.a + node.ju2 * jet.psi.b;
            const SpaceJet logr_sp = (psi_sp * psi_sp.conj()).log();
            const AngJet2 logr_ang = (psi_ang * psi_ang.conj()).log();
            const Mat3 g3 = unit_inverse_metric(node.an.alpha);
            cplx lap_log = inv_l2 * angular_laplacian_unit(logr_ang, node.an);
            cplx lap_f = inv_l2 * nx.v * node.lap_fang_unit;
            cplx grad = 0.0;
            for (int i = 0; i < dims; ++i) {
                lap_log += logr_sp.d2[i];
                lap_f += nx.d2[i] * node.fang.v;
                grad += nx.d[i] * node.fang.v * logr_sp.d[i];
            }
            for (int r = 0; r < 3; ++r)
                for (int s = 0; s < 3; ++s)
                    grad += inv_l2 * g3(r, s) * nx.v * node.fang.d[r] * logr_ang.d[s];
            const cplx fval = nx.v * node.fang.v;
            const cplx g_val = pref * (fval * lap_log + grad - lap_f) / std::conj(psi_sp.v);
            const cplx el = el_value(elc, nx, node.dang, dims, node.an, psi_sp.v);
            for (std::size_t k = 0; k < phis.size(); ++k) {
                const double wk = w * phis[k](x, node.an);
                sum_g[k] += wk * g_val;
                sum_el[k] += wk * el;
            }
        }
    }
    std::vector<SourcePairing> out(phis.size());
    for (std::size_t k = 0; k < phis.size(); ++k) {
        out[k].route_g_re = sum_g[k].real();
        out[k].route_g_im = sum_g[k].imag();
        out[k].route_el_re = sum_el[k].real();
        out[k].route_el_im = sum_el[k].imag();
        out[k].abs_diff = std::abs(sum_g[k] - sum_el[k]);
    }
    return out;
}

SourcePairing source_dual_route_pairing(
    const FieldEvaluator& ev, const MollifiedParticle& p, const RotatorParams& params,
    const std::function<double(const Vec3&, const EulerTriple&)>& phi,
    const QuadratureOrder& order) {
    return source_dual_route_pairings(ev, p, params, {phi}, order).front();
}

// ---------------------------------------------------------------------------
// Particle clouds
// ---------------------------------------------------------------------------

double ParticleCloud::total_weight() const {
    double s = 0.0;
    for (double x : w) s += x;
    return s;
}

Vec3 ParticleCloud::centroid_q() const {
    Vec3 c{};
    double tw = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        c += q[i] * w[i];
        tw += w[i];
    }
    return c / tw;
}

EulerTriple ParticleCloud::centroid_theta() const {
    double tw = 0.0, ca = 0.0;
    cplx eb = 0.0, eg = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        tw += w[i];
        ca += w[i] * theta[i].alpha;
        eb += w[i] * std::polar(1.0, theta[i].beta);
        eg += w[i] * std::polar(1.0, 0.5 * theta[i].gamma);
    }
    EulerTriple c;
    c.alpha = ca / tw;
    c.beta = std::arg(eb);
    if (c.beta < 0.0) c.beta += 2.0 * kPi;
    c.gamma = 2.0 * std::arg(eg);
    if (c.gamma < 0.0) c.gamma += 4.0 * kPi;
    return c;
}

Vec3 ParticleCloud::spatial_variance() const {
    const Vec3 mean = centroid_q();
    Vec3 v{};
    double tw = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        for (int d = 0; d < 3; ++d) v[d] += w[i] * (q[i][d] - mean[d]) * (q[i][d] - mean[d]);
        tw += w[i];
    }
    return v / tw;
}

ParticleCloud cloud_from_mollified_particle(const MollifiedParticle& p, int count,
                                            std::uint64_t seed, int dims) {
    const double st = std::sin(p.theta.alpha);
    if (st < 1e-6) throw PoleSingularity("cloud_from_mollified_particle: pole orientation");
    const double wc = p.width_angle * st;
    Rng rng(seed);
    ParticleCloud cloud;
    cloud.q.reserve(count);
    for (int n = 0; n < count; ++n) {
        Vec3 x = p.q;
        for (int d = 0; d < dims; ++d) x[d] += p.width_x * rng.normal();
        double c;
        do {
            c = std::cos(p.theta.alpha) + wc * rng.normal();
        } while (c <= -1.0 || c >= 1.0);
        EulerTriple an;
        an.alpha = std::acos(c);
        an.beta = p.theta.beta + p.width_angle * rng.normal();
        an.gamma = p.theta.gamma + p.width_angle * rng.normal();
        cloud.q.push_back(x);
        cloud.theta.push_back(an.wrapped());
        cloud.w.push_back(1.0 / count);
    }
    return cloud;
}

ParticleCloud cloud_from_state_density(const SnapshotSeries& series, int count,
                                       std::uint64_t seed) {
    EnsembleSpec spec;
    spec.count = count;
    spec.sampling = EnsembleSpec::Sampling::density_weighted;
    spec.seed = seed;
    const auto pts = sample_initial_points(spec, series);
    ParticleCloud cloud;
    for (const auto& [x, an] : pts) {
        cloud.q.push_back(x);
        cloud.theta.push_back(an);
        cloud.w.push_back(1.0 / count);
    }
    return cloud;
}

ParticleCloud evolve_conserved_density(const ParticleCloud& initial, const SnapshotSeries& series,
                                       const ExternalFields& fields, const RotatorParams& params,
                                       const IntegrationOptions& opt, int n_threads) {
    EnsembleSpec spec;
    spec.count = static_cast<int>(initial.q.size());
    spec.sampling = EnsembleSpec::Sampling::explicit_list;
    for (std::size_t i = 0; i < initial.q.size(); ++i)
        spec.points.emplace_back(initial.q[i], initial.theta[i]);

    IntegrationOptions lean = opt;
    lean.record_stride = 1 << 30;  // endpoints only
    const auto trajs =
        run_ensemble(spec, VelocityMode::rotator, series, fields, params, lean, n_threads);

    ParticleCloud out;
    out.w = initial.w;
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        out.q.push_back(trajs[i].q.back());
        out.theta.push_back(trajs[i].theta.back());
        if (trajs[i].status != Trajectory::Status::ok) ++out.n_aborted;
    }
    return out;
}

double cloud_kde(const ParticleCloud& cloud, const Vec3& x, double bandwidth, int dims) {
    const double norm = std::pow(2.0 * kPi * bandwidth * bandwidth, -0.5 * dims);
    double s = 0.0;
    for (std::size_t i = 0; i < cloud.q.size(); ++i) {
        double r2 = 0.0;
        for (int d = 0; d < dims; ++d) {
            const double dx = x[d] - cloud.q[i][d];
            r2 += dx * dx;
        }
        s += cloud.w[i] * norm * std::exp(-0.5 * r2 / (bandwidth * bandwidth));
    }
    return s;
}

// ---------------------------------------------------------------------------
// Discrete unified field
// ---------------------------------------------------------------------------

namespace {

double spatial_mollifier_value(const MollifiedParticle& p, const GridSpec& grid, const Vec3& x) {
    double v = 1.0;
    for (int d = 0; d < grid.dims; ++d)
        v *= wrapped_gaussian_jet(x[d], p.q[d], p.width_x, grid.extent[d]).v;
    return v;
}

}  // namespace

C2 unified_field_discrete(const FieldEvaluator& ev, const MollifiedParticle& p, const Vec3& x,
                          const NodeThreshold& thr) {
    const C2 psi_x = ev.value(x);
    const BasisPair ut = basis_u(p.theta);
    const cplx psi_at_theta = psi_x.a * ut.u1 + psi_x.b * ut.u2;
    if (std::norm(psi_at_theta) < thr.absolute(ev))
        throw NodeSingularity("unified_field_discrete: psi*(x, theta) below threshold");
    const double nx = spatial_mollifier_value(p, ev.field().grid, x);
    const cplx soliton = nx / std::conj(psi_at_theta);
    return {psi_x.a - std::conj(ut.u1) * soliton, psi_x.b - std::conj(ut.u2) * soliton};
}

C2 unified_field_projected(const FieldEvaluator& ev, const MollifiedParticle& p, const Vec3& x,
                           const QuadratureOrder& order) {
    const C2 psi_x = ev.value(x);
    const SmoothDensityF f = mollified_particle_f(p, ev.field().grid);
    const double nx = spatial_mollifier_value(p, ev.field().grid, x);
    const QuadratureRule rule(order);
    const AngularWindow window(p);

    cplx proj_a = 0.0, proj_b = 0.0;
    for (std::size_t ia = 0; ia < rule.alpha.size(); ++ia) {
        if (!window.contains_alpha(rule.alpha[ia])) continue;
        for (std::size_t ib = 0; ib < rule.beta.size(); ++ib) {
            if (!window.contains_beta(rule.beta[ib])) continue;
            for (std::size_t ig = 0; ig < rule.gamma.size(); ++ig) {
                if (!window.contains_gamma(rule.gamma[ig])) continue;
                const EulerTriple an{rule.alpha[ia], rule.beta[ib], rule.gamma[ig]};
                const double w = rule.w_alpha[ia] * rule.w_beta[ib] * rule.w_gamma[ig];
                const BasisPair u = basis_u(an);
                const cplx common = w * f.angular(an).v /
                                    std::conj(psi_x.a * u.u1 + psi_x.b * u.u2);
                proj_a += std::conj(u.u1) * common;
                proj_b += std::conj(u.u2) * common;
            }
        }
    }
    return {psi_x.a - nx * proj_a, psi_x.b - nx * proj_b};
}

ModulationReport factorized_modulation_check(const Trajectory& traj, const RotatorParams& params,
                                             double pole_margin) {
    if (traj.size() < 3) throw SimError("factorized_modulation_check: trajectory too short");
    const EulerTriple th0 = traj.theta.front();
    if (std::cos(0.5 * th0.alpha) < pole_margin)
        throw PoleSingularity("factorized_modulation_check: theta0_1 near pi");

    ModulationReport rep;
    rep.magnitude_expected = std::tan(0.5 * th0.alpha);
    rep.phase_rate_expected = free_spinup_rate(th0, params, pole_margin);
    if (rep.magnitude_expected < 1e-12) {
        // pure spin-up never leaks into U^2; the modulation phase carries no
        // information, so only the magnitude is reported
        for (const EulerTriple& th : traj.theta)
            rep.magnitude_max_dev =
                std::max(rep.magnitude_max_dev, std::abs(modulation_at(th).v21));
        rep.phase_rate_fit = rep.phase_rate_expected;
        return rep;
    }

    std::vector<double> phases(traj.size());
    double prev = 0.0, offset = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const ModulationFunctions m = modulation_at(traj.theta[k]);
        rep.magnitude_max_dev =
            std::max(rep.magnitude_max_dev, std::abs(std::abs(m.v21) - rep.magnitude_expected));
        double ph = std::arg(m.v21);
        if (k > 0) {
            double d = ph - prev;
            while (d > kPi) d -= 2.0 * kPi;
            while (d < -kPi) d += 2.0 * kPi;
            offset += d;
        }
        prev = ph;
        phases[k] = offset;
    }
    // least-squares slope of the unwrapped phase
    double tbar = 0.0, pbar = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        tbar += traj.times[k];
        pbar += phases[k];
    }
    tbar /= traj.size();
    pbar /= traj.size();
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        num += (traj.times[k] - tbar) * (phases[k] - pbar);
        den += (traj.times[k] - tbar) * (traj.times[k] - tbar);
    }
    rep.phase_rate_fit = num / den;
    return rep;
}

}  // namespace rotator
