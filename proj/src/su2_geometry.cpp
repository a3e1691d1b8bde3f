#include "rotator/su2_geometry.hpp"

#include <cmath>

namespace rotator {

// ---------------------------------------------------------------------------
// Jet arithmetic
// ---------------------------------------------------------------------------

AngJet1 AngJet1::operator+(const AngJet1& o) const {
    AngJet1 r{v + o.v, {}};
    for (int i = 0; i < 3; ++i) r.d[i] = d[i] + o.d[i];
    return r;
}

AngJet1 AngJet1::operator-(const AngJet1& o) const {
    AngJet1 r{v - o.v, {}};
    for (int i = 0; i < 3; ++i) r.d[i] = d[i] - o.d[i];
    return r;
}

AngJet1 AngJet1::operator*(const AngJet1& o) const {
    AngJet1 r{v * o.v, {}};
    for (int i = 0; i < 3; ++i) r.d[i] = d[i] * o.v + v * o.d[i];
    return r;
}

AngJet1 AngJet1::operator/(const AngJet1& o) const {
    AngJet1 r{v / o.v, {}};
    for (int i = 0; i < 3; ++i) r.d[i] = (d[i] - r.v * o.d[i]) / o.v;
    return r;
}

AngJet1 AngJet1::operator*(cplx s) const {
    AngJet1 r{v * s, {}};
    for (int i = 0; i < 3; ++i) r.d[i] = d[i] * s;
    return r;
}

AngJet1 AngJet1::conj() const {
    AngJet1 r{std::conj(v), {}};
    for (int i = 0; i < 3; ++i) r.d[i] = std::conj(d[i]);
    return r;
}

AngJet2 AngJet2::constant(cplx c) {
    AngJet2 j;
    j.v = c;
    return j;
}

AngJet2 AngJet2::operator+(const AngJet2& o) const {
    AngJet2 r;
    r.v = v + o.v;
    for (int i = 0; i < 3; ++i) {
        r.d[i] = d[i] + o.d[i];
        for (int j = 0; j < 3; ++j) r.h[i][j] = h[i][j] + o.h[i][j];
    }
    return r;
}

AngJet2 AngJet2::operator-(const AngJet2& o) const {
    AngJet2 r;
    r.v = v - o.v;
    for (int i = 0; i < 3; ++i) {
        r.d[i] = d[i] - o.d[i];
        for (int j = 0; j < 3; ++j) r.h[i][j] = h[i][j] - o.h[i][j];
    }
    return r;
}

AngJet2 AngJet2::operator*(const AngJet2& o) const {
    AngJet2 r;
    r.v = v * o.v;
    for (int i = 0; i < 3; ++i) r.d[i] = d[i] * o.v + v * o.d[i];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            r.h[i][j] = h[i][j] * o.v + d[i] * o.d[j] + d[j] * o.d[i] + v * o.h[i][j];
    return r;
}

AngJet2 AngJet2::operator/(const AngJet2& o) const {
    // q = f/g: q' = (f' - q g')/g, q'' = (f'' - q'' g - 2 sym(q' g') ...)/g
    AngJet2 r;
    r.v = v / o.v;
    for (int i = 0; i < 3; ++i) r.d[i] = (d[i] - r.v * o.d[i]) / o.v;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            r.h[i][j] =
                (h[i][j] - r.v * o.h[i][j] - r.d[i] * o.d[j] - r.d[j] * o.d[i]) / o.v;
    return r;
}

AngJet2 AngJet2::operator*(cplx s) const {
    AngJet2 r;
    r.v = v * s;
    for (int i = 0; i < 3; ++i) {
        r.d[i] = d[i] * s;
        for (int j = 0; j < 3; ++j) r.h[i][j] = h[i][j] * s;
    }
    return r;
}

AngJet2 AngJet2::conj() const {
    AngJet2 r;
    r.v = std::conj(v);
    for (int i = 0; i < 3; ++i) {
        r.d[i] = std::conj(d[i]);
        for (int j = 0; j < 3; ++j) r.h[i][j] = std::conj(h[i][j]);
    }
    return r;
}

AngJet2 AngJet2::log() const {
    AngJet2 r;
    r.v = std::log(v);
    for (int i = 0; i < 3; ++i) r.d[i] = d[i] / v;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r.h[i][j] = h[i][j] / v - d[i] * d[j] / (v * v);
    return r;
}

AngJet2 AngJet2::sqrt_real() const {
    AngJet2 r;
    r.v = std::sqrt(v.real());
    const cplx inv2s = 0.5 / r.v;
    for (int i = 0; i < 3; ++i) r.d[i] = d[i] * inv2s;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            r.h[i][j] = h[i][j] * inv2s - d[i] * d[j] / (4.0 * r.v * r.v * r.v);
    return r;
}

// ---------------------------------------------------------------------------
// Metric and basis
// ---------------------------------------------------------------------------

AngularMetric su2_metric(const EulerTriple& angles, double l, double pole_margin) {
    const double sa = std::sin(angles.alpha);
    const double ca = std::cos(angles.alpha);

    AngularMetric m;
    m.g_lower = Mat3::identity();
    m.g_lower(0, 0) = l * l;
    m.g_lower(1, 1) = l * l;
    m.g_lower(2, 2) = l * l;
    m.g_lower(1, 2) = l * l * ca;
    m.g_lower(2, 1) = l * l * ca;
    m.sqrt_g = l * l * l * std::abs(sa);

    if (std::abs(sa) < pole_margin)
        throw PoleSingularity("su2_metric: inverse metric at |sin alpha| < margin");

    const double inv_l2 = 1.0 / (l * l);
    const double csc = 1.0 / sa;
    const double cot = ca / sa;
    m.g_upper = Mat3();
    m.g_upper(0, 0) = inv_l2;
    m.g_upper(1, 1) = inv_l2 * csc * csc;
    m.g_upper(2, 2) = inv_l2 * csc * csc;
    m.g_upper(1, 2) = -inv_l2 * cot * csc;
    m.g_upper(2, 1) = -inv_l2 * cot * csc;
    return m;
}

namespace {

constexpr double kBasisNorm = 1.0 / (2.0 * 1.41421356237309504880 * kPi);  // (2 sqrt(2) pi)^-1

// Jet of amp(alpha) * factor * exp(i (b*beta + g*gamma)).
AngJet2 phase_amp_jet(double amp, double damp, double ddamp, cplx factor, double b, double g,
                      double beta, double gamma) {
    const cplx phase = std::exp(kI * (b * beta + g * gamma)) * factor;
    AngJet2 j;
    j.v = amp * phase;
    j.d[0] = damp * phase;
    j.d[1] = kI * b * j.v;
    j.d[2] = kI * g * j.v;
    j.h[0][0] = ddamp * phase;
    j.h[0][1] = j.h[1][0] = kI * b * j.d[0];
    j.h[0][2] = j.h[2][0] = kI * g * j.d[0];
    j.h[1][1] = -b * b * j.v;
    j.h[1][2] = j.h[2][1] = -b * g * j.v;
    j.h[2][2] = -g * g * j.v;
    return j;
}

}  // namespace

BasisPair basis_u(const EulerTriple& an) {
    const double half = 0.5 * an.alpha;
    const cplx e1 = std::exp(-kI * 0.5 * (an.beta + an.gamma));
    const cplx e2 = std::exp(kI * 0.5 * (an.beta - an.gamma));
    return {kBasisNorm * std::cos(half) * e1, -kI * kBasisNorm * std::sin(half) * e2};
}

AngJet2 basis_jet(int a, const EulerTriple& an) {
    const double half = 0.5 * an.alpha;
    if (a == 1) {
        const double amp = kBasisNorm * std::cos(half);
        const double damp = -0.5 * kBasisNorm * std::sin(half);
        const double ddamp = -0.25 * amp;
        return phase_amp_jet(amp, damp, ddamp, 1.0, -0.5, -0.5, an.beta, an.gamma);
    }
    const double amp = kBasisNorm * std::sin(half);
    const double damp = 0.5 * kBasisNorm * std::cos(half);
    const double ddamp = -0.25 * amp;
    return phase_amp_jet(amp, damp, ddamp, -kI, 0.5, -0.5, an.beta, an.gamma);
}

// ---------------------------------------------------------------------------
// A matrix
// ---------------------------------------------------------------------------

AMatrix a_matrix(const EulerTriple& an, double pole_margin) {
    const double sa = std::sin(an.alpha);
    if (std::abs(sa) < pole_margin)
        throw PoleSingularity("a_matrix: |sin alpha| < margin");
    const double cot = std::cos(an.alpha) / sa;
    const double csc = 1.0 / sa;
    const double sb = std::sin(an.beta);
    const double cb = std::cos(an.beta);

    AMatrix A;
    A.a(0, 0) = -cb;  A.a(0, 1) = sb * cot;  A.a(0, 2) = -sb * csc;
    A.a(1, 0) = sb;   A.a(1, 1) = cb * cot;  A.a(1, 2) = -cb * csc;
    A.a(2, 0) = 0.0;  A.a(2, 1) = -1.0;      A.a(2, 2) = 0.0;
    return A;
}

namespace {

// alpha-only jets of cot and cosec
AngJet2 jet_cot(double alpha) {
    const double s = std::sin(alpha), c = std::cos(alpha);
    AngJet2 j;
    j.v = c / s;
    j.d[0] = -1.0 / (s * s);
    j.h[0][0] = 2.0 * c / (s * s * s);
    return j;
}

AngJet2 jet_csc(double alpha) {
    const double s = std::sin(alpha), c = std::cos(alpha);
    AngJet2 j;
    j.v = 1.0 / s;
    j.d[0] = -c / (s * s);
    j.h[0][0] = (c * c / s + s) / (s * s) + c * c / (s * s * s);  // csc(cot^2 + csc^2)
    return j;
}

// beta-only jets
AngJet2 jet_sin_beta(double beta) {
    AngJet2 j;
    j.v = std::sin(beta);
    j.d[1] = std::cos(beta);
    j.h[1][1] = -std::sin(beta);
    return j;
}

AngJet2 jet_cos_beta(double beta) {
    AngJet2 j;
    j.v = std::cos(beta);
    j.d[1] = -std::sin(beta);
    j.h[1][1] = -std::cos(beta);
    return j;
}

}  // namespace

AngJet2 a_matrix_jet(int i, int r, const EulerTriple& an, double pole_margin) {
    if (std::abs(std::sin(an.alpha)) < pole_margin)
        throw PoleSingularity("a_matrix_jet: |sin alpha| < margin");
    if (i == 2) {
        return AngJet2::constant(r == 1 ? -1.0 : 0.0);
    }
    const AngJet2 sb = jet_sin_beta(an.beta);
    const AngJet2 cb = jet_cos_beta(an.beta);
    const AngJet2 cot = jet_cot(an.alpha);
    const AngJet2 csc = jet_csc(an.alpha);
    if (i == 0) {
        if (r == 0) return cb * (-1.0);
        if (r == 1) return sb * cot;
        return sb * csc * (-1.0);
    }
    if (r == 0) return sb;
    if (r == 1) return cb * cot;
    return cb * csc * (-1.0);
}

double a_divergence_residual(int i, const EulerTriple& an, double pole_margin) {
    // d_r(sin(a) A_i^r) assembled from closed-form jets
    const double sa = std::sin(an.alpha);
    const double ca = std::cos(an.alpha);
    cplx total = 0.0;
    for (int r = 0; r < 3; ++r) {
        const AngJet2 A = a_matrix_jet(i, r, an, pole_margin);
        // d_r(sin a * A) = (r==alpha ? cos a * A : 0) + sin a * dA/dr
        total += sa * A.d[r];
        if (r == 0) total += ca * A.v;
    }
    return std::abs(total);
}

// ---------------------------------------------------------------------------
// Angular momentum action
// ---------------------------------------------------------------------------

C2 apply_angular_momentum(int i, const C2& spinor, double hbar) {
    return pauli(i) * spinor * (0.5 * hbar);
}

AngJet1 apply_angular_momentum_jet(int i, const AngJet2& f, double hbar, const EulerTriple& an,
                                   double pole_margin) {
    AngJet1 acc{};
    for (int r = 0; r < 3; ++r) {
        const AngJet2 A = a_matrix_jet(i, r, an, pole_margin);
        acc = acc + A.order1() * f.deriv(r);
    }
    return acc * (-kI * hbar);
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

namespace {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int k = 0; k < (n + 1) / 2; ++k) {
        double t = std::cos(kPi * (k + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * t * p1 - j * p2) / (j + 1.0);
            }
            dp = n * (t * p0 - p1) / (t * t - 1.0);
            const double dt = p0 / dp;
            t -= dt;
            if (std::abs(dt) < 1e-15) break;
        }
        x[k] = -t;
        x[n - 1 - k] = t;
        w[k] = w[n - 1 - k] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
}

}  // namespace

QuadratureRule::QuadratureRule(const QuadratureOrder& order) {
    if (order.n_alpha < 2 || order.n_beta < 2 || order.n_gamma < 2)
        throw InvalidOrder("quadrature requires at least 2 nodes per angle");

    std::vector<double> c, wc;
    gauss_legendre(order.n_alpha, c, wc);
    alpha.resize(c.size());
    w_alpha = wc;  // the substitution c = cos(alpha) absorbs sin(alpha) d(alpha)
    for (std::size_t k = 0; k < c.size(); ++k) alpha[k] = std::acos(c[k]);

    const double hb = 2.0 * kPi / order.n_beta;
    for (int k = 0; k < order.n_beta; ++k) {
        beta.push_back((k + 0.5) * hb);
        w_beta.push_back(hb);
    }
    const double hg = 4.0 * kPi / order.n_gamma;
    for (int k = 0; k < order.n_gamma; ++k) {
        gamma.push_back((k + 0.5) * hg);
        w_gamma.push_back(hg);
    }
}

cplx su2_quadrature(const std::function<cplx(const EulerTriple&)>& f,
                    const QuadratureOrder& order) {
    return QuadratureRule(order).integrate(f);
}

std::function<cplx(const EulerTriple&)> to_angular(const C2& spinor) {
    return [spinor](const EulerTriple& an) {
        const BasisPair u = basis_u(an);
        return spinor.a * u.u1 + spinor.b * u.u2;
    };
}

C2 to_spinor(const std::function<cplx(const EulerTriple&)>& psi, const QuadratureOrder& order) {
    const QuadratureRule rule(order);
    C2 out;
    out.a = rule.integrate([&](const EulerTriple& an) { return std::conj(basis_u(an).u1) * psi(an); });
    out.b = rule.integrate([&](const EulerTriple& an) { return std::conj(basis_u(an).u2) * psi(an); });
    return out;
}

Mat2c sigma_from_integrals(int i, double hbar, const QuadratureOrder& order) {
    const QuadratureRule rule(order);
    Mat2c s;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            s(a, b) = rule.integrate([&](const EulerTriple& an) {
                const AngJet2 ub = basis_jet(b + 1, an);
                const AngJet1 Mub = apply_angular_momentum_jet(i, ub, hbar, an);
                return std::conj(basis_jet(a + 1, an).v) * Mub.v;
            });
        }
    return s;
}

// ---------------------------------------------------------------------------
// Angular differential operators
// ---------------------------------------------------------------------------

cplx angular_laplacian_unit(const AngJet2& f, const EulerTriple& an, double pole_margin) {
    const double sa = std::sin(an.alpha);
    if (std::abs(sa) < pole_margin)
        throw PoleSingularity("angular_laplacian: |sin alpha| < margin");
    const double cot = std::cos(an.alpha) / sa;
    const double csc = 1.0 / sa;
    return f.h[0][0] + cot * f.d[0] + csc * csc * (f.h[1][1] + f.h[2][2]) -
           2.0 * cot * csc * f.h[1][2];
}

cplx divergence_angular(const std::array<AngJet1, 3>& w, const EulerTriple& an,
                        double pole_margin) {
    const double sa = std::sin(an.alpha);
    if (std::abs(sa) < pole_margin)
        throw PoleSingularity("divergence_angular: |sin alpha| < margin");
    const double cot = std::cos(an.alpha) / sa;
    // (1/sin a)[d_a(sin a w^a) + sin a (d_b w^b + d_g w^g)]
    return w[0].d[0] + cot * w[0].v + w[1].d[1] + w[2].d[2];
}

}  // namespace rotator
