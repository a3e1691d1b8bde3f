#pragma once

#include <array>
#include <functional>
#include <vector>

#include "rotator/errors.hpp"
#include "rotator/euler.hpp"
#include "rotator/types.hpp"

namespace rotator {

// ---------------------------------------------------------------------------
// Second-order angular jets.
//
// All angular differentiation of spin-1/2 states is closed form. A jet
// carries a value, its gradient and its (symmetric) Hessian with respect to
// the Euler angles, and composes under the usual product/quotient rules.
// This removes every finite-difference artifact from the angular sector.
// ---------------------------------------------------------------------------

struct AngJet1 {
    cplx v{};
    std::array<cplx, 3> d{};

    AngJet1 operator+(const AngJet1& o) const;
    AngJet1 operator-(const AngJet1& o) const;
    AngJet1 operator*(const AngJet1& o) const;
    AngJet1 operator/(const AngJet1& o) const;
    AngJet1 operator*(cplx s) const;
    AngJet1 conj() const;
};

struct AngJet2 {
    cplx v{};
    std::array<cplx, 3> d{};
    std::array<std::array<cplx, 3>, 3> h{};  // symmetric

    static AngJet2 constant(cplx c);

    AngJet2 operator+(const AngJet2& o) const;
    AngJet2 operator-(const AngJet2& o) const;
    AngJet2 operator*(const AngJet2& o) const;
    AngJet2 operator/(const AngJet2& o) const;
    AngJet2 operator*(cplx s) const;

    AngJet2 conj() const;
    AngJet2 log() const;       // branch-safe only for values bounded away from 0
    AngJet2 sqrt_real() const; // for real positive jets (e.g. densities)

    AngJet1 order1() const { return {v, d}; }
    // jet of the partial derivative with respect to angle r
    AngJet1 deriv(int r) const { return {d[r], {h[r][0], h[r][1], h[r][2]}}; }
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct AngularMetric {
    Mat3 g_lower;    // length^2
    Mat3 g_upper;    // length^-2
    double sqrt_g;   // l^3 |sin alpha|, the 6-D density factor
};

struct BasisPair {
    cplx u1;
    cplx u2;
};

struct AMatrix {
    Mat3 a;  // rows: space axis i, columns: angle index r
};

struct QuadratureOrder {
    int n_alpha = 16;  // Gauss-Legendre nodes in cos(alpha)
    int n_beta = 8;    // uniform nodes over [0, 2*pi)
    int n_gamma = 16;  // uniform nodes over [0, 4*pi)
};

// Precomputed nodes/weights for integration against dOmega = sin(a) da db dg.
struct QuadratureRule {
    std::vector<double> alpha, w_alpha;  // GL in cos(alpha); sin(alpha) absorbed
    std::vector<double> beta, w_beta;
    std::vector<double> gamma, w_gamma;

    explicit QuadratureRule(const QuadratureOrder& order);

    template <typename F>
    auto integrate(F&& f) const -> decltype(f(EulerTriple{})) {
        using R = decltype(f(EulerTriple{}));
        R total{};
        for (std::size_t ia = 0; ia < alpha.size(); ++ia)
            for (std::size_t ib = 0; ib < beta.size(); ++ib)
                for (std::size_t ig = 0; ig < gamma.size(); ++ig) {
                    const double w = w_alpha[ia] * w_beta[ib] * w_gamma[ig];
                    total += w * f(EulerTriple{alpha[ia], beta[ib], gamma[ig]});
                }
        return total;
    }
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// Angular block of the configuration-space metric, plus the density factor.
// Throws PoleSingularity when the inverse block is requested at the chart
// poles (|sin alpha| < margin).
AngularMetric su2_metric(const EulerTriple& angles, double l,
                         double pole_margin = kDefaultPoleMargin);

// Spin-1/2 basis functions u_1, u_2.
BasisPair basis_u(const EulerTriple& angles);

// Full second-order jets of the basis functions. index a in {1,2}.
AngJet2 basis_jet(int a, const EulerTriple& angles);

// The A_i^r coefficient matrix of the angular-momentum operators.
AMatrix a_matrix(const EulerTriple& angles, double pole_margin = kDefaultPoleMargin);

// Closed-form jet of entry A[i][r]; entries depend on alpha and beta only.
AngJet2 a_matrix_jet(int i, int r, const EulerTriple& angles,
                     double pole_margin = kDefaultPoleMargin);

// d_r(sin(alpha) A_i^r), summed over r, by closed-form differentiation.
// Identically zero; exposed so the algebra suite can certify it numerically.
double a_divergence_residual(int i, const EulerTriple& angles,
                             double pole_margin = kDefaultPoleMargin);

// Action of M_i on the spin-1/2 coefficient vector: (hbar/2) sigma_i Psi.
C2 apply_angular_momentum(int i, const C2& spinor, double hbar);

// M_i applied to an arbitrary angular jet: -i hbar A_i^r d_r f. The result
// is order 1 because one derivative order is consumed.
AngJet1 apply_angular_momentum_jet(int i, const AngJet2& f, double hbar,
                                   const EulerTriple& angles,
                                   double pole_margin = kDefaultPoleMargin);

// Integral of f over SU(2) against dOmega.
cplx su2_quadrature(const std::function<cplx(const EulerTriple&)>& f,
                    const QuadratureOrder& order);

// Discrete <-> angular representation transforms (Eqs of the u_a expansion).
std::function<cplx(const EulerTriple&)> to_angular(const C2& spinor);
C2 to_spinor(const std::function<cplx(const EulerTriple&)>& psi, const QuadratureOrder& order);

// Quadrature evaluation of the sigma matrices: integral u_a* M_i u_b dOmega.
// Returns (hbar/2) sigma_i; the M_i action is built from basis jets and the
// A matrix, independent of apply_angular_momentum.
Mat2c sigma_from_integrals(int i, double hbar, const QuadratureOrder& order);

// Angular part of the Laplace-Beltrami operator applied to a jet, without
// the l^-2 scale: sum_rs over the unit-l inverse metric of
// (1/sin a) d_r(sin a g^rs d_s f). Multiply by l^-2 for physical units.
cplx angular_laplacian_unit(const AngJet2& f, const EulerTriple& angles,
                            double pole_margin = kDefaultPoleMargin);

// First-order jets of the unit-l angular Laplacian coefficients are not
// needed; the continuity-equation machinery uses divergence_angular below.
// (1/sin a) d_r(sin a w^r) for a vector of first-order jets w^r.
cplx divergence_angular(const std::array<AngJet1, 3>& w, const EulerTriple& angles,
                        double pole_margin = kDefaultPoleMargin);

}  // namespace rotator
