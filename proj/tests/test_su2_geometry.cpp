#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "rotator/rng.hpp"
#include "rotator/su2_geometry.hpp"

using namespace rotator;

namespace {

const double kC = 1.0 / (2.0 * std::sqrt(2.0) * kPi);

EulerTriple random_angles(Rng& rng, double margin = 0.15) {
    return {rng.uniform(margin, kPi - margin), rng.uniform(0.0, 2.0 * kPi),
            rng.uniform(0.0, 4.0 * kPi)};
}

cplx basis_value(int a, const EulerTriple& an) {
    const BasisPair u = basis_u(an);
    return a == 1 ? u.u1 : u.u2;
}

}  // namespace

TEST_CASE("su2_metric at alpha = pi/2") {
    const AngularMetric m = su2_metric({0.5 * kPi, 0.1, 0.2}, 1.0);
    CHECK((m.g_lower - Mat3::identity()).max_abs() == doctest::Approx(0.0).epsilon(1e-14));
    CHECK((m.g_upper - Mat3::identity()).max_abs() == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(m.sqrt_g == doctest::Approx(1.0).epsilon(1e-14));

    const AngularMetric m2 = su2_metric({0.5 * kPi, 0.1, 0.2}, 2.0);
    CHECK(m2.sqrt_g == doctest::Approx(8.0).epsilon(1e-14));
}

TEST_CASE("su2_metric inverse against direct inversion") {
    // off-diagonal cos(pi/3) = 0.5, and g_upper equals the matrix inverse
    const AngularMetric m = su2_metric({kPi / 3.0, 1.0, 2.0}, 1.0);
    CHECK(m.g_lower(1, 2) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK((m.g_upper - m.g_lower.inverse()).max_abs() < 1e-12);
    CHECK((m.g_lower * m.g_upper - Mat3::identity()).max_abs() < 1e-12);

    Rng rng(7);
    for (int i = 0; i < 50; ++i) {
        const EulerTriple an = random_angles(rng);
        const double l = rng.uniform(0.3, 2.5);
        const AngularMetric mm = su2_metric(an, l);
        CHECK((mm.g_upper - mm.g_lower.inverse()).max_abs() < 1e-10);
        CHECK(mm.sqrt_g ==
              doctest::Approx(l * l * l * std::abs(std::sin(an.alpha))).epsilon(1e-12));
    }
}

TEST_CASE("su2_metric pole guard") {
    CHECK_THROWS_AS(su2_metric({0.0, 0.0, 0.0}, 1.0), PoleSingularity);
    CHECK_THROWS_AS(su2_metric({kPi, 1.0, 1.0}, 1.0), PoleSingularity);
}

TEST_CASE("basis_u special points") {
    const BasisPair u0 = basis_u({0.0, 0.0, 0.0});
    CHECK(std::abs(u0.u1 - cplx(kC, 0.0)) < 1e-15);
    CHECK(std::abs(u0.u2) < 1e-15);

    const BasisPair upi = basis_u({kPi, 0.0, 0.0});
    CHECK(std::abs(upi.u1) < 1e-15);
    CHECK(std::abs(upi.u2) == doctest::Approx(kC).epsilon(1e-14));

    // (pi/2, pi, 0): u1 = c cos(pi/4) e^{-i pi/2}
    const BasisPair um = basis_u({0.5 * kPi, kPi, 0.0});
    const cplx want = kC * std::cos(0.25 * kPi) * std::exp(-kI * 0.5 * kPi);
    CHECK(std::abs(um.u1 - want) < 1e-15);
}

TEST_CASE("basis normalization pointwise") {
    Rng rng(11);
    for (int i = 0; i < 100; ++i) {
        const EulerTriple an = random_angles(rng, 0.0);
        const BasisPair u = basis_u(an);
        CHECK(std::norm(u.u1) + std::norm(u.u2) ==
              doctest::Approx(1.0 / (8.0 * kPi * kPi)).epsilon(1e-13));
    }
}

TEST_CASE("basis jets match finite differences") {
    Rng rng(23);
    const double h = 1e-5;
    for (int trial = 0; trial < 20; ++trial) {
        const EulerTriple an = random_angles(rng);
        for (int a = 1; a <= 2; ++a) {
            const AngJet2 j = basis_jet(a, an);
            CHECK(std::abs(j.v - basis_value(a, an)) < 1e-15);
            for (int r = 0; r < 3; ++r) {
                EulerTriple p = an, m = an;
                (r == 0 ? p.alpha : r == 1 ? p.beta : p.gamma) += h;
                (r == 0 ? m.alpha : r == 1 ? m.beta : m.gamma) -= h;
                const cplx fd = (basis_value(a, p) - basis_value(a, m)) / (2.0 * h);
                CHECK(std::abs(j.d[r] - fd) < 1e-9);
                const cplx fd2 =
                    (basis_value(a, p) - 2.0 * basis_value(a, an) + basis_value(a, m)) / (h * h);
                CHECK(std::abs(j.h[r][r] - fd2) < 1e-5);
            }
        }
    }
}

TEST_CASE("a_matrix substitution rows") {
    const AMatrix a0 = a_matrix({0.5 * kPi, 0.0, 1.3});
    CHECK(a0.a(0, 0) == doctest::Approx(-1.0));
    CHECK(a0.a(0, 1) == doctest::Approx(0.0));
    CHECK(a0.a(0, 2) == doctest::Approx(0.0));
    CHECK(a0.a(1, 0) == doctest::Approx(0.0));
    CHECK(a0.a(1, 1) == doctest::Approx(0.0));
    CHECK(a0.a(1, 2) == doctest::Approx(-1.0));
    CHECK(a0.a(2, 0) == doctest::Approx(0.0));
    CHECK(a0.a(2, 1) == doctest::Approx(-1.0));
    CHECK(a0.a(2, 2) == doctest::Approx(0.0));

    const AMatrix a1 = a_matrix({0.5 * kPi, 0.5 * kPi, 0.0});
    CHECK(a1.a(0, 0) == doctest::Approx(0.0));
    CHECK(a1.a(0, 2) == doctest::Approx(-1.0));
    CHECK(a1.a(1, 0) == doctest::Approx(1.0));
    CHECK(a1.a(1, 1) == doctest::Approx(0.0));
    CHECK(a1.a(2, 1) == doctest::Approx(-1.0));
}

TEST_CASE("a_matrix jets match finite differences") {
    Rng rng(31);
    const double h = 1e-6;
    for (int trial = 0; trial < 10; ++trial) {
        const EulerTriple an = random_angles(rng);
        for (int i = 0; i < 3; ++i)
            for (int r = 0; r < 3; ++r) {
                const AngJet2 j = a_matrix_jet(i, r, an);
                CHECK(std::abs(j.v - cplx(a_matrix(an).a(i, r), 0.0)) < 1e-14);
                for (int s = 0; s < 2; ++s) {  // entries depend on alpha, beta only
                    EulerTriple p = an, m = an;
                    (s == 0 ? p.alpha : p.beta) += h;
                    (s == 0 ? m.alpha : m.beta) -= h;
                    const double fd = (a_matrix(p).a(i, r) - a_matrix(m).a(i, r)) / (2.0 * h);
                    CHECK(std::abs(j.d[s].real() - fd) < 1e-7);
                }
            }
    }
}

TEST_CASE("divergence identity d_r(sin a A_i^r) = 0") {
    Rng rng(37);
    for (int trial = 0; trial < 100; ++trial) {
        const EulerTriple an = random_angles(rng);
        for (int i = 0; i < 3; ++i) CHECK(a_divergence_residual(i, an) < 1e-12);
    }
    // the finite-difference rendition stays within the O(h^2) bound (for
    // this A matrix the alpha and beta truncation terms cancel, so the
    // observed residual is far below it)
    const EulerTriple an{1.1, 2.3, 0.7};
    const double h = 1e-2;
    for (int i = 0; i < 3; ++i) {
        double sum = 0.0;
        for (int r = 0; r < 3; ++r) {
            EulerTriple p = an, m = an;
            (r == 0 ? p.alpha : r == 1 ? p.beta : p.gamma) += h;
            (r == 0 ? m.alpha : r == 1 ? m.beta : m.gamma) -= h;
            sum += (std::sin(p.alpha) * a_matrix(p).a(i, r) -
                    std::sin(m.alpha) * a_matrix(m).a(i, r)) /
                   (2.0 * h);
        }
        CHECK(std::abs(sum) < h * h);
    }
}

TEST_CASE("metric relation l^-2 A A^T = g_upper") {
    Rng rng(41);
    for (int trial = 0; trial < 100; ++trial) {
        const EulerTriple an = random_angles(rng);
        const double l = rng.uniform(0.4, 2.0);
        const AMatrix A = a_matrix(an);
        const AngularMetric m = su2_metric(an, l);
        for (int r = 0; r < 3; ++r)
            for (int s = 0; s < 3; ++s) {
                double sum = 0.0;
                for (int i = 0; i < 3; ++i) sum += A.a(i, r) * A.a(i, s);
                CHECK(std::abs(sum / (l * l) - m.g_upper(r, s)) < 1e-12 / (l * l));
            }
    }
}

TEST_CASE("angular momentum on the coefficient vector") {
    const double hb = 1.0;
    const C2 up{1.0, 0.0};
    const C2 m3 = apply_angular_momentum(2, up, hb);
    CHECK(std::abs(m3.a - 0.5) < 1e-15);
    CHECK(std::abs(m3.b) < 1e-15);
    const C2 m1 = apply_angular_momentum(0, up, hb);
    CHECK(std::abs(m1.a) < 1e-15);
    CHECK(std::abs(m1.b - 0.5) < 1e-15);

    // applying any M_i twice gives (hbar/2)^2
    Rng rng(43);
    for (int trial = 0; trial < 20; ++trial) {
        const C2 psi{cplx(rng.uniform(-1, 1), rng.uniform(-1, 1)),
                     cplx(rng.uniform(-1, 1), rng.uniform(-1, 1))};
        for (int i = 0; i < 3; ++i) {
            const C2 twice = apply_angular_momentum(i, apply_angular_momentum(i, psi, hb), hb);
            CHECK(std::abs(twice.a - 0.25 * psi.a) < 1e-15);
            CHECK(std::abs(twice.b - 0.25 * psi.b) < 1e-15);
        }
    }
}

TEST_CASE("jet route of M_i agrees with the sigma route on spin-1/2 states") {
    Rng rng(47);
    const double hb = 0.7;
    for (int trial = 0; trial < 30; ++trial) {
        const EulerTriple an = random_angles(rng);
        const C2 psi{cplx(rng.uniform(-1, 1), rng.uniform(-1, 1)),
                     cplx(rng.uniform(-1, 1), rng.uniform(-1, 1))};
        const AngJet2 f = basis_jet(1, an) * psi.a + basis_jet(2, an) * psi.b;
        for (int i = 0; i < 3; ++i) {
            const AngJet1 via_jet = apply_angular_momentum_jet(i, f, hb, an);
            const C2 coeff = apply_angular_momentum(i, psi, hb);
            const BasisPair u = basis_u(an);
            const cplx via_sigma = coeff.a * u.u1 + coeff.b * u.u2;
            CHECK(std::abs(via_jet.v - via_sigma) < 1e-13);
        }
    }
}

TEST_CASE("quadrature orthonormality and volume") {
    const QuadratureOrder order{8, 5, 5};
    const cplx n11 = su2_quadrature(
        [](const EulerTriple& an) { return std::conj(basis_u(an).u1) * basis_u(an).u1; }, order);
    CHECK(std::abs(n11 - 1.0) < 1e-12);
    const cplx n12 = su2_quadrature(
        [](const EulerTriple& an) { return std::conj(basis_u(an).u1) * basis_u(an).u2; }, order);
    CHECK(std::abs(n12) < 1e-12);
    const cplx vol =
        su2_quadrature([](const EulerTriple&) { return cplx(1.0, 0.0); }, order);
    CHECK(std::abs(vol - 16.0 * kPi * kPi) < 1e-9);
}

TEST_CASE("quadrature order guard") {
    CHECK_THROWS_AS(su2_quadrature([](const EulerTriple&) { return cplx(0.0); },
                                   QuadratureOrder{1, 5, 5}),
                    InvalidOrder);
}

TEST_CASE("spinor transform round trip") {
    const QuadratureOrder order{16, 8, 16};
    for (const C2& psi : {C2{1.0, 0.0}, C2{0.0, 1.0},
                          C2{cplx(1.0 / std::sqrt(2.0), 0), cplx(0, 1.0 / std::sqrt(2.0))}}) {
        const C2 back = to_spinor(to_angular(psi), order);
        CHECK(std::abs(back.a - psi.a) < 1e-12);
        CHECK(std::abs(back.b - psi.b) < 1e-12);
    }
}

TEST_CASE("sigma matrices from quadrature") {
    for (double hb : {1.0, 2.0}) {
        const QuadratureOrder order{16, 8, 16};
        for (int i = 0; i < 3; ++i) {
            const Mat2c got = sigma_from_integrals(i, hb, order);
            const Mat2c want = pauli(i) * cplx(0.5 * hb, 0.0);
            CHECK((got - want).max_abs() < 1e-12 * hb);
        }
    }
}

TEST_CASE("spin-1/2 Casimir: unit-l angular Laplacian of u_a") {
    Rng rng(53);
    for (int trial = 0; trial < 20; ++trial) {
        const EulerTriple an = random_angles(rng);
        for (int a = 1; a <= 2; ++a) {
            const AngJet2 j = basis_jet(a, an);
            const cplx lap = angular_laplacian_unit(j, an);
            CHECK(std::abs(lap + 0.75 * j.v) < 1e-12);
        }
    }
}

TEST_CASE("jet algebra consistency: product, quotient, log") {
    Rng rng(59);
    for (int trial = 0; trial < 10; ++trial) {
        const EulerTriple an = random_angles(rng);
        const AngJet2 u1 = basis_jet(1, an), u2 = basis_jet(2, an);
        const AngJet2 prod = u1 * u2;
        const AngJet2 back = prod / u2;
        CHECK(std::abs(back.v - u1.v) < 1e-14);
        for (int r = 0; r < 3; ++r) {
            CHECK(std::abs(back.d[r] - u1.d[r]) < 1e-12);
            for (int s = 0; s < 3; ++s) CHECK(std::abs(back.h[r][s] - u1.h[r][s]) < 1e-10);
        }
        // rho = |u1 chi1 + u2 chi2|^2 is positive; log jets invert exp-wise
        const AngJet2 psi = u1 * cplx(0.8, 0.1) + u2 * cplx(0.2, -0.5);
        const AngJet2 rho = psi * psi.conj();
        const AngJet2 lr = rho.log();
        const AngJet2 sq = rho.sqrt_real();
        CHECK(std::abs(std::exp(lr.v) - rho.v) < 1e-13);
        CHECK(std::abs(sq.v * sq.v - rho.v) < 1e-13);
        for (int r = 0; r < 3; ++r)
            CHECK(std::abs(2.0 * sq.d[r] * sq.v - rho.d[r]) < 1e-12);
    }
}
