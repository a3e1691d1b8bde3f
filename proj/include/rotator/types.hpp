#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>

namespace rotator {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

// ---------------------------------------------------------------------------
// Small fixed-size linear algebra. The project only ever needs 3-vectors,
// 3x3 real matrices and 2x2 complex matrices, so these are hand-rolled
// value types rather than a matrix-library dependency.
// ---------------------------------------------------------------------------

struct Vec3 {
    std::array<double, 3> v{0.0, 0.0, 0.0};

    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }

    Vec3 operator+(const Vec3& o) const { return {{v[0] + o[0], v[1] + o[1], v[2] + o[2]}}; }
    Vec3 operator-(const Vec3& o) const { return {{v[0] - o[0], v[1] - o[1], v[2] - o[2]}}; }
    Vec3 operator*(double s) const { return {{v[0] * s, v[1] * s, v[2] * s}}; }
    Vec3 operator/(double s) const { return {{v[0] / s, v[1] / s, v[2] / s}}; }
    Vec3& operator+=(const Vec3& o) {
        v[0] += o[0]; v[1] += o[1]; v[2] += o[2];
        return *this;
    }
    Vec3 operator-() const { return {{-v[0], -v[1], -v[2]}}; }

    double dot(const Vec3& o) const { return v[0] * o[0] + v[1] * o[1] + v[2] * o[2]; }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 cross(const Vec3& o) const {
        return {{v[1] * o[2] - v[2] * o[1], v[2] * o[0] - v[0] * o[2], v[0] * o[1] - v[1] * o[0]}};
    }
};

inline Vec3 operator*(double s, const Vec3& a) { return a * s; }

struct Mat3 {
    // row-major: m[r][c]
    std::array<std::array<double, 3>, 3> m{};

    static Mat3 identity() {
        Mat3 e;
        e.m[0][0] = e.m[1][1] = e.m[2][2] = 1.0;
        return e;
    }
    static Mat3 diag(double a, double b, double c) {
        Mat3 d;
        d.m[0][0] = a; d.m[1][1] = b; d.m[2][2] = c;
        return d;
    }

    double& operator()(std::size_t r, std::size_t c) { return m[r][c]; }
    double operator()(std::size_t r, std::size_t c) const { return m[r][c]; }

    Vec3 operator*(const Vec3& x) const {
        Vec3 y;
        for (int r = 0; r < 3; ++r)
            y[r] = m[r][0] * x[0] + m[r][1] * x[1] + m[r][2] * x[2];
        return y;
    }
    Mat3 operator*(const Mat3& o) const {
        Mat3 p;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                p.m[r][c] = m[r][0] * o.m[0][c] + m[r][1] * o.m[1][c] + m[r][2] * o.m[2][c];
        return p;
    }
    Mat3 operator-(const Mat3& o) const {
        Mat3 d;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                d.m[r][c] = m[r][c] - o.m[r][c];
        return d;
    }
    Mat3 transpose() const {
        Mat3 t;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                t.m[r][c] = m[c][r];
        return t;
    }
    double det() const {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
             - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
             + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    }
    Mat3 inverse() const {
        const double d = det();
        Mat3 inv;
        inv.m[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / d;
        inv.m[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / d;
        inv.m[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / d;
        inv.m[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / d;
        inv.m[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / d;
        inv.m[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / d;
        inv.m[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / d;
        inv.m[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / d;
        inv.m[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / d;
        return inv;
    }
    double max_abs() const {
        double mx = 0.0;
        for (const auto& row : m)
            for (double x : row) mx = std::max(mx, std::abs(x));
        return mx;
    }
};

// 2-component complex spinor (the discrete representation Psi^a).
struct C2 {
    cplx a{0.0, 0.0};
    cplx b{0.0, 0.0};

    C2 operator+(const C2& o) const { return {a + o.a, b + o.b}; }
    C2 operator-(const C2& o) const { return {a - o.a, b - o.b}; }
    C2 operator*(cplx s) const { return {a * s, b * s}; }
    C2 operator*(double s) const { return {a * s, b * s}; }
    C2& operator+=(const C2& o) {
        a += o.a; b += o.b;
        return *this;
    }
    cplx dot(const C2& o) const { return std::conj(a) * o.a + std::conj(b) * o.b; }  // <this|o>
    double norm_sq() const { return std::norm(a) + std::norm(b); }
};

inline C2 operator*(cplx s, const C2& x) { return x * s; }
inline C2 operator*(double s, const C2& x) { return x * s; }

struct Mat2c {
    // m[r][c], r,c in {0,1}
    std::array<std::array<cplx, 2>, 2> m{};

    static Mat2c identity() {
        Mat2c e;
        e.m[0][0] = e.m[1][1] = 1.0;
        return e;
    }

    cplx& operator()(std::size_t r, std::size_t c) { return m[r][c]; }
    cplx operator()(std::size_t r, std::size_t c) const { return m[r][c]; }

    C2 operator*(const C2& x) const {
        return {m[0][0] * x.a + m[0][1] * x.b, m[1][0] * x.a + m[1][1] * x.b};
    }
    Mat2c operator*(const Mat2c& o) const {
        Mat2c p;
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c)
                p.m[r][c] = m[r][0] * o.m[0][c] + m[r][1] * o.m[1][c];
        return p;
    }
    Mat2c operator+(const Mat2c& o) const {
        Mat2c s;
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c)
                s.m[r][c] = m[r][c] + o.m[r][c];
        return s;
    }
    Mat2c operator-(const Mat2c& o) const {
        Mat2c s;
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c)
                s.m[r][c] = m[r][c] - o.m[r][c];
        return s;
    }
    Mat2c operator*(cplx s) const {
        Mat2c p;
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c)
                p.m[r][c] = m[r][c] * s;
        return p;
    }
    Mat2c adjoint() const {
        Mat2c h;
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c)
                h.m[r][c] = std::conj(m[c][r]);
        return h;
    }
    double max_abs() const {
        double mx = 0.0;
        for (const auto& row : m)
            for (const cplx& x : row) mx = std::max(mx, std::abs(x));
        return mx;
    }
};

// Pauli matrices (dimensionless, Eq-30 patterns).
inline Mat2c pauli(int i) {
    Mat2c s;
    switch (i) {
        case 0: s(0, 1) = 1.0; s(1, 0) = 1.0; break;
        case 1: s(0, 1) = -kI; s(1, 0) = kI; break;
        default: s(0, 0) = 1.0; s(1, 1) = -1.0; break;
    }
    return s;
}

// Physical constants of the rotator. I = m*l^2 is enforced on construction.
struct RotatorParams {
    double m = 1.0;      // mass
    double I = 1.0;      // moment of inertia
    double l = 1.0;      // length scale, I = m l^2
    double mm = 1.0;     // magnetic moment
    double hbar = 1.0;

    static RotatorParams from_mass_length(double m, double l, double mm = 1.0, double hbar = 1.0);
    static RotatorParams from_mass_inertia(double m, double I, double mm = 1.0, double hbar = 1.0);
};

}  // namespace rotator
