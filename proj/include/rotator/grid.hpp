#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "rotator/errors.hpp"
#include "rotator/types.hpp"

namespace rotator {

// Periodic spatial grid, 1-3 active dimensions. Inactive dimensions carry a
// single node and zero extent contribution.
struct GridSpec {
    int dims = 1;
    std::array<double, 3> extent{1.0, 1.0, 1.0};
    std::array<int, 3> points{8, 1, 1};

    void validate() const {
        if (dims < 1 || dims > 3) throw SimError("GridSpec: dims must be 1..3");
        for (int d = 0; d < dims; ++d) {
            if (points[d] < 8) throw SimError("GridSpec: at least 8 points per active dim");
            if (extent[d] <= 0.0) throw SimError("GridSpec: extent must be positive");
        }
        for (int d = dims; d < 3; ++d)
            if (points[d] != 1) throw SimError("GridSpec: inactive dims must have 1 point");
    }

    std::size_t total() const {
        return static_cast<std::size_t>(points[0]) * points[1] * points[2];
    }
    double spacing(int d) const { return d < dims ? extent[d] / points[d] : 0.0; }
    double cell_volume() const {
        double v = 1.0;
        for (int d = 0; d < dims; ++d) v *= spacing(d);
        return v;
    }
    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * points[1] + j) * points[2] + k;
    }
    std::array<int, 3> unflatten(std::size_t flat) const {
        const int k = static_cast<int>(flat % points[2]);
        const int j = static_cast<int>((flat / points[2]) % points[1]);
        const int i = static_cast<int>(flat / (static_cast<std::size_t>(points[1]) * points[2]));
        return {i, j, k};
    }
    Vec3 node(std::size_t flat) const {
        const auto ijk = unflatten(flat);
        return {{ijk[0] * spacing(0), ijk[1] * spacing(1), ijk[2] * spacing(2)}};
    }
    int wrap(int i, int d) const {
        const int n = points[d];
        i %= n;
        return i < 0 ? i + n : i;
    }
    // signed Fourier frequency index for mode n on axis d
    double kvalue(int n, int d) const {
        if (d >= dims) return 0.0;
        const int N = points[d];
        const int m = (n < (N + 1) / 2) ? n : n - N;
        return 2.0 * kPi * m / extent[d];
    }
    // odd-order spectral derivatives use a zeroed Nyquist multiplier (the
    // unpaired mode on even grids has no symmetric partner)
    double kderiv(int n, int d) const {
        if (d < dims && points[d] % 2 == 0 && n == points[d] / 2) return 0.0;
        return kvalue(n, d);
    }

    bool operator==(const GridSpec& o) const {
        return dims == o.dims && extent == o.extent && points == o.points;
    }
};

// Forward FFT normalized so that coefficients are trigonometric-polynomial
// coefficients: f(x_j) = sum_n c_n exp(i k_n . x_j).
std::vector<cplx> fft_forward(const GridSpec& grid, const std::vector<cplx>& field);
std::vector<cplx> fft_inverse(const GridSpec& grid, const std::vector<cplx>& coeffs);

// Whole-grid spectral derivative along one axis (order 1 or 2).
std::vector<cplx> spectral_derivative(const GridSpec& grid, const std::vector<cplx>& field,
                                      int axis, int order = 1);

// Finite-difference derivative arrays on the periodic grid.
std::vector<cplx> fd_derivative(const GridSpec& grid, const std::vector<cplx>& field, int axis,
                                int order, int accuracy);  // accuracy 2 or 4

}  // namespace rotator
