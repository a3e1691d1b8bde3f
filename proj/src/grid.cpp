#include "rotator/grid.hpp"

#include <fftw3.h>

#include <mutex>

namespace rotator {

namespace {

std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

std::vector<cplx> fft_3d(const GridSpec& grid, const std::vector<cplx>& in, int sign) {
    std::vector<cplx> out(in.size());
    {
        // plan creation is not thread-safe; FFTW_ESTIMATE keeps plans
        // deterministic run to run
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fftw_plan plan = fftw_plan_dft_3d(
            grid.points[0], grid.points[1], grid.points[2],
            reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
            reinterpret_cast<fftw_complex*>(out.data()), sign, FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
        fftw_execute(plan);
        fftw_destroy_plan(plan);
    }
    return out;
}

}  // namespace

std::vector<cplx> fft_forward(const GridSpec& grid, const std::vector<cplx>& field) {
    std::vector<cplx> c = fft_3d(grid, field, FFTW_FORWARD);
    const double inv = 1.0 / static_cast<double>(grid.total());
    for (cplx& x : c) x *= inv;
    return c;
}

std::vector<cplx> fft_inverse(const GridSpec& grid, const std::vector<cplx>& coeffs) {
    return fft_3d(grid, coeffs, FFTW_BACKWARD);
}

std::vector<cplx> spectral_derivative(const GridSpec& grid, const std::vector<cplx>& field,
                                      int axis, int order) {
    std::vector<cplx> c = fft_forward(grid, field);
    for (std::size_t f = 0; f < c.size(); ++f) {
        const auto ijk = grid.unflatten(f);
        if (order == 1) {
            c[f] *= kI * grid.kderiv(ijk[axis], axis);
        } else {
            const double k = grid.kvalue(ijk[axis], axis);
            c[f] *= -k * k;
        }
    }
    return fft_inverse(grid, c);
}

std::vector<cplx> fd_derivative(const GridSpec& grid, const std::vector<cplx>& field, int axis,
                                int order, int accuracy) {
    const double h = grid.spacing(axis);
    std::vector<cplx> out(field.size());
    const int N = grid.points[axis];

    auto shifted = [&](std::size_t flat, int offset) {
        auto ijk = grid.unflatten(flat);
        ijk[axis] = grid.wrap(ijk[axis] + offset, axis);
        return field[grid.index(ijk[0], ijk[1], ijk[2])];
    };

    if (N < 5 && accuracy == 4) throw SimError("fd_derivative: grid too small for 4th order");

    for (std::size_t f = 0; f < field.size(); ++f) {
        const cplx fm2 = shifted(f, -2), fm1 = shifted(f, -1), f0 = field[f],
                   fp1 = shifted(f, 1), fp2 = shifted(f, 2);
        if (order == 1) {
            out[f] = (accuracy == 4) ? (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h)
                                     : (fp1 - fm1) / (2.0 * h);
        } else {
            out[f] = (accuracy == 4)
                         ? (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h)
                         : (fp1 - 2.0 * f0 + fm1) / (h * h);
        }
    }
    return out;
}

}  // namespace rotator
