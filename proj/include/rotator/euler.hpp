#pragma once

#include <cmath>

#include "rotator/types.hpp"

namespace rotator {

// Point on the SU(2) Euler-angle chart. alpha in [0,pi], beta has period
// 2*pi, gamma has period 4*pi (half-integer spin doubles the gamma range).
struct EulerTriple {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;

    // Wraps beta and gamma into their fundamental ranges. alpha is left
    // untouched: trajectory code treats pole approach as an abort, not a
    // reflection.
    EulerTriple wrapped() const {
        auto mod = [](double x, double period) {
            double r = std::fmod(x, period);
            if (r < 0.0) r += period;
            return r;
        };
        return {alpha, mod(beta, 2.0 * kPi), mod(gamma, 4.0 * kPi)};
    }

    bool in_chart() const {
        return alpha >= 0.0 && alpha <= kPi && beta >= 0.0 && beta < 2.0 * kPi && gamma >= 0.0 &&
               gamma < 4.0 * kPi;
    }
};

inline constexpr double kDefaultPoleMargin = 1e-8;  // on |sin alpha|

}  // namespace rotator
