#include "rotator/types.hpp"

#include <cmath>

#include "rotator/errors.hpp"

namespace rotator {

RotatorParams RotatorParams::from_mass_length(double m, double l, double mm, double hbar) {
    if (m <= 0.0 || l <= 0.0 || hbar <= 0.0)
        throw SimError("RotatorParams: mass, length and hbar must be positive");
    RotatorParams p;
    p.m = m;
    p.l = l;
    p.I = m * l * l;
    p.mm = mm;
    p.hbar = hbar;
    return p;
}

RotatorParams RotatorParams::from_mass_inertia(double m, double I, double mm, double hbar) {
    if (m <= 0.0 || I <= 0.0 || hbar <= 0.0)
        throw SimError("RotatorParams: mass, inertia and hbar must be positive");
    RotatorParams p;
    p.m = m;
    p.I = I;
    p.l = std::sqrt(I / m);
    p.mm = mm;
    p.hbar = hbar;
    return p;
}

}  // namespace rotator
