#pragma once

#include <cstdint>
#include <cmath>

#include "rotator/types.hpp"

namespace rotator {

// Deterministic RNG with hand-rolled distributions. The standard
// distributions are not pinned across library versions, and ensemble runs
// promise bitwise reproducibility for a fixed (seed, index) pair, so the
// mapping from raw bits to doubles lives here.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // splitmix64 warm-up decorrelates small seeds
        next_u64();
        next_u64();
    }

    // Independent stream for trajectory `index` of an ensemble.
    static Rng stream(std::uint64_t seed, std::uint64_t index) {
        return Rng(seed ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
    }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0,1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via Box-Muller (always draws two uniforms)
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

  private:
    std::uint64_t state_;
};

}  // namespace rotator
