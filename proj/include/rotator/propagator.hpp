#pragma once

#include <vector>

#include "rotator/field_state.hpp"

namespace rotator {

enum class Scheme { split_step_spectral, crank_nicolson };
enum class EquationVariant { pauli_eq29, bopp_haag_eq27 };

// Time stepping configuration. Both schemes use Strang splitting
// (kinetic half, potential+spin full, kinetic half) with exactly unitary
// sub-flows, so the norm is conserved to roundoff and the global error is
// O(dt^2) once a potential is present.
//   split_step_spectral: exact kinetic phase exp(-i E(k) dt / hbar)
//   crank_nicolson:      Cayley kinetic phase (1 - i E dt/2hbar)/(1 + i E dt/2hbar)
struct PropagatorConfig {
    double dt = 1e-3;
    Scheme scheme = Scheme::split_step_spectral;
    EquationVariant variant = EquationVariant::pauli_eq29;
    int steps_per_output = 1;
};

// Gaussian packet initial data.
struct InitialState {
    Vec3 center{};
    double width = 1.0;  // isotropic standard deviation of |Psi|^2
    Vec3 wavevector{};
    C2 polarization{1.0, 0.0};
};

// Normalized Gaussian packet on the grid. Throws PacketTooWide when the
// packet does not fit the box (width > extent/8) or is unresolvable
// (width < 2 spacings).
SpinorField init_state(const GridSpec& grid, const InitialState& init);

// One time step of Eq-(29) dynamics (pauli_eq29) or of the exact spin-1/2
// reduction of the Bopp-Haag form (bopp_haag_eq27), which adds the scalar
// terms 3 hbar^2/8I and I (mm B)^2 / 2.
SpinorField step(const SpinorField& state, const ExternalFields& fields,
                 const RotatorParams& params, const PropagatorConfig& cfg);

// Advances to t_final, collecting snapshots every steps_per_output steps
// (the initial state is frame 0).
std::vector<SpinorField> propagate(const SpinorField& state, const ExternalFields& fields,
                                   const RotatorParams& params, const PropagatorConfig& cfg,
                                   double t_final);

struct Observables {
    double norm = 0.0;       // integral of Psi^dag Psi
    Vec3 mean_position{};    // density-weighted
    Vec3 mean_spin{};        // <hbar sigma/2>
};

Observables observables(const SpinorField& state, const RotatorParams& params);

}  // namespace rotator
