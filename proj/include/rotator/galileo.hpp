#pragma once

#include <string>
#include <vector>

#include "rotator/guidance.hpp"
#include "rotator/propagator.hpp"
#include "rotator/unified_source.hpp"

namespace rotator {

// 10-parameter Galileo element plus the independent angle parameter eta.
// Rotations are handled in the infinitesimal regime only.
struct GalileoElement {
    double d = 0.0;   // time translation
    Vec3 c{};         // space translation
    Vec3 epsilon{};   // infinitesimal rotation angles
    Vec3 w{};         // boost
    Vec3 eta{};       // independent angle-sector parameter

    void validate() const {
        if (epsilon.norm() > 0.1 || eta.norm() > 0.1)
            throw SimError("GalileoElement: |epsilon|, |eta| must stay within 0.1 rad");
    }
};

// Spin-1/2 rotation data. The generator forms S = 1 + (i/2) eps.sigma and
// a = 1 + [eps]x are what the first-order identities are stated in; the
// exact exponentials are used to move states and trajectories so that
// unitarity holds to roundoff.
struct SpinHalfRotation {
    Mat2c S;
    Mat3 a;
    Mat2c S_exact;
    Mat3 a_exact;

    static SpinHalfRotation from_epsilon(const Vec3& eps);
};

// State transform: resamples onto the same grid, applying the boost phase
// chi = m(w^2 t/2 - (a w).x) and the exact spin rotation.
SpinorField transform_spinor_state(const SpinorField& state, const GalileoElement& g,
                                   const RotatorParams& params);

// First-order angle map alpha^r + eta_i A_i^r(alpha).
EulerTriple transform_angles(const EulerTriple& angles, const Vec3& eta,
                             double pole_margin = kDefaultPoleMargin);

// det(d alpha'/d alpha) of the angle map; pairs with the density-factor
// identity sin(a') = sin(a) / det + O(eta^2).
double angle_map_jacobian_det(const EulerTriple& angles, const Vec3& eta,
                              double pole_margin = kDefaultPoleMargin);

ExternalFields transform_fields(const ExternalFields& fields, const GalileoElement& g);

// Orbit transform with the eta = -epsilon convention of the combined
// rotation symmetry.
Trajectory transform_trajectory(const Trajectory& traj, const GalileoElement& g);

// Residual of the basis correspondence D(eps) u_a = u_b S^b_a; second order
// in eps.
double correspondence_eq40_residual(const Vec3& eps, const std::vector<EulerTriple>& samples);

// Residual of the pushforward law for the angular-momentum operators,
// (M_i F')(a') = a_ik(-eta) (M_k F)(a) + O(eta^2), on a spin-1/2 state.
double pushforward_eq43_residual(const Vec3& eta, const EulerTriple& angles, const C2& coeffs,
                                 const RotatorParams& params);

// ---------------------------------------------------------------------------
// Two-pipeline covariance certification
// ---------------------------------------------------------------------------

struct CovarianceScenario {
    RotatorParams params;
    GridSpec grid;
    ExternalFields fields;
    InitialState initial;
    PropagatorConfig prop;
    double t_final = 1.0;
    Vec3 q0{};
    EulerTriple theta0{0.5 * kPi, 0.3, 0.5};
    double traj_dt = 1e-2;
    double mollifier_width_x = 0.5;
    double mollifier_width_angle = 0.3;
};

struct CovarianceReport {
    std::string element;
    double state_residual = 0.0;       // phase-aligned max-abs over nodes
    double trajectory_residual_q = 0.0;
    double trajectory_residual_theta = 0.0;
    double spin_residual = 0.0;
    double unified_residual = 0.0;
    double max_residual() const {
        double m = state_residual;
        m = std::max(m, trajectory_residual_q);
        m = std::max(m, trajectory_residual_theta);
        m = std::max(m, spin_residual);
        m = std::max(m, unified_residual);
        return m;
    }
};

// Runs (propagate then transform) against (transform then propagate) and
// reports residuals for the state, the trajectory, the spin vector and the
// mollified unified field.
CovarianceReport covariance_residual(const CovarianceScenario& sc, const GalileoElement& g,
                                     int n_threads = 1);

}  // namespace rotator
