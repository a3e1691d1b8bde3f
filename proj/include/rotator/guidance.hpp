#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "rotator/field_state.hpp"
#include "rotator/rng.hpp"

namespace rotator {

enum class VelocityMode { rotator, pauli, pauli_plus_spin };

struct Trajectory {
    enum class Status { ok, node_abort, pole_abort };

    std::vector<double> times;
    std::vector<Vec3> q;
    std::vector<EulerTriple> theta;
    std::vector<double> rho_at_particle;        // |psi(q,theta)|^2 (rotator) or Psi^dag Psi
    std::vector<double> conserved_density_log;  // log(rho sin theta1) diagnostic
    std::vector<Vec3> spin_diag;  // body spin I A_i^r thetadot^r (rotator) or s_i(q)
    Status status = Status::ok;

    std::size_t size() const { return times.size(); }
};

struct EnsembleSpec {
    enum class Sampling { density_weighted, uniform, explicit_list };
    int count = 1;
    Sampling sampling = Sampling::density_weighted;
    std::uint64_t seed = 1;
    std::vector<std::pair<Vec3, EulerTriple>> points;  // explicit_list only
};

// Immutable sequence of propagated snapshots with linear interpolation in
// time; jets are linear in the field so blending jets equals the jet of the
// blended field.
class SnapshotSeries {
  public:
    explicit SnapshotSeries(std::vector<SpinorField> frames,
                            DerivKind kind = DerivKind::spectral);
    SnapshotSeries(const SnapshotSeries&) = delete;
    SnapshotSeries& operator=(const SnapshotSeries&) = delete;

    double t_begin() const { return frames_.front().time; }
    double t_end() const { return frames_.back().time; }
    std::size_t size() const { return frames_.size(); }
    const SpinorField& frame(std::size_t i) const { return frames_[i]; }
    const FieldEvaluator& evaluator(std::size_t i) const { return evals_[i]; }

    SpinorJet jet(const Vec3& x, double t, bool need_second = false) const;
    // absolute node threshold against the densest frame
    double threshold_abs(const NodeThreshold& thr) const { return thr.rel * max_density_; }
    double max_density() const { return max_density_; }

  private:
    std::vector<SpinorField> frames_;
    std::vector<FieldEvaluator> evals_;
    double max_density_ = 0.0;
};

// ---------------------------------------------------------------------------
// Velocity fields (jet-level kernels plus evaluator-level wrappers)
// ---------------------------------------------------------------------------

// Rotator translational velocity, v_i = (d_i S - A_i)/m.
Vec3 velocity_translational_from_jet(const SpinorJet& jet, const FieldSample& fs,
                                     const EulerTriple& angles, const RotatorParams& params,
                                     double threshold_abs, int dims);
Vec3 velocity_translational(const FieldEvaluator& ev, const ExternalFields& fields, const Vec3& x,
                            const EulerTriple& angles, const RotatorParams& params,
                            const NodeThreshold& thr = NodeThreshold{});

// Euler-angle rates, v^r = I^-1 A_i^r (Re(M_i psi/psi) + mm I B_i).
Vec3 velocity_angular_from_jet(const SpinorJet& jet, const FieldSample& fs,
                               const EulerTriple& angles, const RotatorParams& params,
                               double threshold_abs, double pole_margin = kDefaultPoleMargin);
Vec3 velocity_angular(const FieldEvaluator& ev, const ExternalFields& fields, const Vec3& x,
                      const EulerTriple& angles, const RotatorParams& params,
                      const NodeThreshold& thr = NodeThreshold{},
                      double pole_margin = kDefaultPoleMargin);

// Pauli velocity of the discrete representation.
Vec3 velocity_pauli_from_jet(const SpinorJet& jet, const FieldSample& fs,
                             const RotatorParams& params, double threshold_abs, int dims);
Vec3 velocity_pauli(const FieldEvaluator& ev, const ExternalFields& fields, const Vec3& x,
                    const RotatorParams& params, const NodeThreshold& thr = NodeThreshold{});

// Spin-dependent supplement v_s = (1/m Psi^dag Psi) curl(Psi^dag Psi s).
Vec3 velocity_spin_supplement_from_jet(const SpinorJet& jet, const RotatorParams& params,
                                       double threshold_abs);
Vec3 velocity_spin_supplement(const FieldEvaluator& ev, const Vec3& x,
                              const RotatorParams& params,
                              const NodeThreshold& thr = NodeThreshold{});

// ---------------------------------------------------------------------------
// Trajectory integration
// ---------------------------------------------------------------------------

struct IntegrationOptions {
    double dt = 1e-3;
    NodeThreshold node_threshold{};
    double pole_margin = kDefaultPoleMargin;
    int record_stride = 1;  // store every n-th step
};

Trajectory integrate_trajectory(const Vec3& q0, const EulerTriple& theta0, VelocityMode mode,
                                const SnapshotSeries& series, const ExternalFields& fields,
                                const RotatorParams& params, const IntegrationOptions& opt);

// Closed-form free spin-up orbit: theta = (t1, t2 - nu t, t3 - nu t),
// nu = hbar / (4 I cos^2(theta0_1 / 2)).
EulerTriple free_spinup_analytic(const EulerTriple& theta0, const RotatorParams& params, double t,
                                 double pole_margin = kDefaultPoleMargin);
double free_spinup_rate(const EulerTriple& theta0, const RotatorParams& params,
                        double pole_margin = kDefaultPoleMargin);

// Draw (q0, theta0) samples; density_weighted uses rejection sampling from
// |psi_0|^2 sin(alpha) with the recorded seed.
std::vector<std::pair<Vec3, EulerTriple>> sample_initial_points(const EnsembleSpec& spec,
                                                                const SnapshotSeries& series);

std::vector<Trajectory> run_ensemble(const EnsembleSpec& spec, VelocityMode mode,
                                     const SnapshotSeries& series, const ExternalFields& fields,
                                     const RotatorParams& params, const IntegrationOptions& opt,
                                     int n_threads = 1);

}  // namespace rotator
