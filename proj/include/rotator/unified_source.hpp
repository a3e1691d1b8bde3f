#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "rotator/field_state.hpp"
#include "rotator/guidance.hpp"

namespace rotator {

// ---------------------------------------------------------------------------
// Pointwise spatial/time jets of complex scalars. Diagonal second
// derivatives only; the configuration-space metric is block diagonal so no
// mixed derivatives ever enter. The time derivative composes like a fourth
// first-order direction.
// ---------------------------------------------------------------------------

struct SpaceJet {
    cplx v{};
    std::array<cplx, 3> d{};
    std::array<cplx, 3> d2{};
    cplx dt{};

    static SpaceJet constant(cplx c) {
        SpaceJet j;
        j.v = c;
        return j;
    }

    SpaceJet operator+(const SpaceJet& o) const;
    SpaceJet operator-(const SpaceJet& o) const;
    SpaceJet operator*(const SpaceJet& o) const;
    SpaceJet operator/(const SpaceJet& o) const;
    SpaceJet operator*(cplx s) const;
    SpaceJet conj() const;
    SpaceJet log() const;
};

// 1-D real jet helper for mollifier factors.
struct Jet1D {
    double v = 0.0, d = 0.0, d2 = 0.0;
};

// Normalized wrapped Gaussian on a circle of given period.
Jet1D wrapped_gaussian_jet(double x, double center, double sigma, double period);

// Normalized truncated Gaussian window in c = cos(alpha), expressed as a
// function of alpha (chain rule through c). Integrates to 1 against dc.
Jet1D cos_window_jet(double alpha, double c_center, double c_sigma);

// Angular factor builders for smooth test densities.
AngJet2 ang_jet_one();
AngJet2 ang_jet_cos_alpha(const EulerTriple& an);
AngJet2 ang_jet_sin_alpha(const EulerTriple& an);
AngJet2 ang_jet_cos_beta(const EulerTriple& an);
AngJet2 ang_jet_sin_beta(const EulerTriple& an);
AngJet2 ang_jet_cos_half_gamma(const EulerTriple& an);

// ---------------------------------------------------------------------------
// Density descriptors
// ---------------------------------------------------------------------------

// Closed-form complex density f(x, alpha, t) = spatial(x,t) * angular(alpha)
// with exact derivatives on both factors.
struct SmoothDensityF {
    std::function<SpaceJet(const Vec3&, double)> spatial;
    std::function<AngJet2(const EulerTriple&)> angular;
};

// Mollified 6-D point density. The coordinate delta is replaced by
// normalized bumps: wrapped Gaussians in x, beta, gamma and a cos(alpha)
// window; dividing by sin(alpha) makes f itself smooth through the poles.
struct MollifiedParticle {
    Vec3 q{};
    EulerTriple theta{};
    double width_x = 0.5;
    double width_angle = 0.3;
};

// f = delta6_mollified / sin(alpha); spatial widths wrap on the grid box.
SmoothDensityF mollified_particle_f(const MollifiedParticle& p, const GridSpec& grid);

// Modulation ratios v^b_a = u_b*(alpha) / u_a*(alpha) of the discrete
// unified field. Entries whose denominator vanishes at the chart edge come
// out infinite; each ratio is defined wherever its own denominator is not
// at a pole (v21 everywhere except alpha = pi, v12 except alpha = 0).
struct ModulationFunctions {
    cplx v11, v21, v12, v22;  // v21 = u2*/u1* (|v21| = tan(alpha/2)), v12 = 1/v21
};
ModulationFunctions modulation_at(const EulerTriple& angles);

// ---------------------------------------------------------------------------
// Analytic homogeneous solution for the identity checks: free Gaussian
// packet times a constant spin-1/2 angular factor, with the Casimir phase
// exp(-i 3 hbar t / (8 I)).
// ---------------------------------------------------------------------------

struct FreePacketPsi {
    Vec3 center{};
    Vec3 k{};
    double sigma = 1.0;
    C2 chi{1.0, 0.0};
    int dims = 1;

    // scalar part Phi(x,t) * exp(-i 3 hbar t/(8I)) with exact derivatives
    SpaceJet scalar_jet(const Vec3& x, double t, const RotatorParams& p) const;
    // spinor value at (x,t): scalar * chi
    C2 spinor_at(const Vec3& x, double t, const RotatorParams& p) const;
    // sample onto a grid at time t
    SpinorField sample(const GridSpec& grid, double t, const RotatorParams& p) const;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// Source term G(psi, f) with state derivatives from the evaluator
// (spectral or finite-difference) and angular derivatives closed form.
cplx source_G(const FieldEvaluator& ev, const SmoothDensityF& f, const Vec3& x,
              const EulerTriple& angles, const RotatorParams& params,
              const NodeThreshold& thr = NodeThreshold{});

struct ResidualStats {
    double max_abs = 0.0;
    double mean_abs = 0.0;
    int n = 0;
};

// Residual of the algebraic identity connecting F(u), G and the continuity
// bracket for u = psi - f/psi*. Exact in the continuum; the numerical value
// converges to zero at the order of the grid derivative scheme.
ResidualStats identity6_residual(const FreePacketPsi& psi, const SmoothDensityF& f,
                                 const GridSpec& grid, DerivKind deriv, double t,
                                 const std::vector<std::pair<Vec3, EulerTriple>>& samples,
                                 const RotatorParams& params);

// Functional-derivative source, two independent routes.
//   route G:  G(psi, f = mollified delta / sin alpha)
//   route EL: Euler-Lagrange expansion of the quantum-potential derivative
//             with coefficients frozen at the particle
cplx functional_derivative_source(const FieldEvaluator& ev, const MollifiedParticle& p,
                                  const Vec3& x, const EulerTriple& angles,
                                  const RotatorParams& params,
                                  const NodeThreshold& thr = NodeThreshold{});
cplx functional_derivative_source_el(const FieldEvaluator& ev, const MollifiedParticle& p,
                                     const Vec3& x, const EulerTriple& angles,
                                     const RotatorParams& params,
                                     const NodeThreshold& thr = NodeThreshold{});

// Weak-form pairing <route, phi> over box x chart used by the dual-route
// comparison; restricted to the mollifier support. The heavy state jets are
// shared across test functions, so all pairings come out of one pass.
struct SourcePairing {
    double route_g_re, route_g_im;
    double route_el_re, route_el_im;
    double abs_diff;
};
std::vector<SourcePairing> source_dual_route_pairings(
    const FieldEvaluator& ev, const MollifiedParticle& p, const RotatorParams& params,
    const std::vector<std::function<double(const Vec3&, const EulerTriple&)>>& phis,
    const QuadratureOrder& order);
SourcePairing source_dual_route_pairing(
    const FieldEvaluator& ev, const MollifiedParticle& p, const RotatorParams& params,
    const std::function<double(const Vec3&, const EulerTriple&)>& phi,
    const QuadratureOrder& order);

// ---------------------------------------------------------------------------
// Conserved-density transport (particle clouds are exact weak solutions of
// the continuity equation).
// ---------------------------------------------------------------------------

struct ParticleCloud {
    std::vector<Vec3> q;
    std::vector<EulerTriple> theta;
    std::vector<double> w;
    int n_aborted = 0;

    double total_weight() const;
    Vec3 centroid_q() const;
    // circular means of the angles (beta mod 2pi, gamma mod 4pi)
    EulerTriple centroid_theta() const;
    Vec3 spatial_variance() const;
};

ParticleCloud cloud_from_mollified_particle(const MollifiedParticle& p, int count,
                                            std::uint64_t seed, int dims);
ParticleCloud cloud_from_state_density(const SnapshotSeries& series, int count,
                                       std::uint64_t seed);

// Advect every member along the rotator guidance flow to series.t_end().
ParticleCloud evolve_conserved_density(const ParticleCloud& initial, const SnapshotSeries& series,
                                       const ExternalFields& fields, const RotatorParams& params,
                                       const IntegrationOptions& opt, int n_threads = 1);

// Gaussian kernel-density estimate of the cloud's spatial density.
double cloud_kde(const ParticleCloud& cloud, const Vec3& x, double bandwidth, int dims);

// ---------------------------------------------------------------------------
// Discrete unified field
// ---------------------------------------------------------------------------

// U^a(x) = Psi^a(x) - u_a*(theta) N(x - q) / psi*(x, theta), the projection-
// consistent reading of the modulated soliton term.
C2 unified_field_discrete(const FieldEvaluator& ev, const MollifiedParticle& p, const Vec3& x,
                          const NodeThreshold& thr = NodeThreshold{});

// Independent evaluation: project the mollified angular-representation
// unified field with the u_a* quadrature.
C2 unified_field_projected(const FieldEvaluator& ev, const MollifiedParticle& p, const Vec3& x,
                           const QuadratureOrder& order);

struct ModulationReport {
    double magnitude_expected = 0.0;
    double magnitude_max_dev = 0.0;
    double phase_rate_fit = 0.0;
    double phase_rate_expected = 0.0;
};

// Along a free spin-up trajectory the modulation u2*/u1* has constant
// magnitude tan(theta0_1/2) and phase advancing at +nu.
ModulationReport factorized_modulation_check(const Trajectory& traj, const RotatorParams& params,
                                             double pole_margin = kDefaultPoleMargin);

}  // namespace rotator
