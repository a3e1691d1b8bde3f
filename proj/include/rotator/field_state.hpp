#pragma once

#include <array>
#include <functional>
#include <vector>

#include "rotator/grid.hpp"
#include "rotator/su2_geometry.hpp"

namespace rotator {

// ---------------------------------------------------------------------------
// State types
// ---------------------------------------------------------------------------

// 2-component spinor field on a periodic grid; the discrete representation.
struct SpinorField {
    GridSpec grid;
    std::array<std::vector<cplx>, 2> comp;
    double time = 0.0;

    static SpinorField zeros(const GridSpec& g) {
        SpinorField f;
        f.grid = g;
        f.comp[0].assign(g.total(), cplx{});
        f.comp[1].assign(g.total(), cplx{});
        return f;
    }

    C2 at(std::size_t flat) const { return {comp[0][flat], comp[1][flat]}; }
    void set(std::size_t flat, const C2& v) {
        comp[0][flat] = v.a;
        comp[1][flat] = v.b;
    }

    // integral of Psi^dagger Psi over the box (deterministic summation order)
    double norm_sq() const {
        double s = 0.0;
        for (std::size_t f = 0; f < comp[0].size(); ++f)
            s += std::norm(comp[0][f]) + std::norm(comp[1][f]);
        return s * grid.cell_volume();
    }
    void normalize() {
        const double n = std::sqrt(norm_sq());
        for (auto& c : comp)
            for (cplx& x : c) x /= n;
    }
};

// Prescribed external fields as closed-form descriptors.
struct ExternalFields {
    enum class Mode { independent, curl_checked };

    std::function<Vec3(const Vec3&, double)> A;
    std::function<Vec3(const Vec3&, double)> B;
    std::function<double(const Vec3&, double)> V;
    Mode mode = Mode::independent;
    double curl_tolerance = 1e-6;
    // true when A does not depend on x; the spectral propagator requires it
    bool a_uniform = true;

    static ExternalFields zero();
    static ExternalFields uniform_b(const Vec3& b0);
    // A = (-B0 y/2, B0 x/2, 0), B = (0,0,B0); curl-consistent pair
    static ExternalFields symmetric_gauge(double b0);
    static ExternalFields harmonic_v(double k_spring);
    static ExternalFields cosine_v(double v0, int axis, double wavelength);
};

struct FieldSample {
    Vec3 A, B;
    double V = 0.0;
};

// Evaluates the descriptors; in curl_checked mode validates B = curl A by
// central differences at the sample point.
FieldSample eval_external_fields(const ExternalFields& fields, const Vec3& x, double t);

// ---------------------------------------------------------------------------
// Field evaluation
// ---------------------------------------------------------------------------

enum class DerivKind { spectral, fd4, fd2 };

// Pointwise jet of the spinor: value, gradient, diagonal second derivatives.
struct SpinorJet {
    C2 psi;
    std::array<C2, 3> dpsi{};
    std::array<C2, 3> d2psi{};
};

// Read-only sampler bound to one immutable field snapshot. In spectral mode
// the jet is the exact derivative of the trigonometric interpolant at any x;
// in fd modes evaluation snaps to the nearest grid node and uses central
// stencils.
class FieldEvaluator {
  public:
    explicit FieldEvaluator(const SpinorField& field, DerivKind kind = DerivKind::spectral);

    SpinorJet jet(const Vec3& x, bool need_second = true) const;
    C2 value(const Vec3& x) const;

    const SpinorField& field() const { return *field_; }
    DerivKind kind() const { return kind_; }
    // upper bound for rho(x, alpha) over the chart, used by node thresholds
    // and rejection sampling
    double max_angular_density() const { return max_density_; }

  private:
    const SpinorField* field_;
    DerivKind kind_;
    std::array<std::vector<cplx>, 2> spec_;
    double max_density_ = 0.0;

    SpinorJet jet_spectral(const Vec3& x, bool need_second) const;
    SpinorJet jet_fd(const Vec3& x, int accuracy) const;
};

// Relative node threshold (fraction of the state's maximum density).
struct NodeThreshold {
    double rel = 1e-12;
    double absolute(const FieldEvaluator& ev) const { return rel * ev.max_angular_density(); }
};

// Jets at every grid node in one pass (whole-grid derivative arrays instead
// of per-point mode sums).
std::vector<SpinorJet> all_node_jets(const SpinorField& field, DerivKind kind);

// ---------------------------------------------------------------------------
// Local quantities
// ---------------------------------------------------------------------------

// Gauge-free kernels at (x, alpha). The phase S is never reconstructed;
// its derivatives enter through logarithmic-derivative kernels only.
struct LocalState {
    double rho = 0.0;                       // |psi(x, alpha)|^2
    std::array<double, 3> grad_log_rho_x{};     // spatial d_i log rho
    std::array<double, 3> grad_log_rho_ang{};   // angular d_r log rho
    std::array<double, 3> dS_x{};           // hbar Im(d_i psi / psi) = d_i S
    std::array<double, 3> MS{};             // Re(M_i psi / psi) = A_i^r d_r S
};

// rho(x, alpha) = |Psi^a(x) u_a(alpha)|^2
double rho_at(const FieldEvaluator& ev, const Vec3& x, const EulerTriple& angles);

// Kernel assembly from an already-evaluated jet; threshold_abs is an
// absolute density floor (pass 0 for threshold-free quadrature paths).
LocalState kernels_from_jet(const SpinorJet& jet, const EulerTriple& angles,
                            const RotatorParams& params, double threshold_abs);

LocalState velocity_kernels(const FieldEvaluator& ev, const Vec3& x, const EulerTriple& angles,
                            const RotatorParams& params,
                            const NodeThreshold& threshold = NodeThreshold{});

// Quantum potential on the 6-D manifold: spatial part on the grid, angular
// part closed form through the basis jets.
double quantum_potential(const FieldEvaluator& ev, const Vec3& x, const EulerTriple& angles,
                         const RotatorParams& params,
                         const NodeThreshold& threshold = NodeThreshold{});

// Spin vector s_i = hbar Psi^dag sigma_i Psi / (2 Psi^dag Psi).
Vec3 spin_vector(const FieldEvaluator& ev, const Vec3& x, const RotatorParams& params,
                 const NodeThreshold& threshold = NodeThreshold{});

// Equivalent angular form of the spin vector, by quadrature; cross-check.
Vec3 spin_vector_angular(const FieldEvaluator& ev, const Vec3& x, const RotatorParams& params,
                         const QuadratureOrder& order);

}  // namespace rotator
