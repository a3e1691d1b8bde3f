#include "rotator/field_state.hpp"

#include <cmath>
#include <sstream>

namespace rotator {

// ---------------------------------------------------------------------------
// External fields
// ---------------------------------------------------------------------------

ExternalFields ExternalFields::zero() {
    ExternalFields f;
    f.A = [](const Vec3&, double) { return Vec3{}; };
    f.B = [](const Vec3&, double) { return Vec3{}; };
    f.V = [](const Vec3&, double) { return 0.0; };
    return f;
}

ExternalFields ExternalFields::uniform_b(const Vec3& b0) {
    ExternalFields f = zero();
    f.B = [b0](const Vec3&, double) { return b0; };
    return f;
}

ExternalFields ExternalFields::symmetric_gauge(double b0) {
    ExternalFields f = zero();
    f.A = [b0](const Vec3& x, double) { return Vec3{{-0.5 * b0 * x[1], 0.5 * b0 * x[0], 0.0}}; };
    f.B = [b0](const Vec3&, double) { return Vec3{{0.0, 0.0, b0}}; };
    f.mode = Mode::curl_checked;
    f.a_uniform = false;
    return f;
}

ExternalFields ExternalFields::harmonic_v(double k_spring) {
    ExternalFields f = zero();
    f.V = [k_spring](const Vec3& x, double) { return 0.5 * k_spring * x.dot(x); };
    return f;
}

ExternalFields ExternalFields::cosine_v(double v0, int axis, double wavelength) {
    ExternalFields f = zero();
    f.V = [v0, axis, wavelength](const Vec3& x, double) {
        return v0 * std::cos(2.0 * kPi * x[axis] / wavelength);
    };
    return f;
}

FieldSample eval_external_fields(const ExternalFields& fields, const Vec3& x, double t) {
    FieldSample s;
    s.A = fields.A(x, t);
    s.B = fields.B(x, t);
    s.V = fields.V(x, t);
    if (fields.mode == ExternalFields::Mode::curl_checked) {
        const double h = 1e-5;
        Vec3 curl;
        for (int i = 0; i < 3; ++i) {
            const int j = (i + 1) % 3, k = (i + 2) % 3;
            Vec3 xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            const double dAk_dj = (fields.A(xp, t)[k] - fields.A(xm, t)[k]) / (2.0 * h);
            xp = x; xm = x;
            xp[k] += h;
            xm[k] -= h;
            const double dAj_dk = (fields.A(xp, t)[j] - fields.A(xm, t)[j]) / (2.0 * h);
            curl[i] = dAk_dj - dAj_dk;
        }
        const double err = (curl - s.B).norm();
        if (err > fields.curl_tolerance) {
            std::ostringstream msg;
            msg << "curl A differs from B by " << err << " at sample point";
            throw CurlMismatch(msg.str());
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// FieldEvaluator
// ---------------------------------------------------------------------------

FieldEvaluator::FieldEvaluator(const SpinorField& field, DerivKind kind)
    : field_(&field), kind_(kind) {
    if (kind_ == DerivKind::spectral) {
        spec_[0] = fft_forward(field.grid, field.comp[0]);
        spec_[1] = fft_forward(field.grid, field.comp[1]);
    }
    // max over nodes of ((|Psi1|+|Psi2|)/(2 sqrt(2) pi))^2 bounds rho(x,alpha)
    double mx = 0.0;
    for (std::size_t f = 0; f < field.comp[0].size(); ++f) {
        const double a = std::abs(field.comp[0][f]) + std::abs(field.comp[1][f]);
        mx = std::max(mx, a * a);
    }
    max_density_ = mx / (8.0 * kPi * kPi);
}

SpinorJet FieldEvaluator::jet_spectral(const Vec3& x, bool need_second) const {
    const GridSpec& g = field_->grid;
    // per-axis phase tables e^{i k_n x}, built by recurrence
    std::array<std::vector<cplx>, 3> phase;
    for (int d = 0; d < 3; ++d) {
        const int N = g.points[d];
        phase[d].assign(N, cplx(1.0, 0.0));
        if (d >= g.dims || N == 1) continue;
        const cplx base = std::polar(1.0, 2.0 * kPi * x[d] / g.extent[d]);
        const cplx cbase = std::conj(base);
        const int half = (N + 1) / 2;
        cplx p(1.0, 0.0);
        for (int n = 1; n < half; ++n) {
            p *= base;
            phase[d][n] = p;
        }
        p = cplx(1.0, 0.0);
        for (int n = N - 1; n >= half; --n) {
            p *= cbase;
            phase[d][n] = p;
        }
    }

    SpinorJet out;
    for (int c = 0; c < 2; ++c) {
        cplx val{}, d1[3] = {}, d2[3] = {};
        const std::vector<cplx>& coeff = spec_[c];
        std::size_t f = 0;
        for (int i = 0; i < g.points[0]; ++i) {
            const double k0 = g.kvalue(i, 0), k0d = g.kderiv(i, 0);
            for (int j = 0; j < g.points[1]; ++j) {
                const double k1 = g.kvalue(j, 1), k1d = g.kderiv(j, 1);
                const cplx pij = phase[0][i] * phase[1][j];
                for (int k = 0; k < g.points[2]; ++k, ++f) {
                    const double k2 = g.kvalue(k, 2);
                    const cplx term = coeff[f] * pij * phase[2][k];
                    val += term;
                    d1[0] += k0d * term;
                    d1[1] += k1d * term;
                    d1[2] += g.kderiv(k, 2) * term;
                    if (need_second) {
                        d2[0] += k0 * k0 * term;
                        d2[1] += k1 * k1 * term;
                        d2[2] += k2 * k2 * term;
                    }
                }
            }
        }
        if (c == 0) {
            out.psi.a = val;
            for (int d = 0; d < 3; ++d) {
                out.dpsi[d].a = kI * d1[d];
                out.d2psi[d].a = -d2[d];
            }
        } else {
            out.psi.b = val;
            for (int d = 0; d < 3; ++d) {
                out.dpsi[d].b = kI * d1[d];
                out.d2psi[d].b = -d2[d];
            }
        }
    }
    return out;
}

SpinorJet FieldEvaluator::jet_fd(const Vec3& x, int accuracy) const {
    const GridSpec& g = field_->grid;
    // snap to nearest node
    std::array<int, 3> idx{0, 0, 0};
    for (int d = 0; d < g.dims; ++d)
        idx[d] = g.wrap(static_cast<int>(std::lround(x[d] / g.spacing(d))), d);

    auto sample = [&](int c, int axis, int offset) {
        auto ijk = idx;
        ijk[axis] = g.wrap(ijk[axis] + offset, axis);
        return field_->comp[c][g.index(ijk[0], ijk[1], ijk[2])];
    };

    SpinorJet out;
    const std::size_t f0 = g.index(idx[0], idx[1], idx[2]);
    out.psi = field_->at(f0);
    for (int c = 0; c < 2; ++c) {
        for (int d = 0; d < g.dims; ++d) {
            const double h = g.spacing(d);
            const cplx fm2 = sample(c, d, -2), fm1 = sample(c, d, -1),
                       fc = field_->comp[c][f0], fp1 = sample(c, d, 1), fp2 = sample(c, d, 2);
            cplx d1, d2;
            if (accuracy == 4) {
                d1 = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h);
                d2 = (-fm2 + 16.0 * fm1 - 30.0 * fc + 16.0 * fp1 - fp2) / (12.0 * h * h);
            } else {
                d1 = (fp1 - fm1) / (2.0 * h);
                d2 = (fp1 - 2.0 * fc + fm1) / (h * h);
            }
            if (c == 0) {
                out.dpsi[d].a = d1;
                out.d2psi[d].a = d2;
            } else {
                out.dpsi[d].b = d1;
                out.d2psi[d].b = d2;
            }
        }
    }
    return out;
}

SpinorJet FieldEvaluator::jet(const Vec3& x, bool need_second) const {
    switch (kind_) {
        case DerivKind::spectral: return jet_spectral(x, need_second);
        case DerivKind::fd4: return jet_fd(x, 4);
        case DerivKind::fd2: return jet_fd(x, 2);
    }
    return {};
}

C2 FieldEvaluator::value(const Vec3& x) const {
    if (kind_ != DerivKind::spectral) {
        const GridSpec& g = field_->grid;
        std::array<int, 3> idx{0, 0, 0};
        for (int d = 0; d < g.dims; ++d)
            idx[d] = g.wrap(static_cast<int>(std::lround(x[d] / g.spacing(d))), d);
        return field_->at(g.index(idx[0], idx[1], idx[2]));
    }
    return jet_spectral(x, false).psi;
}

std::vector<SpinorJet> all_node_jets(const SpinorField& field, DerivKind kind) {
    const GridSpec& g = field.grid;
    std::vector<SpinorJet> jets(g.total());
    for (std::size_t n = 0; n < g.total(); ++n) jets[n].psi = field.at(n);
    for (int c = 0; c < 2; ++c) {
        for (int d = 0; d < g.dims; ++d) {
            std::vector<cplx> d1, d2;
            if (kind == DerivKind::spectral) {
                d1 = spectral_derivative(g, field.comp[c], d, 1);
                d2 = spectral_derivative(g, field.comp[c], d, 2);
            } else {
                const int acc = (kind == DerivKind::fd4) ? 4 : 2;
                d1 = fd_derivative(g, field.comp[c], d, 1, acc);
                d2 = fd_derivative(g, field.comp[c], d, 2, acc);
            }
            for (std::size_t n = 0; n < g.total(); ++n) {
                if (c == 0) {
                    jets[n].dpsi[d].a = d1[n];
                    jets[n].d2psi[d].a = d2[n];
                } else {
                    jets[n].dpsi[d].b = d1[n];
                    jets[n].d2psi[d].b = d2[n];
                }
            }
        }
    }
    return jets;
}

// ---------------------------------------------------------------------------
// Local quantities
// ---------------------------------------------------------------------------

double rho_at(const FieldEvaluator& ev, const Vec3& x, const EulerTriple& angles) {
    const C2 psi = ev.value(x);
    const BasisPair u = basis_u(angles);
    return std::norm(psi.a * u.u1 + psi.b * u.u2);
}

LocalState kernels_from_jet(const SpinorJet& j, const EulerTriple& angles,
                            const RotatorParams& params, double threshold_abs) {
    const BasisPair u = basis_u(angles);
    const cplx psi = j.psi.a * u.u1 + j.psi.b * u.u2;
    const double rho = std::norm(psi);

    LocalState ls;
    ls.rho = rho;
    if (rho < threshold_abs) {
        std::ostringstream msg;
        msg << "kernels: rho=" << rho << " below node threshold " << threshold_abs;
        throw NodeSingularity(msg.str());
    }

    for (int d = 0; d < 3; ++d) {
        const cplx dpsi = j.dpsi[d].a * u.u1 + j.dpsi[d].b * u.u2;
        const cplx ratio = dpsi / psi;
        ls.dS_x[d] = params.hbar * ratio.imag();
        ls.grad_log_rho_x[d] = 2.0 * ratio.real();
    }
    for (int i = 0; i < 3; ++i) {
        const C2 mpsi_coeff = apply_angular_momentum(i, j.psi, params.hbar);
        const cplx mpsi = mpsi_coeff.a * u.u1 + mpsi_coeff.b * u.u2;
        ls.MS[i] = (mpsi / psi).real();
    }
    // angular log-density gradient from basis jets
    const AngJet2 ju1 = basis_jet(1, angles), ju2 = basis_jet(2, angles);
    const AngJet2 psi_jet = ju1 * j.psi.a + ju2 * j.psi.b;
    const AngJet2 rho_jet = psi_jet * psi_jet.conj();
    for (int r = 0; r < 3; ++r) ls.grad_log_rho_ang[r] = (rho_jet.d[r] / rho_jet.v).real();
    return ls;
}

LocalState velocity_kernels(const FieldEvaluator& ev, const Vec3& x, const EulerTriple& angles,
                            const RotatorParams& params, const NodeThreshold& threshold) {
    return kernels_from_jet(ev.jet(x, false), angles, params, threshold.absolute(ev));
}

double quantum_potential(const FieldEvaluator& ev, const Vec3& x, const EulerTriple& angles,
                         const RotatorParams& params, const NodeThreshold& threshold) {
    const SpinorJet j = ev.jet(x, true);
    const AngJet2 ju1 = basis_jet(1, angles), ju2 = basis_jet(2, angles);
    const AngJet2 psi_jet = ju1 * j.psi.a + ju2 * j.psi.b;
    const AngJet2 rho_jet = psi_jet * psi_jet.conj();
    const double rho = rho_jet.v.real();
    if (rho < threshold.absolute(ev))
        throw NodeSingularity("quantum_potential: rho below node threshold");

    // spatial part: sum_i d_ii sqrt(rho) evaluated from scalar derivatives
    const BasisPair u = basis_u(angles);
    const cplx psi = psi_jet.v;
    double lap_sqrt = 0.0;
    for (int d = 0; d < ev.field().grid.dims; ++d) {
        const cplx dpsi = j.dpsi[d].a * u.u1 + j.dpsi[d].b * u.u2;
        const cplx d2psi = j.d2psi[d].a * u.u1 + j.d2psi[d].b * u.u2;
        const double drho = 2.0 * (std::conj(psi) * dpsi).real();
        const double d2rho = 2.0 * ((std::conj(psi) * d2psi).real() + std::norm(dpsi));
        lap_sqrt += d2rho / (2.0 * std::sqrt(rho)) - drho * drho / (4.0 * std::pow(rho, 1.5));
    }
    const double q_spatial =
        -(params.hbar * params.hbar) / (2.0 * params.m) * lap_sqrt / std::sqrt(rho);

    // angular part: closed form through the jets; l^-2 folds into 1/I
    const AngJet2 sqrt_rho = rho_jet.sqrt_real();
    const cplx lap_ang = angular_laplacian_unit(sqrt_rho, angles);
    const double q_angular = -(params.hbar * params.hbar) / (2.0 * params.I) *
                             (lap_ang / sqrt_rho.v).real();
    return q_spatial + q_angular;
}

Vec3 spin_vector(const FieldEvaluator& ev, const Vec3& x, const RotatorParams& params,
                 const NodeThreshold& threshold) {
    const C2 psi = ev.value(x);
    const double den = psi.norm_sq();
    if (den < threshold.rel * ev.max_angular_density() * 8.0 * kPi * kPi)
        throw NodeSingularity("spin_vector: Psi^dag Psi below threshold");
    Vec3 s;
    for (int i = 0; i < 3; ++i)
        s[i] = params.hbar * psi.dot(pauli(i) * psi).real() / (2.0 * den);
    return s;
}

Vec3 spin_vector_angular(const FieldEvaluator& ev, const Vec3& x, const RotatorParams& params,
                         const QuadratureOrder& order) {
    const C2 psi = ev.value(x);
    const QuadratureRule rule(order);
    Vec3 s;
    const cplx den = rule.integrate([&](const EulerTriple& an) {
        const BasisPair u = basis_u(an);
        return cplx(std::norm(psi.a * u.u1 + psi.b * u.u2), 0.0);
    });
    for (int i = 0; i < 3; ++i) {
        const cplx num = rule.integrate([&](const EulerTriple& an) {
            const AngJet2 pj = basis_jet(1, an) * psi.a + basis_jet(2, an) * psi.b;
            const AngJet1 mp = apply_angular_momentum_jet(i, pj, params.hbar, an);
            return std::conj(pj.v) * mp.v;
        });
        s[i] = (num / den).real();
    }
    return s;
}

}  // namespace rotator
