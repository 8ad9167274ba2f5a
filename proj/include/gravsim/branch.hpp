#pragma once

// Exact evolution of the conditional-displacement probe.
//
// The scaled Hamiltonian H = a^dag a - Z (a + a^dag) is diagonal in the
// spin z basis, so every spin basis state |s> carries its own coherent field
// |phi_s> and an accumulated phase. The state is kept as a list of such
// branches; nothing is truncated until `to_dense` is called.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <variant>
#include <vector>

#include "gravsim/hilbert.hpp"

namespace gravsim {

struct Ghz {};
struct Css {};
/// Amplitudes c_m over Dicke states, ascending m (size N+1).
struct DickeAmplitudes {
    std::vector<cplx> c;
};
/// Amplitudes over product basis states indexed by bit pattern (size 2^N).
/// Bit i describes spin i+1; a 0 bit is sigma_z = +1.
struct ProductAmplitudes {
    std::vector<cplx> c;
};
using SpinPreparation = std::variant<Ghz, Css, DickeAmplitudes, ProductAmplitudes>;

inline constexpr int kMaxProductSpins = 20;

struct ProbeConfig {
    int n_spins = 1;
    /// One entry means isotropic coupling k; otherwise one k_i per spin.
    std::vector<double> couplings{1.0};
    double g = 0.0;
    double xi = 0.0;
    cplx alpha = 0.0;
    SpinPreparation spins = Ghz{};

    bool isotropic() const noexcept { return couplings.size() == 1; }
    double coupling(int spin) const { return isotropic() ? couplings.front() : couplings.at(static_cast<std::size_t>(spin)); }
    double coupling_sum() const {
        if (isotropic()) return couplings.front() * n_spins;
        double s = 0.0;
        for (double k : couplings) s += k;
        return s;
    }
    /// Effective gravity term g cos(xi).
    double g_eff() const noexcept { return g * std::cos(xi); }

    void validate() const {
        if (n_spins < 1) throw InvalidInput("need at least one spin");
        if (couplings.empty()) throw InvalidInput("coupling list is empty");
        if (!isotropic() && static_cast<int>(couplings.size()) != n_spins)
            throw InvalidInput("anisotropic couplings must list one value per spin");
    }
};

struct SpinLabel {
    enum class Kind { Dicke, Bits };
    Kind kind = Kind::Dicke;
    int twice_m = 0;        // Dicke labels
    std::uint64_t bits = 0;  // product labels

    static SpinLabel dicke(int twice_m) { return {Kind::Dicke, twice_m, 0}; }
    static SpinLabel product(std::uint64_t b) { return {Kind::Bits, 0, b}; }

    bool operator==(const SpinLabel&) const = default;
};

struct CoherentBranch {
    SpinLabel label;
    cplx amplitude;
    cplx phi;
};

struct BranchedState {
    std::vector<CoherentBranch> branches;
    double tau = 0.0;
    ProbeConfig config;

    double norm_squared() const {
        double s = 0.0;
        for (const auto& b : branches) s += std::norm(b.amplitude);
        return s;
    }
    double max_phi() const {
        double m = 0.0;
        for (const auto& b : branches) m = std::max(m, std::abs(b.phi));
        return m;
    }
    bool product_labels() const {
        return !branches.empty() && branches.front().label.kind == SpinLabel::Kind::Bits;
    }
    /// Dimension of the spin space the labels live in.
    int spin_dim() const {
        return product_labels() ? (1 << config.n_spins) : config.n_spins + 1;
    }
    int spin_index(const SpinLabel& l) const {
        return l.kind == SpinLabel::Kind::Bits ? static_cast<int>(l.bits) : (l.twice_m + config.n_spins) / 2;
    }
};

/// Per-branch g-derivatives of amplitude and field amplitude.
struct BranchDerivative {
    cplx d_amplitude;
    cplx d_phi;
};

struct Tangent {
    std::vector<BranchDerivative> branches;
};

/// Eigenvalue of Z(k, g) = sum_i k_i sigma_i^z / 2 - g cos(xi) on a basis label.
inline double z_eigenvalue(const SpinLabel& label, const ProbeConfig& config) {
    if (label.kind == SpinLabel::Kind::Dicke) {
        if (!config.isotropic())
            throw InvalidInput("Dicke labels are not Z eigenstates for anisotropic couplings");
        if (std::abs(label.twice_m) > config.n_spins || (label.twice_m + config.n_spins) % 2 != 0)
            throw InvalidInput("Dicke label outside the symmetric multiplet");
        return 0.5 * config.couplings.front() * label.twice_m - config.g_eff();
    }
    if (config.n_spins > 63 || label.bits >> config.n_spins)
        throw InvalidInput("bit label has more spins than the configuration");
    double z = -config.g_eff();
    for (int i = 0; i < config.n_spins; ++i) {
        const double sigma = ((label.bits >> i) & 1U) ? -1.0 : 1.0;
        z += 0.5 * config.coupling(i) * sigma;
    }
    return z;
}

namespace detail {

inline void require_normalized(double norm2, const char* what) {
    if (std::abs(norm2 - 1.0) > 1e-10) throw InvalidInput(std::string(what) + " amplitudes are not normalized");
}

inline double log_binomial(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace detail

/// Initial spin branches (amplitude, label) for a configuration, before evolution.
inline std::vector<CoherentBranch> initial_branches(const ProbeConfig& config) {
    config.validate();
    const int n = config.n_spins;
    std::vector<CoherentBranch> out;
    const cplx alpha = config.alpha;

    auto need_product_size = [&] {
        if (n > kMaxProductSpins) throw InvalidInput("too many spins for product-basis branches");
    };

    std::visit(
        [&](const auto& prep) {
            using T = std::decay_t<decltype(prep)>;
            if constexpr (std::is_same_v<T, Ghz>) {
                const double a = std::sqrt(0.5);
                if (config.isotropic()) {
                    out.push_back({SpinLabel::dicke(-n), a, alpha});
                    out.push_back({SpinLabel::dicke(n), a, alpha});
                } else {
                    const std::uint64_t all = (n >= 64) ? ~0ULL : ((1ULL << n) - 1ULL);
                    out.push_back({SpinLabel::product(all), a, alpha});
                    out.push_back({SpinLabel::product(0), a, alpha});
                }
            } else if constexpr (std::is_same_v<T, Css>) {
                if (config.isotropic()) {
                    for (int j = 0; j <= n; ++j) {
                        const double c = std::exp(0.5 * detail::log_binomial(n, j) - 0.5 * n * std::log(2.0));
                        out.push_back({SpinLabel::dicke(2 * j - n), c, alpha});
                    }
                } else {
                    need_product_size();
                    const double c = std::pow(2.0, -0.5 * n);
                    for (std::uint64_t b = 0; b < (1ULL << n); ++b) out.push_back({SpinLabel::product(b), c, alpha});
                }
            } else if constexpr (std::is_same_v<T, DickeAmplitudes>) {
                if (!config.isotropic()) throw InvalidInput("Dicke amplitudes require isotropic couplings");
                if (static_cast<int>(prep.c.size()) != n + 1) throw InvalidInput("need N+1 Dicke amplitudes");
                double norm2 = 0.0;
                for (int j = 0; j <= n; ++j) {
                    norm2 += std::norm(prep.c[static_cast<std::size_t>(j)]);
                    out.push_back({SpinLabel::dicke(2 * j - n), prep.c[static_cast<std::size_t>(j)], alpha});
                }
                detail::require_normalized(norm2, "Dicke");
            } else {
                need_product_size();
                if (prep.c.size() != (1ULL << n)) throw InvalidInput("need 2^N product amplitudes");
                double norm2 = 0.0;
                for (std::uint64_t b = 0; b < prep.c.size(); ++b) {
                    norm2 += std::norm(prep.c[b]);
                    if (prep.c[b] != cplx(0.0)) out.push_back({SpinLabel::product(b), prep.c[b], alpha});
                }
                detail::require_normalized(norm2, "product");
            }
        },
        config.spins);
    return out;
}

/// eta(tau) = 1 - exp(-i tau).
inline cplx eta(double tau) { return 1.0 - std::exp(-I * tau); }

/// Closed-form evolution: phi = alpha e^{-i tau} + z eta, amplitude picks up
/// exp(i z^2 (tau - sin tau)) and the displacement phase
/// exp(i Im(z eta conj(alpha e^{-i tau}))).
inline BranchedState evolve(const ProbeConfig& config, double tau) {
    if (!(tau >= 0.0)) throw InvalidInput("evolution time must be non-negative");
    BranchedState state{initial_branches(config), tau, config};
    const cplx e = eta(tau);
    const cplx rotated = config.alpha * std::exp(-I * tau);
    const double chirp = tau - std::sin(tau);
    for (auto& b : state.branches) {
        const double z = z_eigenvalue(b.label, config);
        const double phase = z * z * chirp + std::imag(z * e * std::conj(rotated));
        b.amplitude *= std::exp(I * phase);
        b.phi = rotated + z * e;
    }
    return state;
}

/// Analytic g-derivatives of every branch.
inline Tangent d_dg(const BranchedState& state) {
    const auto& cfg = state.config;
    const double dz = -std::cos(cfg.xi);
    const cplx e = eta(state.tau);
    const cplx rotated = cfg.alpha * std::exp(-I * state.tau);
    const double chirp = state.tau - std::sin(state.tau);
    Tangent t;
    t.branches.reserve(state.branches.size());
    for (const auto& b : state.branches) {
        const double z = z_eigenvalue(b.label, cfg);
        const double dphase = 2.0 * z * dz * chirp + std::imag(dz * e * std::conj(rotated));
        t.branches.push_back({I * dphase * b.amplitude, dz * e});
    }
    return t;
}

struct DenseState {
    CVector amplitudes;
    int spin_dim = 0;
    int fock_dim = 0;
    double norm_deficit = 0.0;

    std::vector<int> dims() const { return {spin_dim, fock_dim}; }
};

/// Cutoff from the heuristic for the largest field amplitude of the state.
inline FockSpace default_fock_space(const BranchedState& state) {
    return FockSpace(fock_cutoff_for(state.max_phi()));
}

/// sum_b amplitude_b |label_b> (x) |phi_b> in the truncated space.
inline DenseState to_dense(const BranchedState& state, const FockSpace& space, double max_deficit = 1e-12) {
    DenseState out;
    out.spin_dim = state.spin_dim();
    out.fock_dim = space.dim();
    out.amplitudes = CVector::Zero(static_cast<long>(out.spin_dim) * out.fock_dim);
    for (const auto& b : state.branches) {
        const auto coh = coherent_state(b.phi, space, std::numeric_limits<double>::infinity());
        out.norm_deficit += std::norm(b.amplitude) * coh.norm_deficit;
        out.amplitudes.segment(static_cast<long>(state.spin_index(b.label)) * out.fock_dim, out.fock_dim) +=
            b.amplitude * coh.amplitudes;
    }
    if (out.norm_deficit > max_deficit)
        throw TruncationError("branched state does not fit the Fock cutoff", out.norm_deficit);
    return out;
}

/// Dense representation of the tangent d|psi>/dg.
inline CVector to_dense_tangent(const BranchedState& state, const Tangent& tangent, const FockSpace& space) {
    const int fd = space.dim();
    CVector out = CVector::Zero(static_cast<long>(state.spin_dim()) * fd);
    for (std::size_t i = 0; i < state.branches.size(); ++i) {
        const auto& b = state.branches[i];
        const auto& d = tangent.branches[i];
        const CVector coh = coherent_state(b.phi, space, std::numeric_limits<double>::infinity()).amplitudes;
        // d|phi> = (-Re(conj(phi) dphi) + dphi a^dag) |phi>
        CVector dcoh = -std::real(std::conj(b.phi) * d.d_phi) * coh;
        for (int n = 1; n < fd; ++n) dcoh(n) += d.d_phi * std::sqrt(static_cast<double>(n)) * coh(n - 1);
        out.segment(static_cast<long>(state.spin_index(b.label)) * fd, fd) +=
            d.d_amplitude * coh + b.amplitude * dcoh;
    }
    return out;
}

/// Spin reduced state in branch order: rho_ab = A_a conj(A_b) <phi_b|phi_a>.
inline DensityMatrix spin_reduced_dm(const BranchedState& state) {
    const auto n = static_cast<long>(state.branches.size());
    CMatrix rho(n, n);
    for (long a = 0; a < n; ++a)
        for (long b = 0; b < n; ++b) {
            const auto& A = state.branches[static_cast<std::size_t>(a)];
            const auto& B = state.branches[static_cast<std::size_t>(b)];
            rho(a, b) = A.amplitude * std::conj(B.amplitude) * coherent_overlap(B.phi, A.phi);
        }
    return DensityMatrix(std::move(rho), {static_cast<int>(n)});
}

/// Analytic d rho_spin / dg, same ordering as spin_reduced_dm.
inline CMatrix spin_reduced_dm_derivative(const BranchedState& state, const Tangent& tangent) {
    const auto n = static_cast<long>(state.branches.size());
    CMatrix d(n, n);
    for (long a = 0; a < n; ++a)
        for (long b = 0; b < n; ++b) {
            const auto& A = state.branches[static_cast<std::size_t>(a)];
            const auto& B = state.branches[static_cast<std::size_t>(b)];
            const auto& dA = tangent.branches[static_cast<std::size_t>(a)];
            const auto& dB = tangent.branches[static_cast<std::size_t>(b)];
            const cplx overlap = coherent_overlap(B.phi, A.phi);
            const cplx dlog = -std::real(std::conj(B.phi) * dB.d_phi) - std::real(std::conj(A.phi) * dA.d_phi) +
                              std::conj(dB.d_phi) * A.phi + std::conj(B.phi) * dA.d_phi;
            d(a, b) = (dA.d_amplitude * std::conj(B.amplitude) + A.amplitude * std::conj(dB.d_amplitude) +
                       A.amplitude * std::conj(B.amplitude) * dlog) *
                      overlap;
        }
    return d;
}

/// Field purity Tr(rho_field^2) from branch overlaps.
inline double field_purity(const BranchedState& state) {
    double p = 0.0;
    for (const auto& a : state.branches)
        for (const auto& b : state.branches)
            p += std::norm(a.amplitude) * std::norm(b.amplitude) * std::norm(coherent_overlap(a.phi, b.phi));
    return p;
}

struct ThermalEvolution {
    DensityMatrix spin;           // branch order, as spin_reduced_dm
    DensityMatrix field;          // reduced field state at tau
    DensityMatrix field_initial;  // truncated thermal state
    double norm_deficit = 0.0;    // thermal mass beyond the cutoff
    int cutoff = 0;
};

/// Thermal field occupation n_bar: mixture evolved block by block, using the
/// exact spectral decomposition of each spin block's truncated Hamiltonian.
/// The coherent amplitude alpha of the configuration is ignored.
inline ThermalEvolution thermal_evolution_check(const ProbeConfig& config, double n_bar, double tau = 2.0 * pi,
                                                int cutoff = -1) {
    if (n_bar < 0.0) throw InvalidInput("thermal occupation must be non-negative");
    auto branches = initial_branches(config);
    std::vector<double> zs;
    double zmax = 0.0;
    for (const auto& b : branches) {
        zs.push_back(z_eigenvalue(b.label, config));
        zmax = std::max(zmax, std::abs(zs.back()));
    }
    if (cutoff < 0) {
        int thermal = 0;
        if (n_bar > 0.0) thermal = static_cast<int>(std::ceil(std::log(1e-14) / std::log(n_bar / (n_bar + 1.0))));
        cutoff = thermal + fock_cutoff_for(2.0 * zmax);
    }
    const FockSpace space(cutoff);
    const int fd = space.dim();

    Eigen::VectorXd weights(fd);
    double ratio = n_bar / (n_bar + 1.0);
    double w = 1.0 / (n_bar + 1.0);
    for (int n = 0; n < fd; ++n) {
        weights(n) = w;
        w *= ratio;
    }
    const double deficit = std::max(0.0, 1.0 - weights.sum());
    if (deficit > 1e-10) throw TruncationError("thermal state does not fit the Fock cutoff", deficit);
    const CMatrix rho_th = weights.cast<cplx>().asDiagonal();

    const CMatrix quad = space.annihilation() + space.creation();
    std::vector<CMatrix> unitaries;
    for (double z : zs) {
        const Eigen::MatrixXd h = (space.number() - z * quad).real();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
        const CVector phases = (-I * tau * es.eigenvalues().cast<cplx>()).array().exp();
        const CMatrix v = es.eigenvectors().cast<cplx>();
        unitaries.push_back(v * phases.asDiagonal() * v.adjoint());
    }

    const auto nb = static_cast<long>(branches.size());
    CMatrix spin(nb, nb);
    CMatrix field = CMatrix::Zero(fd, fd);
    for (long a = 0; a < nb; ++a) {
        const CMatrix left = unitaries[static_cast<std::size_t>(a)] * rho_th;
        for (long b = 0; b < nb; ++b) {
            const cplx ca = branches[static_cast<std::size_t>(a)].amplitude;
            const cplx cb = branches[static_cast<std::size_t>(b)].amplitude;
            const CMatrix block = left * unitaries[static_cast<std::size_t>(b)].adjoint();
            spin(a, b) = ca * std::conj(cb) * block.trace();
            if (a == b) field += std::norm(ca) * block;
        }
    }
    return {DensityMatrix(spin, {static_cast<int>(nb)}), DensityMatrix(field, {fd}), DensityMatrix(rho_th, {fd}),
            deficit, cutoff};
}

}  // namespace gravsim
