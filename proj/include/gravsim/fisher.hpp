#pragma once

// Quantum and classical Fisher information for the probe.
//
// Joint spin (x) field channels report two numbers: the "literal" functional
// sum (dp)^2 / (p(1-p)) over the Upsilon outcome only, and the standard joint
// CFI sum over both spin outcomes of (dp)^2 / p. Only the latter is bounded
// by the QFI.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gravsim/branch.hpp"

namespace gravsim {

enum class Channel { QfiPure, QfiMixed, CfiSpin, CfiHomodyne, CfiHeterodyne, CfiPhotocount };

inline const char* channel_name(Channel c) {
    switch (c) {
        case Channel::QfiPure: return "qfi_pure";
        case Channel::QfiMixed: return "qfi_mixed";
        case Channel::CfiSpin: return "cfi_spin";
        case Channel::CfiHomodyne: return "cfi_homodyne";
        case Channel::CfiHeterodyne: return "cfi_heterodyne";
        case Channel::CfiPhotocount: return "cfi_photocount";
    }
    return "unknown";
}

/// Two-outcome projector onto cos(T/2)|N/2> + sin(T/2) e^{-iP} |-N/2> and its
/// complement inside the GHZ support.
struct SpinPovm {
    double theta = pi / 2;
    double phi = 0.0;

    /// Conjugated coefficients (on |N/2>, |-N/2>) of the Upsilon bra.
    std::array<cplx, 2> bra() const {
        return {cplx(std::cos(0.5 * theta)), std::sin(0.5 * theta) * std::exp(I * phi)};
    }
    /// Same for the orthogonal outcome sin(T/2)|N/2> - cos(T/2) e^{-iP}|-N/2>.
    std::array<cplx, 2> bra_complement() const {
        return {cplx(std::sin(0.5 * theta)), -std::cos(0.5 * theta) * std::exp(I * phi)};
    }
};

struct Numerics {
    double fd_step = 0.0;
    int grid_points = 0;   // homodyne x points or heterodyne points per axis
    double grid_half_width = 0.0;
    int n_max = 0;
    int cutoff = 0;
    double eigen_threshold = 0.0;
    double lambda = 0.0;
    double covered_mass = 1.0;
};

struct FisherResult {
    double value = 0.0;
    Channel channel = Channel::QfiPure;
    std::optional<SpinPovm> angles;
    Numerics numerics;
    /// Standard joint CFI for the field channels; equals `value` otherwise.
    double standard_value = 0.0;
    std::optional<SpinPovm> standard_angles;
    std::vector<std::string> diagnostics;
};

namespace detail {

inline double clamp_round_off(double q, std::vector<std::string>& diag) {
    if (q < 0.0) {
        diag.push_back("negative value " + std::to_string(q) + " clamped to 0");
        return 0.0;
    }
    return q;
}

}  // namespace detail

/// 4 Re[<dpsi|dpsi> - |<dpsi|psi>|^2] from the branch representation, exact
/// in the field (spin labels are orthogonal).
inline FisherResult qfi_pure(const BranchedState& state, const Tangent& tangent) {
    if (tangent.branches.size() != state.branches.size()) throw DimensionMismatch("tangent does not match state");
    const double deficit = std::abs(state.norm_squared() - 1.0);
    if (deficit > 1e-8) throw TruncationError("state is not normalized", deficit);
    double vv = 0.0;
    cplx pv = 0.0;
    for (std::size_t i = 0; i < state.branches.size(); ++i) {
        const cplx A = state.branches[i].amplitude;
        const cplx phi = state.branches[i].phi;
        const cplx dA = tangent.branches[i].d_amplitude;
        const cplx dphi = tangent.branches[i].d_phi;
        const cplx c = dA - A * std::real(std::conj(phi) * dphi);
        const cplx d = A * dphi;
        vv += std::norm(c) + 2.0 * std::real(std::conj(c) * d * std::conj(phi)) + std::norm(d) * (std::norm(phi) + 1.0);
        pv += std::conj(A) * dA + std::norm(A) * I * std::imag(std::conj(phi) * dphi);
    }
    FisherResult r;
    r.channel = Channel::QfiPure;
    r.value = detail::clamp_round_off(4.0 * (vv - std::norm(pv)), r.diagnostics);
    r.standard_value = r.value;
    return r;
}

/// Dense variant for a truncated vector and its g-derivative.
inline FisherResult qfi_pure(const CVector& psi, const CVector& dpsi, double norm_deficit = 0.0) {
    if (psi.size() != dpsi.size()) throw DimensionMismatch("tangent does not match state");
    if (norm_deficit > 1e-8) throw TruncationError("dense state lost too much norm", norm_deficit);
    FisherResult r;
    r.channel = Channel::QfiPure;
    r.value = detail::clamp_round_off(4.0 * (dpsi.squaredNorm() - std::norm(psi.dot(dpsi))), r.diagnostics);
    r.standard_value = r.value;
    return r;
}

/// 2 sum |<l_m|drho|l_n>|^2 / (l_n + l_m) over pairs with l_n + l_m > threshold.
inline FisherResult qfi_mixed(const CMatrix& rho, const CMatrix& drho, double threshold = 1e-12) {
    if (rho.rows() != rho.cols() || drho.rows() != rho.rows() || drho.cols() != rho.cols())
        throw DimensionMismatch("density matrix and derivative shapes differ");
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-8) throw InvalidInput("density matrix is not Hermitian");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (rho + rho.adjoint()));
    const CMatrix v = es.eigenvectors();
    const Eigen::VectorXd l = es.eigenvalues();
    const CMatrix m = v.adjoint() * (0.5 * (drho + drho.adjoint())) * v;
    double q = 0.0;
    for (long a = 0; a < l.size(); ++a)
        for (long b = 0; b < l.size(); ++b) {
            const double s = l(a) + l(b);
            if (s > threshold) q += 2.0 * std::norm(m(a, b)) / s;
        }
    FisherResult r;
    r.channel = Channel::QfiMixed;
    r.value = q;
    r.standard_value = q;
    r.numerics.eigen_threshold = threshold;
    return r;
}

inline FisherResult qfi_mixed(const DensityMatrix& rho, const CMatrix& drho, double threshold = 1e-12) {
    return qfi_mixed(rho.matrix, drho, threshold);
}

/// (dp)^2 / (p (1 - p)). Within 1e-9 of 0 or 1 the outcome is pinned and 0 is
/// returned with `pinned` set; closer to the edge round-off in p dominates.
inline double cfi_binary(double p, double dp, bool* pinned = nullptr) {
    const bool edge = p < 1e-9 || p > 1.0 - 1e-9;
    if (pinned) *pinned = edge;
    if (edge) return 0.0;
    return dp * dp / (p * (1.0 - p));
}

/// Branch indices of |N/2> and |-N/2>; throws unless the state lives there.
inline std::array<std::size_t, 2> ghz_support(const BranchedState& state) {
    const int n = state.config.n_spins;
    std::optional<std::size_t> top, bottom;
    const std::uint64_t all = (n >= 64) ? ~0ULL : ((1ULL << n) - 1ULL);
    for (std::size_t i = 0; i < state.branches.size(); ++i) {
        const auto& l = state.branches[i].label;
        const bool is_top = l.kind == SpinLabel::Kind::Dicke ? l.twice_m == n : l.bits == 0;
        const bool is_bottom = l.kind == SpinLabel::Kind::Dicke ? l.twice_m == -n : l.bits == all;
        if (is_top) top = i;
        else if (is_bottom) bottom = i;
        else if (std::abs(state.branches[i].amplitude) > 0.0)
            throw InvalidInput("spin POVM needs a state supported on |N/2> and |-N/2>");
    }
    if (!top || !bottom) throw InvalidInput("spin POVM needs both extremal branches");
    return {*top, *bottom};
}

/// p(Upsilon) and its g-derivative from the reduced spin state.
inline std::pair<double, double> spin_probability(const BranchedState& state, const Tangent& tangent,
                                                  const SpinPovm& povm) {
    const auto idx = ghz_support(state);
    const CMatrix rho = spin_reduced_dm(state).matrix;
    const CMatrix drho = spin_reduced_dm_derivative(state, tangent);
    const auto u = povm.bra();
    cplx p = 0.0, dp = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const auto a = static_cast<long>(idx[static_cast<std::size_t>(i)]);
            const auto b = static_cast<long>(idx[static_cast<std::size_t>(j)]);
            // <Upsilon| rho |Upsilon> with bra coefficients u
            p += u[static_cast<std::size_t>(i)] * rho(a, b) * std::conj(u[static_cast<std::size_t>(j)]);
            dp += u[static_cast<std::size_t>(i)] * drho(a, b) * std::conj(u[static_cast<std::size_t>(j)]);
        }
    return {std::real(p), std::real(dp)};
}

struct AngleSearch {
    int theta_points = 61;        // verification grid over [0, pi]
    int verify_phi_points = 181;  // verification grid over [0, 2pi)
    int phi_points = 181;         // equatorial scan
    double tolerance = 1e-8;
};

/// Coarser verification grid for the joint channels, whose objective costs a
/// full quadrature per evaluation.
inline constexpr AngleSearch kJointAngleSearch{13, 37, 181, 1e-8};

namespace detail {

/// Golden-section maximization of f on [a, b].
template <class F>
double golden_max(F&& f, double a, double b, double tol) {
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - r * (b - a);
    double d = a + r * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

struct AngleOptimum {
    SpinPovm povm;
    double value = 0.0;
    bool theta_half_pi = true;
};

/// Maximize f(theta, phi): verify on a (theta, phi) grid that theta = pi/2
/// holds the maximum, scan phi, then golden-section refine. If the grid
/// finds a better theta the refinement alternates over both angles.
template <class F>
AngleOptimum maximize_angles(F&& f, const AngleSearch& search) {
    const int nt = search.theta_points;
    const int nv = search.verify_phi_points;
    const int np = search.phi_points;
    const double dphi = 2.0 * pi / np;
    double best = -1.0, row_best = -1.0;
    SpinPovm arg, row_arg;
    for (int i = 0; i < nt; ++i) {
        const double th = nt > 1 ? pi * i / (nt - 1) : pi / 2;
        for (int j = 0; j < nv; ++j) {
            const double v = f(th, 2.0 * pi * j / nv);
            if (v > best) {
                best = v;
                arg = {th, 2.0 * pi * j / nv};
            }
        }
    }
    for (int j = 0; j < np; ++j) {
        const double v = f(pi / 2, dphi * j);
        if (v > row_best) {
            row_best = v;
            row_arg = {pi / 2, dphi * j};
        }
    }
    AngleOptimum out;
    const double scale = std::max(std::abs(best), 1e-300);
    if (row_best >= best - 1e-12 * scale) {
        const double p = golden_max([&](double x) { return f(pi / 2, x); }, row_arg.phi - dphi, row_arg.phi + dphi,
                                    search.tolerance);
        out.povm = {pi / 2, p};
        out.value = f(pi / 2, p);
        if (out.value < row_best) out = {row_arg, row_best, true};
        return out;
    }
    // Off-equator maximum: coordinate-wise refinement.
    const double dth = nt > 1 ? pi / (nt - 1) : pi;
    const double dv = 2.0 * pi / nv;
    SpinPovm cur = arg;
    double val = best;
    for (int round = 0; round < 50; ++round) {
        const SpinPovm prev = cur;
        const double span = round == 0 ? dv : dphi;
        const double p = golden_max([&](double x) { return f(cur.theta, x); }, cur.phi - span, cur.phi + span,
                                    search.tolerance);
        if (f(cur.theta, p) >= val) {
            cur.phi = p;
            val = f(cur.theta, p);
        }
        const double t = golden_max([&](double x) { return f(x, cur.phi); }, std::max(0.0, cur.theta - dth),
                                    std::min(pi, cur.theta + dth), search.tolerance);
        if (f(t, cur.phi) >= val) {
            cur.theta = t;
            val = f(t, cur.phi);
        }
        if (std::abs(prev.theta - cur.theta) < search.tolerance && std::abs(prev.phi - cur.phi) < search.tolerance)
            break;
    }
    out.povm = cur;
    out.value = val;
    out.theta_half_pi = false;
    return out;
}

inline double wrap_phi(double p) {
    p = std::fmod(p, 2.0 * pi);
    return p < 0.0 ? p + 2.0 * pi : p;
}

}  // namespace detail

/// CFI of the two-outcome spin POVM at fixed angles.
inline FisherResult cfi_spin(const BranchedState& state, const SpinPovm& povm) {
    const auto [p, dp] = spin_probability(state, d_dg(state), povm);
    FisherResult r;
    r.channel = Channel::CfiSpin;
    bool pinned = false;
    r.value = cfi_binary(p, dp, &pinned);
    if (pinned) r.diagnostics.push_back("outcome probability pinned at the boundary");
    r.standard_value = r.value;
    r.angles = povm;
    return r;
}

/// Maximum of cfi_spin over (Theta, Phi).
inline FisherResult optimize_spin_angles(const BranchedState& state, const AngleSearch& search = {}) {
    const auto idx = ghz_support(state);
    const Tangent t = d_dg(state);
    const CMatrix rho = spin_reduced_dm(state).matrix;
    const CMatrix drho = spin_reduced_dm_derivative(state, t);
    const long a = static_cast<long>(idx[0]), b = static_cast<long>(idx[1]);
    const double r00 = std::real(rho(a, a)), r11 = std::real(rho(b, b));
    const double d00 = std::real(drho(a, a)), d11 = std::real(drho(b, b));
    const cplx r01 = rho(a, b), d01 = drho(a, b);
    auto f = [&](double th, double ph) {
        const double c = std::cos(0.5 * th), s = std::sin(0.5 * th);
        const cplx e = std::exp(I * ph);
        const double p = c * c * r00 + s * s * r11 + 2.0 * c * s * std::real(std::conj(e) * r01);
        const double dp = c * c * d00 + s * s * d11 + 2.0 * c * s * std::real(std::conj(e) * d01);
        return cfi_binary(p, dp);
    };
    const auto opt = detail::maximize_angles(f, search);
    FisherResult r;
    r.channel = Channel::CfiSpin;
    r.value = opt.value;
    r.standard_value = opt.value;
    r.angles = SpinPovm{opt.povm.theta, detail::wrap_phi(opt.povm.phi)};
    if (!opt.theta_half_pi) r.diagnostics.push_back("grid maximum found away from Theta = pi/2");
    return r;
}

struct QuadratureGrid {
    double lambda = 0.0;
    bool lambda_sweep = false;
    int x_points = 2001;
    double x_half_width = -1.0;  // negative: sqrt(2) max|phi| + 6
    int het_points = 201;
    double het_half_width = -1.0;  // negative: max|phi| + 5
    int n_max = -1;                // negative: Fock cutoff heuristic
    AngleSearch search = kJointAngleSearch;
};

/// Per-outcome branch amplitudes f_b(y) = A_b <y|phi_b>, their g-derivatives
/// and quadrature weights; the spin POVM only forms linear combinations.
struct JointTable {
    std::vector<cplx> f_top, f_bottom, d_top, d_bottom;
    std::vector<double> weights;
    double covered_mass = 0.0;

    void push(cplx ft, cplx fb, cplx dt, cplx db, double w) {
        f_top.push_back(ft);
        f_bottom.push_back(fb);
        d_top.push_back(dt);
        d_bottom.push_back(db);
        weights.push_back(w);
        covered_mass += w * (std::norm(ft) + std::norm(fb));
    }
};

struct JointValues {
    double literal = 0.0;
    double standard = 0.0;
};

inline JointValues evaluate_joint(const JointTable& t, const SpinPovm& povm) {
    const auto u = povm.bra();
    const auto v = povm.bra_complement();
    JointValues out;
    for (std::size_t i = 0; i < t.weights.size(); ++i) {
        const cplx a = u[0] * t.f_top[i] + u[1] * t.f_bottom[i];
        const cplx da = u[0] * t.d_top[i] + u[1] * t.d_bottom[i];
        const cplx b = v[0] * t.f_top[i] + v[1] * t.f_bottom[i];
        const cplx db = v[0] * t.d_top[i] + v[1] * t.d_bottom[i];
        const double p = std::norm(a), dp = 2.0 * std::real(std::conj(a) * da);
        const double q = std::norm(b), dq = 2.0 * std::real(std::conj(b) * db);
        const double w = t.weights[i];
        if (p > 1e-300) {
            out.standard += w * dp * dp / p;
            if (p < 1.0 - 1e-12) out.literal += w * dp * dp / (p * (1.0 - p));
        }
        if (q > 1e-300) out.standard += w * dq * dq / q;
    }
    return out;
}

namespace detail {

inline void check_coverage(const JointTable& t, double total, FisherResult& r) {
    r.numerics.covered_mass = t.covered_mass / total;
    if (r.numerics.covered_mass < 1.0 - 1e-6)
        throw GridCoverageError("measurement grid misses outcome probability", r.numerics.covered_mass);
    if (std::abs(r.numerics.covered_mass - 1.0) > 1e-8)
        r.diagnostics.push_back("grid mass differs from 1 by more than 1e-8");
}

inline void optimize_joint(const JointTable& t, const AngleSearch& search, FisherResult& r) {
    const auto lit = maximize_angles([&](double th, double ph) { return evaluate_joint(t, {th, ph}).literal; },
                                     search);
    const auto std_ = maximize_angles([&](double th, double ph) { return evaluate_joint(t, {th, ph}).standard; },
                                      search);
    r.value = lit.value;
    r.angles = SpinPovm{lit.povm.theta, wrap_phi(lit.povm.phi)};
    r.standard_value = std_.value;
    r.standard_angles = SpinPovm{std_.povm.theta, wrap_phi(std_.povm.phi)};
    if (!lit.theta_half_pi) r.diagnostics.push_back("literal maximum found away from Theta = pi/2");
    if (!std_.theta_half_pi) r.diagnostics.push_back("standard maximum found away from Theta = pi/2");
}

inline void fill_joint(const JointTable& t, const std::optional<SpinPovm>& angles, const AngleSearch& search,
                       FisherResult& r) {
    if (angles) {
        const auto v = evaluate_joint(t, *angles);
        r.value = v.literal;
        r.standard_value = v.standard;
        r.angles = r.standard_angles = *angles;
    } else {
        optimize_joint(t, search, r);
    }
}

struct BranchPair {
    cplx A[2], dA[2], phi[2], dphi[2];
    double total = 0.0;
};

inline BranchPair branch_pair(const BranchedState& state) {
    const auto idx = ghz_support(state);
    const Tangent t = d_dg(state);
    BranchPair bp;
    for (int i = 0; i < 2; ++i) {
        const auto& b = state.branches[idx[static_cast<std::size_t>(i)]];
        const auto& d = t.branches[idx[static_cast<std::size_t>(i)]];
        bp.A[i] = b.amplitude;
        bp.dA[i] = d.d_amplitude;
        bp.phi[i] = b.phi;
        bp.dphi[i] = d.d_phi;
        bp.total += std::norm(b.amplitude);
    }
    return bp;
}

}  // namespace detail

/// <x_lambda|phi> for a coherent state.
inline cplx homodyne_amplitude(cplx phi, double x, double lambda) {
    const cplx r = phi * std::exp(-I * lambda);
    return std::pow(pi, -0.25) *
           std::exp(-0.5 * x * x + std::sqrt(2.0) * x * r - 0.5 * r * r - 0.5 * std::norm(phi));
}

inline JointTable homodyne_table(const detail::BranchPair& bp, double lambda, int points, double half_width) {
    if (points < 3) throw InvalidInput("homodyne grid needs at least 3 points");
    JointTable t;
    const double h = 2.0 * half_width / (points - 1);
    const cplx rot = std::exp(-I * lambda);
    for (int i = 0; i < points; ++i) {
        const double x = -half_width + h * i;
        const double w = (i == 0 || i == points - 1) ? 0.5 * h : h;
        cplx f[2], d[2];
        for (int b = 0; b < 2; ++b) {
            const cplx psi = homodyne_amplitude(bp.phi[b], x, lambda);
            const cplx dlog = (std::sqrt(2.0) * x * rot - bp.phi[b] * rot * rot) * bp.dphi[b] -
                              std::real(std::conj(bp.phi[b]) * bp.dphi[b]);
            f[b] = bp.A[b] * psi;
            d[b] = bp.dA[b] * psi + bp.A[b] * dlog * psi;
        }
        t.push(f[0], f[1], d[0], d[1], w);
    }
    return t;
}

/// Spin POVM (x) rotated-quadrature measurement.
inline FisherResult cfi_homodyne(const BranchedState& state, const QuadratureGrid& grid = {},
                                 std::optional<SpinPovm> angles = std::nullopt) {
    const auto bp = detail::branch_pair(state);
    const double pmax = std::max(std::abs(bp.phi[0]), std::abs(bp.phi[1]));
    const double hw = grid.x_half_width > 0.0 ? grid.x_half_width : std::sqrt(2.0) * pmax + 6.0;
    std::vector<double> lambdas{grid.lambda};
    if (grid.lambda_sweep) lambdas = {0.0, pi / 4, pi / 2, 3 * pi / 4};

    FisherResult best;
    bool first = true;
    for (double lam : lambdas) {
        FisherResult r;
        r.channel = Channel::CfiHomodyne;
        const auto t = homodyne_table(bp, lam, grid.x_points, hw);
        detail::check_coverage(t, bp.total, r);
        detail::fill_joint(t, angles, grid.search, r);
        r.numerics.grid_points = grid.x_points;
        r.numerics.grid_half_width = hw;
        r.numerics.lambda = lam;
        if (first || r.value > best.value) {
            if (!first) r.standard_value = std::max(r.standard_value, best.standard_value);
            best = r;
        } else {
            best.standard_value = std::max(best.standard_value, r.standard_value);
        }
        first = false;
    }
    return best;
}

inline JointTable heterodyne_table(const detail::BranchPair& bp, int points, double half_width) {
    if (points < 1) throw InvalidInput("heterodyne grid needs points");
    JointTable t;
    const double h = 2.0 * half_width / points;
    const double w = h * h;
    const double norm = 1.0 / std::sqrt(pi);
    for (int i = 0; i < points; ++i)
        for (int j = 0; j < points; ++j) {
            const cplx zeta(-half_width + h * (i + 0.5), -half_width + h * (j + 0.5));
            cplx f[2], d[2];
            for (int b = 0; b < 2; ++b) {
                const cplx psi = norm * coherent_overlap(zeta, bp.phi[b]);
                const cplx dlog = std::conj(zeta) * bp.dphi[b] - std::real(std::conj(bp.phi[b]) * bp.dphi[b]);
                f[b] = bp.A[b] * psi;
                d[b] = bp.dA[b] * psi + bp.A[b] * dlog * psi;
            }
            t.push(f[0], f[1], d[0], d[1], w);
        }
    return t;
}

/// Spin POVM (x) coherent-state (Husimi) measurement.
inline FisherResult cfi_heterodyne(const BranchedState& state, const QuadratureGrid& grid = {},
                                   std::optional<SpinPovm> angles = std::nullopt) {
    const auto bp = detail::branch_pair(state);
    const double pmax = std::max(std::abs(bp.phi[0]), std::abs(bp.phi[1]));
    const double hw = grid.het_half_width > 0.0 ? grid.het_half_width : pmax + 5.0;
    FisherResult r;
    r.channel = Channel::CfiHeterodyne;
    const auto t = heterodyne_table(bp, grid.het_points, hw);
    detail::check_coverage(t, bp.total, r);
    detail::fill_joint(t, angles, grid.search, r);
    r.numerics.grid_points = grid.het_points;
    r.numerics.grid_half_width = hw;
    return r;
}

inline JointTable photocount_table(const detail::BranchPair& bp, int n_max) {
    JointTable t;
    cplx c[2], dc[2];
    for (int b = 0; b < 2; ++b) {
        c[b] = std::exp(-0.5 * std::norm(bp.phi[b]));
        dc[b] = -std::real(std::conj(bp.phi[b]) * bp.dphi[b]) * c[b];
    }
    for (int n = 0; n <= n_max; ++n) {
        if (n > 0) {
            for (int b = 0; b < 2; ++b) {
                const double sn = std::sqrt(static_cast<double>(n));
                const cplx prev = c[b];
                c[b] = prev * bp.phi[b] / sn;
                // d<n|phi> = -Re(conj(phi) dphi) <n|phi> + dphi sqrt(n) <n-1|phi>
                dc[b] = -std::real(std::conj(bp.phi[b]) * bp.dphi[b]) * c[b] + bp.dphi[b] * sn * prev;
            }
        }
        cplx f[2], d[2];
        for (int b = 0; b < 2; ++b) {
            f[b] = bp.A[b] * c[b];
            d[b] = bp.dA[b] * c[b] + bp.A[b] * dc[b];
        }
        t.push(f[0], f[1], d[0], d[1], 1.0);
    }
    return t;
}

/// Spin POVM (x) phonon-number measurement.
inline FisherResult cfi_photocount(const BranchedState& state, int n_max = -1,
                                   std::optional<SpinPovm> angles = std::nullopt,
                                   const AngleSearch& search = kJointAngleSearch) {
    const auto bp = detail::branch_pair(state);
    const double pmax = std::max(std::abs(bp.phi[0]), std::abs(bp.phi[1]));
    if (n_max < 0) n_max = fock_cutoff_for(pmax);
    FisherResult r;
    r.channel = Channel::CfiPhotocount;
    const auto t = photocount_table(bp, n_max);
    detail::check_coverage(t, bp.total, r);
    detail::fill_joint(t, angles, search, r);
    r.numerics.n_max = n_max;
    return r;
}

/// Central difference (f(g0+h) - f(g0-h)) / 2h, or the Richardson
/// combination with the 2h pair.
template <class F>
auto central_difference(F&& f, double g0, double h, bool richardson = false) {
    if (!(h > 0.0)) throw InvalidInput("finite-difference step must be positive");
    auto d1 = ((f(g0 + h) - f(g0 - h)) / (2.0 * h)).eval();
    if (!richardson) return d1;
    auto d2 = ((f(g0 + 2.0 * h) - f(g0 - 2.0 * h)) / (4.0 * h)).eval();
    return ((4.0 * d1 - d2) / 3.0).eval();
}

/// Finite-difference d|psi>/dg with each displaced state gauged so that
/// <psi(g0)|psi(g0 +- h)> is real and positive.
inline CVector finite_diff_tangent(const std::function<CVector(double)>& factory, double g0, double h) {
    if (!(h > 0.0)) throw InvalidInput("finite-difference step must be positive");
    const CVector psi0 = factory(g0);
    auto gauged = [&](double g) {
        CVector v = factory(g);
        const cplx o = psi0.dot(v);
        if (std::abs(o) > 0.0) v *= std::conj(o) / std::abs(o);
        return v;
    };
    return (gauged(g0 + h) - gauged(g0 - h)) / (2.0 * h);
}

}  // namespace gravsim
