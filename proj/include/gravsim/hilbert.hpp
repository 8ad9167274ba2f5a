#pragma once

// Finite-dimensional building blocks: truncated Fock space, the symmetric
// (Dicke) spin space, coherent states, density matrices and quadrature
// wavefunctions.
//
// Basis conventions used everywhere in the library:
//   * Dicke labels are stored as 2m (an integer) in ascending order,
//     index i <-> 2m = 2i - N.
//   * Composite spin (x) field vectors are spin-major: index = s * (cutoff+1) + n.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

#include "gravsim/errors.hpp"

namespace gravsim {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

struct FockSpace {
    int cutoff = 0;

    explicit FockSpace(int cutoff_) : cutoff(cutoff_) {
        if (cutoff < 0) throw InvalidInput("Fock cutoff must be non-negative");
    }

    int dim() const noexcept { return cutoff + 1; }

    CMatrix annihilation() const {
        CMatrix a = CMatrix::Zero(dim(), dim());
        for (int n = 1; n <= cutoff; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
        return a;
    }
    CMatrix creation() const { return annihilation().adjoint(); }
    CMatrix number() const {
        CMatrix n = CMatrix::Zero(dim(), dim());
        for (int k = 0; k <= cutoff; ++k) n(k, k) = static_cast<double>(k);
        return n;
    }
};

struct DickeSpace {
    int n_spins = 1;

    explicit DickeSpace(int n) : n_spins(n) {
        if (n < 1) throw InvalidInput("Dicke space needs at least one spin");
    }

    int dim() const noexcept { return n_spins + 1; }
    double s() const noexcept { return 0.5 * n_spins; }
    int twice_m(int index) const noexcept { return 2 * index - n_spins; }
    double m(int index) const noexcept { return 0.5 * twice_m(index); }
    int index_of(int twice_m_value) const {
        if (std::abs(twice_m_value) > n_spins || (twice_m_value + n_spins) % 2 != 0)
            throw InvalidInput("2m label outside the symmetric multiplet");
        return (twice_m_value + n_spins) / 2;
    }
};

struct DickeOperators {
    CMatrix sz;
    CMatrix splus;
    CMatrix sminus;

    CMatrix sx() const { return 0.5 * (splus + sminus); }
    CMatrix sy() const { return (-0.5 * I) * (splus - sminus); }
};

/// S_z, S_+ and S_- in the ascending-m Dicke basis.
inline DickeOperators dicke_operators(const DickeSpace& space) {
    const int d = space.dim();
    const double s = space.s();
    DickeOperators ops{CMatrix::Zero(d, d), CMatrix::Zero(d, d), CMatrix::Zero(d, d)};
    for (int i = 0; i < d; ++i) ops.sz(i, i) = space.m(i);
    for (int i = 0; i + 1 < d; ++i) {
        const double m = space.m(i);
        // S_+ |m> = sqrt(s(s+1) - m(m+1)) |m+1>
        ops.splus(i + 1, i) = std::sqrt(s * (s + 1.0) - m * (m + 1.0));
    }
    ops.sminus = ops.splus.adjoint();
    return ops;
}

/// S_- ladder factor c with S_- |m> = c |m-1>.
inline double lowering_factor(double s, double m) {
    return std::sqrt(std::max(0.0, s * (s + 1.0) - m * (m - 1.0)));
}

struct CoherentVector {
    CVector amplitudes;
    double norm_deficit = 0.0;
};

/// Poisson tail mass of |alpha> beyond the cutoff, summed directly.
inline double coherent_tail_mass(cplx alpha, int cutoff) {
    const double mean = std::norm(alpha);
    if (mean == 0.0) return 0.0;
    // log of the first omitted Poisson weight
    const double n0 = cutoff + 1.0;
    double log_term = -mean + n0 * std::log(mean) - std::lgamma(n0 + 1.0);
    double term = std::exp(log_term);
    double tail = 0.0;
    for (int n = cutoff + 1; n < cutoff + 100000; ++n) {
        tail += term;
        term *= mean / (n + 1.0);
        if (n > mean && term <= 1e-18 * tail) break;
    }
    return tail;
}

/// Truncated coherent state exp(-|alpha|^2/2) alpha^n / sqrt(n!).
/// Throws TruncationError if the discarded mass exceeds `max_deficit`.
inline CoherentVector coherent_state(cplx alpha, const FockSpace& space, double max_deficit = 1e-12) {
    CoherentVector out;
    out.amplitudes.resize(space.dim());
    cplx c = std::exp(-0.5 * std::norm(alpha));
    out.amplitudes(0) = c;
    for (int n = 1; n <= space.cutoff; ++n) {
        c *= alpha / std::sqrt(static_cast<double>(n));
        out.amplitudes(n) = c;
    }
    out.norm_deficit = coherent_tail_mass(alpha, space.cutoff);
    if (out.norm_deficit > max_deficit)
        throw TruncationError("coherent state does not fit the Fock cutoff", out.norm_deficit);
    return out;
}

/// Closed-form <beta|gamma>.
inline cplx coherent_overlap(cplx beta, cplx gamma) {
    return std::exp(-0.5 * std::norm(beta) - 0.5 * std::norm(gamma) + std::conj(beta) * gamma);
}

/// Cutoff heuristic ceil(|phi|^2 + 8|phi| + 20).
inline int fock_cutoff_for(double phi_max) {
    phi_max = std::abs(phi_max);
    return static_cast<int>(std::ceil(phi_max * phi_max + 8.0 * phi_max + 20.0));
}

/// Normalized Hermite functions psi_0..psi_nmax at x, by the stable
/// three-term recurrence (no factorials).
inline std::vector<double> hermite_functions(int nmax, double x) {
    std::vector<double> psi(static_cast<std::size_t>(nmax) + 1);
    psi[0] = std::pow(pi, -0.25) * std::exp(-0.5 * x * x);
    if (nmax >= 1) psi[1] = std::sqrt(2.0) * x * psi[0];
    for (int k = 1; k < nmax; ++k) {
        psi[k + 1] = std::sqrt(2.0 / (k + 1.0)) * x * psi[k] - std::sqrt(k / (k + 1.0)) * psi[k - 1];
    }
    return psi;
}

/// <n|x_lambda>, the Fock-basis component of the rotated-quadrature eigenstate.
inline cplx position_wavefunction(int n, double x, double lambda) {
    if (n < 0) throw InvalidInput("Fock index must be non-negative");
    const double h = hermite_functions(n, x)[static_cast<std::size_t>(n)];
    return h * std::exp(I * (static_cast<double>(n) * lambda));
}

struct DensityMatrix {
    CMatrix matrix;
    std::vector<int> dims;

    DensityMatrix() = default;
    DensityMatrix(CMatrix m, std::vector<int> d) : matrix(std::move(m)), dims(std::move(d)) {
        const long total = std::accumulate(dims.begin(), dims.end(), 1L, std::multiplies<>());
        if (matrix.rows() != matrix.cols() || total != matrix.rows())
            throw DimensionMismatch("subsystem dimensions do not match the matrix size");
    }
    explicit DensityMatrix(CMatrix m) : DensityMatrix(m, {static_cast<int>(m.rows())}) {}

    static DensityMatrix pure(const CVector& psi, std::vector<int> d) {
        return DensityMatrix(psi * psi.adjoint(), std::move(d));
    }

    int dim() const noexcept { return static_cast<int>(matrix.rows()); }
    cplx trace() const { return matrix.trace(); }
    double hermiticity_error() const { return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff(); }
    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (matrix + matrix.adjoint()), Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }

    /// Throws InvalidInput unless Hermitian, unit trace and positive to `tol`.
    void validate(double tol = 1e-8) const {
        if (hermiticity_error() > tol) throw InvalidInput("density matrix is not Hermitian");
        if (std::abs(trace() - 1.0) > tol) throw InvalidInput("density matrix trace differs from 1");
        if (min_eigenvalue() < -tol) throw InvalidInput("density matrix has a negative eigenvalue");
    }
};

/// Reduced state of subsystem `keep`, tracing out every other factor.
inline DensityMatrix partial_trace(const DensityMatrix& rho, int keep) {
    const int parts = static_cast<int>(rho.dims.size());
    if (keep < 0 || keep >= parts) throw DimensionMismatch("kept subsystem index out of range");
    const long total = std::accumulate(rho.dims.begin(), rho.dims.end(), 1L, std::multiplies<>());
    if (total != rho.matrix.rows() || rho.matrix.rows() != rho.matrix.cols())
        throw DimensionMismatch("subsystem dimensions do not match the matrix size");

    long inner = 1;
    for (int p = keep + 1; p < parts; ++p) inner *= rho.dims[static_cast<std::size_t>(p)];
    const long d = rho.dims[static_cast<std::size_t>(keep)];
    const long outer = total / (inner * d);

    CMatrix out = CMatrix::Zero(d, d);
    for (long i = 0; i < d; ++i)
        for (long j = 0; j < d; ++j) {
            cplx acc = 0.0;
            for (long o = 0; o < outer; ++o)
                for (long q = 0; q < inner; ++q)
                    acc += rho.matrix((o * d + i) * inner + q, (o * d + j) * inner + q);
            out(i, j) = acc;
        }
    return DensityMatrix(std::move(out), {static_cast<int>(d)});
}

inline double purity(const DensityMatrix& rho) {
    // Tr(rho^2) = sum_ij rho_ij rho_ji = sum |rho_ij|^2 for Hermitian rho
    return rho.matrix.cwiseAbs2().sum();
}

inline double linear_entropy(const DensityMatrix& rho) { return 1.0 - purity(rho); }

inline double fidelity(const CVector& a, const CVector& b) { return std::norm(a.dot(b)); }

inline double fidelity(const DensityMatrix& rho, const CVector& psi) {
    return std::real(psi.dot(rho.matrix * psi));
}

namespace detail {
inline CMatrix psd_sqrt(const CMatrix& m) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (m + m.adjoint()));
    const Eigen::VectorXd w = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
}
}  // namespace detail

/// Uhlmann fidelity, as the squared trace norm of sqrt(rho) sqrt(sigma). The
/// SVD form keeps full precision near 1, where eigenvalues of
/// sqrt(rho) sigma sqrt(rho) lose half their digits.
inline double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
    const CMatrix m = detail::psd_sqrt(rho.matrix) * detail::psd_sqrt(sigma.matrix);
    const double t = Eigen::JacobiSVD<CMatrix>(m).singularValues().sum();
    return t * t;
}

}  // namespace gravsim
