#include <gtest/gtest.h>

#include <cmath>

#include "gravsim/hilbert.hpp"

using namespace gravsim;

namespace {

CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (long i = 0; i < a.rows(); ++i)
        for (long j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// Collective operator sum_i op_i on n qubits, qubit basis (|up>, |down>).
CMatrix collective(const CMatrix& op, int n) {
    const CMatrix id = CMatrix::Identity(2, 2);
    CMatrix total = CMatrix::Zero(1L << n, 1L << n);
    for (int i = 0; i < n; ++i) {
        CMatrix term = CMatrix::Identity(1, 1);
        for (int j = 0; j < n; ++j) term = kron(term, j == i ? op : id);
        total += term;
    }
    return total;
}

// Normalized symmetric state with `downs` spins down, ascending-m index = n - downs.
CVector dicke_vector(int n, int downs) {
    CVector v = CVector::Zero(1L << n);
    for (long b = 0; b < (1L << n); ++b)
        if (__builtin_popcountl(static_cast<unsigned long>(b)) == downs) v(b) = 1.0;
    return v / v.norm();
}

}  // namespace

TEST(Fock, LadderOperatorsAndNumber) {
    const FockSpace f(6);
    const CMatrix a = f.annihilation(), ad = f.creation();
    EXPECT_LT((ad * a - f.number()).norm(), 1e-14);
    const CMatrix comm = a * ad - ad * a;
    for (int n = 0; n < f.cutoff; ++n) EXPECT_NEAR(std::real(comm(n, n)), 1.0, 1e-14);
    EXPECT_THROW(FockSpace(-1), InvalidInput);
}

TEST(Dicke, MatchesPauliSumsOnSymmetricSubspace) {
    CMatrix sp(2, 2), sz(2, 2);
    sp << 0, 1, 0, 0;  // |up><down|
    sz << 0.5, 0, 0, -0.5;
    for (int n : {1, 2, 3, 4}) {
        const CMatrix big_p = collective(sp, n), big_z = collective(sz, n);
        const auto ops = dicke_operators(DickeSpace(n));
        for (int i = 0; i <= n; ++i)
            for (int j = 0; j <= n; ++j) {
                const CVector vi = dicke_vector(n, n - i), vj = dicke_vector(n, n - j);
                EXPECT_NEAR(std::abs(vi.dot(big_p * vj) - ops.splus(i, j)), 0.0, 1e-12) << n << i << j;
                EXPECT_NEAR(std::abs(vi.dot(big_z * vj) - ops.sz(i, j)), 0.0, 1e-12);
            }
    }
}

TEST(Dicke, AlgebraAndLabels) {
    const DickeSpace s(5);
    const auto ops = dicke_operators(s);
    const CMatrix comm = ops.splus * ops.sminus - ops.sminus * ops.splus;
    EXPECT_LT((comm - 2.0 * ops.sz).norm(), 1e-12);
    const CMatrix casimir = ops.sx() * ops.sx() + ops.sy() * ops.sy() + ops.sz * ops.sz;
    EXPECT_LT((casimir - s.s() * (s.s() + 1.0) * CMatrix::Identity(6, 6)).norm(), 1e-12);
    EXPECT_EQ(s.index_of(-5), 0);
    EXPECT_EQ(s.index_of(5), 5);
    EXPECT_THROW(s.index_of(4), InvalidInput);
    EXPECT_THROW(DickeSpace(0), InvalidInput);
    EXPECT_NEAR(lowering_factor(2.5, 2.5), std::sqrt(5.0), 1e-14);
}

TEST(Coherent, AmplitudesOverlapAndTail) {
    const cplx alpha(1.1, -0.7);
    const FockSpace f(60);
    const auto c = coherent_state(alpha, f);
    EXPECT_NEAR(c.amplitudes.squaredNorm(), 1.0, 1e-12);
    EXPECT_NEAR(std::abs(c.amplitudes.dot(f.annihilation() * c.amplitudes) - alpha), 0.0, 1e-12);
    const cplx beta(-0.3, 0.4);
    const auto b = coherent_state(beta, f);
    EXPECT_NEAR(std::abs(b.amplitudes.dot(c.amplitudes) - coherent_overlap(beta, alpha)), 0.0, 1e-13);
    // <0|1> = e^{-1/2}
    EXPECT_NEAR(std::abs(coherent_overlap(0.0, 1.0)), 0.606531, 1e-6);

    const FockSpace small(4);
    const auto t = coherent_state(2.0, small, 1.0);
    EXPECT_NEAR(t.norm_deficit, 1.0 - t.amplitudes.squaredNorm(), 1e-12);
    EXPECT_NEAR(coherent_tail_mass(2.0, 4), t.norm_deficit, 1e-12);
    EXPECT_THROW(coherent_state(2.0, small), TruncationError);
    EXPECT_EQ(fock_cutoff_for(0.0), 20);
    EXPECT_EQ(fock_cutoff_for(2.0), 40);
}

TEST(Quadrature, HermiteFunctionsOrthonormalByTrapezoid) {
    EXPECT_NEAR(std::real(position_wavefunction(0, 0.0, 0.0)), 0.751126, 1e-6);
    const int n = 6, points = 4001;
    const double half = 12.0, dx = 2.0 * half / (points - 1);
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
    for (int p = 0; p < points; ++p) {
        const double x = -half + p * dx;
        const double w = (p == 0 || p == points - 1) ? 0.5 * dx : dx;
        const auto h = hermite_functions(n - 1, x);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) gram(i, j) += w * h[static_cast<std::size_t>(i)] * h[static_cast<std::size_t>(j)];
    }
    EXPECT_LT((gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-12);
    const cplx ratio = position_wavefunction(3, 0.4, 0.25) / position_wavefunction(3, 0.4, 0.0);
    EXPECT_NEAR(std::abs(ratio - std::exp(I * 0.75)), 0.0, 1e-14);
}

TEST(DensityMatrix, PartialTracePurityFidelity) {
    CVector up(2), plus(3);
    up << 1.0, 0.0;
    plus << 1.0, I, -1.0;
    plus /= plus.norm();
    const CVector prod = kron(up, plus);
    const auto rho = DensityMatrix::pure(prod, {2, 3});
    EXPECT_LT((partial_trace(rho, 0).matrix - up * up.adjoint()).norm(), 1e-14);
    EXPECT_LT((partial_trace(rho, 1).matrix - plus * plus.adjoint()).norm(), 1e-14);

    CVector bell = CVector::Zero(4);
    bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
    const auto b = DensityMatrix::pure(bell, {2, 2});
    EXPECT_NEAR(purity(partial_trace(b, 0)), 0.5, 1e-14);
    EXPECT_NEAR(linear_entropy(partial_trace(b, 1)), 0.5, 1e-14);

    EXPECT_NEAR(fidelity(rho, rho), 1.0, 1e-10);
    EXPECT_NEAR(fidelity(rho, prod), 1.0, 1e-14);
    const DensityMatrix mixed(CMatrix::Identity(2, 2) * 0.5);
    const DensityMatrix pure_up = DensityMatrix::pure(up, {2});
    EXPECT_NEAR(fidelity(pure_up, mixed), 0.5, 1e-12);
    EXPECT_THROW(DensityMatrix(CMatrix::Identity(3, 3), {2, 2}), DimensionMismatch);
    EXPECT_THROW(partial_trace(rho, 2), DimensionMismatch);
    EXPECT_THROW(DensityMatrix(CMatrix::Identity(2, 2)).validate(), InvalidInput);
    EXPECT_NO_THROW(mixed.validate());
}
