#include <gtest/gtest.h>

#include "gravsim/lindblad.hpp"

using namespace gravsim;

namespace {

CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (long i = 0; i < a.rows(); ++i)
        for (long j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

CMatrix dissipator(const CMatrix& l, const CMatrix& rho) {
    const CMatrix ll = l.adjoint() * l;
    return l * rho * l.adjoint() - 0.5 * (ll * rho + rho * ll);
}

LindbladParams params(int n, double k, double g, int cutoff) {
    LindbladParams p;
    p.probe.n_spins = n;
    p.probe.couplings = {k};
    p.probe.g = g;
    p.cutoff = cutoff;
    return p;
}

double mean_photons(const DensityMatrix& rho, int ds, int fd) {
    double s = 0.0;
    for (int i = 0; i < ds; ++i)
        for (int q = 0; q < fd; ++q) s += q * std::real(rho.matrix(i * fd + q, i * fd + q));
    return s;
}

}  // namespace

TEST(Lindblad, GeneratorMatchesKroneckerConstruction) {
    auto p = params(2, 0.6, 0.15, 5);
    p.gamma_d = 0.3;
    p.gamma = 0.2;
    p.kappa = 0.4;
    p.n_th = 0.7;
    p.probe.xi = 0.2;
    const LindbladGenerator gen(p);
    const DickeSpace ds(2);
    const FockSpace fs(5);
    const auto ops = dicke_operators(ds);
    const CMatrix a = fs.annihilation(), ad = fs.creation();
    const CMatrix is = CMatrix::Identity(3, 3), ifk = CMatrix::Identity(6, 6);
    const CMatrix zop = 0.6 * ops.sz - 0.15 * std::cos(0.2) * is;
    const CMatrix h = kron(is, fs.number()) - kron(zop, a + ad);
    const CMatrix sz = kron(ops.sz, ifk), sm = kron(ops.sminus, ifk);
    const CMatrix big_a = kron(is, a), big_ad = kron(is, ad);

    Eigen::MatrixXcd x = Eigen::MatrixXcd::Random(18, 18);
    const CMatrix rho = (x * x.adjoint()) / (x * x.adjoint()).trace();
    const CMatrix expect = -I * (h * rho - rho * h) + 0.3 * dissipator(sz, rho) + 0.2 * dissipator(sm, rho) +
                           0.4 * 0.7 * dissipator(big_ad, rho) + 0.4 * 1.7 * dissipator(big_a, rho);
    EXPECT_LT((gen.apply(rho) - expect).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_NEAR(std::abs(gen.apply(rho).trace()), 0.0, 1e-13);
    EXPECT_THROW(gen.apply(CMatrix::Identity(4, 4)), DimensionMismatch);
}

TEST(Lindblad, DephasingDecaysGhzCoherence) {
    const int n = 3;
    auto p = params(n, 0.0, 0.0, 2);
    p.gamma_d = 0.05;
    const double tau = 2.5;
    const auto r = integrate(initial_density(p), p, tau);
    const int fd = 3;
    const double coherence = std::abs(r.rho.matrix(0, n * fd));
    EXPECT_NEAR(coherence, 0.5 * std::exp(-0.5 * p.gamma_d * n * n * tau), 1e-9);
    EXPECT_LT(r.trace_error, 1e-12);
}

TEST(Lindblad, FieldRelaxesTowardsBathOccupation) {
    auto p = params(1, 0.0, 0.0, 40);
    p.probe.alpha = 1.0;
    p.kappa = 0.3;
    const double tau = 2.0;
    const auto r = integrate(initial_density(p), p, tau);
    EXPECT_NEAR(mean_photons(r.rho, 2, 41), std::exp(-p.kappa * tau), 1e-9);

    p.n_th = 0.5;
    const auto t = integrate(initial_density(p), p, tau);
    const double decay = std::exp(-p.kappa * tau);
    EXPECT_NEAR(mean_photons(t.rho, 2, 41), decay + p.n_th * (1.0 - decay), 1e-8);
    EXPECT_GT(t.min_eigenvalue, -1e-10);
}

TEST(Lindblad, ZeroRatesReproduceBranchDynamics) {
    for (double tau : {pi, 2.0 * pi}) {
        auto p = params(2, 0.4, 0.1, 30);
        p.probe.alpha = cplx(0.3, 0.1);
        const auto r = integrate(initial_density(p), p, tau);
        const auto pure = to_dense(evolve(p.probe, tau), FockSpace(30), 1e-10);
        EXPECT_GT(fidelity(r.rho, pure.amplitudes), 1.0 - 1e-9);
    }
}

TEST(Lindblad, LosslessQfiMatchesClosedForm) {
    auto p = params(1, 0.5, 0.1, 25);
    p.integrator.tolerance = 1e-13;
    const auto r = qfi_losses(p, 0.1);
    EXPECT_NEAR(r.fraction, 1.0, 1e-6);
    EXPECT_NEAR(r.qfi.value, oracle::qfi_ghz(0.5, 1, 2.0 * pi, 0.0), 1e-5 * r.ideal);
    EXPECT_EQ(r.qfi.numerics.cutoff, 25);
}

TEST(Lindblad, ValidationAndScheduleErrors) {
    auto p = params(2, 0.3, 0.1, 10);
    p.gamma = -1.0;
    EXPECT_THROW(build_generator(p), InvalidInput);
    p = params(2, 0.3, 0.1, 10);
    p.probe.couplings = {0.1, 0.2};
    EXPECT_THROW(build_generator(p), InvalidInput);
    p = params(2, 0.3, 0.1, 10);
    const std::vector<double> short_schedule{0.1, 0.1};
    EXPECT_THROW(integrate(initial_density(p), p, 1.0, &short_schedule), InvalidInput);
    EXPECT_EQ(params(2, 1.0, 0.0, -1).resolved_cutoff(), fock_cutoff_for(2.0));
}
