#include <gtest/gtest.h>

#include "gravsim/fisher.hpp"
#include "gravsim/oracles.hpp"

using namespace gravsim;

namespace {

ProbeConfig ghz(double kn, int n, double g = 0.1, cplx alpha = 0.0, double xi = 0.0) {
    ProbeConfig c;
    c.n_spins = n;
    c.couplings = {kn / n};
    c.g = g;
    c.alpha = alpha;
    c.xi = xi;
    return c;
}

// Spin-projected field vector <Upsilon| psi> for a dense single-spin GHZ state
// (index 0 is m = -1/2, index 1 is m = +1/2).
CVector project(const DenseState& d, const std::array<cplx, 2>& bra) {
    const int fd = d.fock_dim;
    return bra[0] * d.amplitudes.segment(fd, fd) + bra[1] * d.amplitudes.segment(0, fd);
}

struct Outcomes {
    std::vector<double> p, dp, w;
};

// Distribution over (spin outcome, field outcome) from dense states at g +- h.
template <class FieldAmp>
Outcomes dense_outcomes(double kn, double tau, const SpinPovm& povm, int npts, FieldAmp&& amp) {
    const double h = 1e-5;
    const FockSpace f(45);
    auto dist = [&](double g) {
        const auto d = to_dense(evolve(ghz(kn, 1, g), tau), f);
        std::vector<double> out;
        for (const auto& bra : {povm.bra(), povm.bra_complement()}) {
            const CVector v = project(d, bra);
            for (int i = 0; i < npts; ++i) out.push_back(std::norm(amp(v, i)));
        }
        return out;
    };
    const auto p = dist(0.1), pp = dist(0.1 + h), pm = dist(0.1 - h);
    Outcomes o;
    o.p = p;
    for (std::size_t i = 0; i < p.size(); ++i) o.dp.push_back((pp[i] - pm[i]) / (2.0 * h));
    return o;
}

double standard_cfi(const Outcomes& o, const std::vector<double>& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < o.p.size(); ++i)
        if (o.p[i] > 1e-300) s += w[i % w.size()] * o.dp[i] * o.dp[i] / o.p[i];
    return s;
}

}  // namespace

TEST(Qfi, BranchFormulaMatchesDenseVectors) {
    auto c = ghz(0.8, 2, 0.1, {0.4, -0.3}, 0.3);
    c.spins = Css{};
    for (double tau : {0.6, 3.0}) {
        const auto st = evolve(c, tau);
        const auto t = d_dg(st);
        const FockSpace f(50);
        const auto d = to_dense(st, f);
        const double dense = qfi_pure(d.amplitudes, to_dense_tangent(st, t, f)).value;
        EXPECT_NEAR(qfi_pure(st, t).value, dense, 1e-10 * dense);
    }
}

TEST(Qfi, MixedReducesToClassicalAndPureLimits) {
    const double p = 0.3, dp = 0.7;
    CMatrix rho = CMatrix::Zero(2, 2), drho = CMatrix::Zero(2, 2);
    rho(0, 0) = p;
    rho(1, 1) = 1 - p;
    drho(0, 0) = dp;
    drho(1, 1) = -dp;
    EXPECT_NEAR(qfi_mixed(rho, drho).value, dp * dp / (p * (1 - p)), 1e-12);

    const auto st = evolve(ghz(0.5, 1), 1.3);
    const FockSpace f(40);
    const CVector psi = to_dense(st, f).amplitudes;
    const CVector dpsi = to_dense_tangent(st, d_dg(st), f);
    const CMatrix r = psi * psi.adjoint();
    const CMatrix dr = dpsi * psi.adjoint() + psi * dpsi.adjoint();
    const double expect = 4.0 * (dpsi.squaredNorm() - std::norm(psi.dot(dpsi)));
    EXPECT_NEAR(qfi_mixed(r, dr, 1e-12).value, expect, 1e-8 * expect);
    EXPECT_THROW(qfi_mixed(CMatrix::Identity(2, 2), CMatrix::Zero(3, 3)), DimensionMismatch);
}

TEST(Qfi, FiniteDifferenceTangentIsGaugeFree) {
    const FockSpace f(40);
    auto factory = [&](double g) {
        const CVector v = to_dense(evolve(ghz(0.6, 1, g), 2.0), f).amplitudes;
        return CVector(v * std::exp(I * (37.0 * g)));  // arbitrary g-dependent global phase
    };
    const CVector psi = factory(0.1);
    const double q = qfi_pure(psi, finite_diff_tangent(factory, 0.1, 1e-5)).value;
    EXPECT_NEAR(q, oracle::qfi_ghz(0.6, 1, 2.0, 0.0), 1e-6 * q);

    auto cubic = [](double x) { return Eigen::Matrix<double, 1, 1>::Constant(x * x * x); };
    EXPECT_NEAR(central_difference(cubic, 1.5, 0.1, true)(0), 3.0 * 1.5 * 1.5, 1e-12);
    EXPECT_THROW(central_difference(cubic, 1.0, 0.0), InvalidInput);
}

TEST(SpinCfi, DirectProbabilityMatchesClosedForm) {
    for (double tau : {0.8, pi, 5.5})
        for (double theta : {0.3, pi / 2, 2.5})
            for (double phi : {0.0, 1.2, 4.0}) {
                const double alpha = 0.35, g = 0.12, xi = 0.2;
                const auto st = evolve(ghz(0.6, 3, g, alpha, xi), tau);
                const auto [p, dp] = spin_probability(st, d_dg(st), {theta, phi});
                EXPECT_NEAR(p, oracle::spin_probability_analytic(0.2, 3, tau, alpha, g, xi, theta, phi), 1e-10);
                const double f = cfi_spin(st, {theta, phi}).value;
                EXPECT_NEAR(f, oracle::cfi_spin_analytic(0.2, 3, tau, alpha, g, xi, theta, phi), 1e-8);
                (void)dp;
            }
}

TEST(SpinCfi, OptimumSaturatesSpinQfi) {
    for (double kn : {0.3, 1.0})
        for (double tau : {1.0, pi, 2.0 * pi}) {
            const auto st = evolve(ghz(kn, 2), tau);
            const auto r = optimize_spin_angles(st);
            const double q = oracle::qfi_spin_ghz(kn / 2, 2, tau);
            EXPECT_NEAR(r.value, q, 1e-6 * std::max(1.0, q));
            EXPECT_NEAR(r.angles->theta, pi / 2, 1e-6);
        }
    auto c = ghz(0.5, 2);
    c.spins = Css{};
    EXPECT_THROW(optimize_spin_angles(evolve(c, 1.0)), InvalidInput);
    EXPECT_EQ(cfi_binary(1.0, 0.3), 0.0);
}

TEST(JointCfi, HomodyneMatchesFockExpansion) {
    const double kn = 0.7, tau = 2.2;
    const SpinPovm povm{1.1, 0.6};
    QuadratureGrid grid;
    grid.x_points = 801;
    grid.x_half_width = 9.0;
    for (double lambda : {0.0, 0.6}) {
        grid.lambda = lambda;
        const double dx = 18.0 / 800;
        std::vector<double> w(801, dx);
        w.front() = w.back() = 0.5 * dx;
        const auto o = dense_outcomes(kn, tau, povm, 801, [&](const CVector& v, int i) {
            const double x = -9.0 + i * dx;
            cplx a = 0.0;
            for (int n = 0; n < v.size(); ++n) a += std::conj(position_wavefunction(n, x, lambda)) * v(n);
            return a;
        });
        const auto r = cfi_homodyne(evolve(ghz(kn, 1), tau), grid, povm);
        const double expect = standard_cfi(o, w);
        EXPECT_NEAR(r.standard_value, expect, 1e-6 * expect) << lambda;
        double literal = 0.0;
        for (int i = 0; i < 801; ++i) {
            const double p = o.p[static_cast<std::size_t>(i)], dp = o.dp[static_cast<std::size_t>(i)];
            if (p > 1e-300) literal += w[static_cast<std::size_t>(i)] * dp * dp / (p * (1 - p));
        }
        EXPECT_NEAR(r.value, literal, 1e-6 * literal);
    }
}

TEST(JointCfi, PhotocountMatchesDenseFockDistribution) {
    const double kn = 0.9, tau = 1.7;
    const SpinPovm povm{pi / 2, 2.0};
    const auto o = dense_outcomes(kn, tau, povm, 46, [](const CVector& v, int i) { return v(i); });
    const auto r = cfi_photocount(evolve(ghz(kn, 1), tau), 45, povm);
    const double expect = standard_cfi(o, {1.0});
    EXPECT_NEAR(r.standard_value, expect, 1e-6 * expect);
}

TEST(JointCfi, HeterodyneMatchesHusimiFromDenseState) {
    const double kn = 0.5, tau = 2.6;
    const SpinPovm povm{pi / 2, 0.9};
    const int pts = 81;
    const double hw = 6.5, h = 2 * hw / pts;
    const FockSpace f(45);
    std::vector<CVector> bras;
    for (int i = 0; i < pts; ++i)
        for (int j = 0; j < pts; ++j)
            bras.push_back(coherent_state(cplx(-hw + h * (i + 0.5), -hw + h * (j + 0.5)), f, 1.0).amplitudes);
    const auto o = dense_outcomes(kn, tau, povm, pts * pts,
                                  [&](const CVector& v, int i) { return bras[static_cast<std::size_t>(i)].dot(v) / std::sqrt(pi); });
    QuadratureGrid grid;
    grid.het_points = pts;
    grid.het_half_width = hw;
    const auto r = cfi_heterodyne(evolve(ghz(kn, 1), tau), grid, povm);
    const double expect = standard_cfi(o, {h * h});
    EXPECT_NEAR(r.standard_value, expect, 1e-6 * expect);
}

TEST(JointCfi, StandardValuesBoundedByQfiAndCoverageEnforced) {
    for (double kn : {0.1, 1.0})
        for (double tau : {pi / 2, pi}) {
            const auto st = evolve(ghz(kn, 1), tau);
            const double q = qfi_pure(st, d_dg(st)).value;
            EXPECT_LE(cfi_homodyne(st).standard_value, q + 1e-8);
            EXPECT_LE(cfi_heterodyne(st).standard_value, q + 1e-8);
            EXPECT_LE(cfi_photocount(st).standard_value, q + 1e-8);
        }
    QuadratureGrid narrow;
    narrow.x_half_width = 1.0;
    const auto st = evolve(ghz(1.0, 1), pi);
    EXPECT_THROW(cfi_homodyne(st, narrow), GridCoverageError);
    EXPECT_THROW(cfi_photocount(st, 2), GridCoverageError);
}
