#include <gtest/gtest.h>

#include "gravsim/fisher.hpp"
#include "gravsim/oracles.hpp"

using namespace gravsim;

namespace {

double numeric_qfi(const ProbeConfig& c, double tau) {
    const auto st = evolve(c, tau);
    return qfi_pure(st, d_dg(st)).value;
}

// Euler integral for 2F1(a, b; c; -1) with t = u^2, Simpson rule; needs c > b > 0.
double euler_2f1_minus_one(double a, double b, double c) {
    const int n = 20000;
    auto f = [&](double u) {
        const double t = u * u;
        return 2.0 * std::pow(u, 2.0 * b - 1.0) * std::pow(1.0 - t, c - b - 1.0) * std::pow(1.0 + t, -a);
    };
    double s = f(0.0) + f(1.0);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(static_cast<double>(i) / n);
    s /= 3.0 * n;
    return std::exp(std::lgamma(c) - std::lgamma(b) - std::lgamma(c - b)) * s;
}

}  // namespace

TEST(Oracle, SingleSpinAgainstBranchNumerics) {
    for (double theta : {0.0, 0.4, pi / 2, 2.2, pi})
        for (double tau : {0.3, pi, 4.0, 2.0 * pi}) {
            ProbeConfig c;
            c.couplings = {0.7};
            c.g = 0.1;
            c.xi = 0.25;
            c.alpha = cplx(0.3, -0.2);
            c.spins = DickeAmplitudes{{std::sin(theta / 2), std::cos(theta / 2)}};
            const double num = numeric_qfi(c, tau);
            EXPECT_NEAR(num, oracle::qfi_single_full(0.7, tau, theta, 0.25), 1e-8 * std::max(1.0, num));
        }
}

TEST(Oracle, TwoSpinAgainstBranchNumerics) {
    const double k1 = 0.3, k2 = 0.55;
    for (double r2 : {0.0, 0.3, 1.0 / std::sqrt(2.0)})
        for (double r3 : {0.0, 0.4})
            for (double r4 : {0.0, 0.5, 1.0 / std::sqrt(2.0)}) {
                const double rest = 1.0 - r2 * r2 - r3 * r3 - r4 * r4;
                if (rest < 0.0) continue;
                ProbeConfig c;
                c.n_spins = 2;
                c.couplings = {k1, k2};
                c.g = 0.05;
                // R1|01> + R2|00> + R3|10> + R4|11>, bit 0 is spin 1
                c.spins = ProductAmplitudes{{r2, r3, std::sqrt(rest), r4}};
                for (double tau : {1.0, pi, 2.0 * pi}) {
                    const double num = numeric_qfi(c, tau);
                    EXPECT_NEAR(num, oracle::qfi_two(k1, k2, r2, r3, r4, 0.0, tau), 1e-8 * std::max(1.0, num));
                }
            }
    const double s = 1.0 / std::sqrt(2.0);
    EXPECT_NEAR(oracle::qfi_two(0.2, 0.2, s, 0.0, s, 0.0, 2.0), oracle::qfi_ghz(0.2, 2, 2.0, 0.0), 1e-12);
}

TEST(Oracle, GhzFullAndSpinSubsystem) {
    for (int n : {1, 3, 8})
        for (double tau : {0.5, pi, 2.0 * pi}) {
            ProbeConfig c;
            c.n_spins = n;
            c.couplings = {0.2};
            c.g = 0.1;
            const auto st = evolve(c, tau);
            const auto t = d_dg(st);
            const double q = qfi_pure(st, t).value;
            EXPECT_NEAR(q, oracle::qfi_ghz(0.2, n, tau, 0.0), 1e-9 * q);
            const double qs = qfi_mixed(spin_reduced_dm(st), spin_reduced_dm_derivative(st, t)).value;
            EXPECT_NEAR(qs, oracle::qfi_spin_ghz(0.2, n, tau), 1e-8 * std::max(1.0, qs));
        }
    EXPECT_NEAR(oracle::qfi_ghz(1.0, 2, 2.0 * pi, 0.0), 631.6547, 1e-4);
    EXPECT_NEAR(oracle::qfi_spin_ghz(1.0, 1, pi), 4.0 * std::exp(-4.0) * pi * pi, 1e-14);
    EXPECT_NEAR(oracle::qfi_spin_ghz(1.0, 1, pi), 0.7230724, 1e-7);
    EXPECT_NEAR(oracle::qfi_ghz(0.3, 2, 2.0 * pi, 0.0), 16.0 * pi * pi * 0.36, 1e-10);
}

TEST(Oracle, SpinProbabilityAndCfiConsistent) {
    const double k = 0.4, tau = 2.5, alpha = 0.3, g = 0.1, xi = 0.2, theta = 1.1, phi = 0.4, h = 1e-6;
    const double p = oracle::spin_probability_analytic(k, 2, tau, alpha, g, xi, theta, phi);
    const double dp = (oracle::spin_probability_analytic(k, 2, tau, alpha, g + h, xi, theta, phi) -
                       oracle::spin_probability_analytic(k, 2, tau, alpha, g - h, xi, theta, phi)) /
                      (2.0 * h);
    EXPECT_NEAR(oracle::cfi_spin_analytic(k, 2, tau, alpha, g, xi, theta, phi), dp * dp / (p * (1.0 - p)), 1e-7);
}

TEST(Oracle, Hypergeometric) {
    // closed form (15/4)(10/3 - pi)
    EXPECT_NEAR(oracle::hyp2f1_at_minus_one(1.0, 1.5, 3.5), 3.75 * (10.0 / 3.0 - pi), 1e-13);
    EXPECT_NEAR(oracle::hyp2f1_at_minus_one(1.0, 1.5, 3.5), euler_2f1_minus_one(1.0, 1.5, 3.5), 1e-9);
    EXPECT_NEAR(oracle::hyp2f1_at_minus_one(1.0, 0.5, 4.5), euler_2f1_minus_one(1.0, 0.5, 4.5), 1e-9);
    EXPECT_NEAR(oracle::hyp2f1_at_minus_one(1.0, 7.5, 11.5), euler_2f1_minus_one(1.0, 7.5, 11.5), 1e-9);
    // terminating: 2F1(1, -2; c; -1) = 1 + 2/c + 2/(c(c+1))
    EXPECT_NEAR(oracle::hyp2f1_at_minus_one(1.0, -2.0, 5.0), 1.0 + 2.0 / 5.0 + 2.0 / 30.0, 1e-14);
    EXPECT_THROW(oracle::hyp2f1_at_minus_one(1.0, 1.0, -2.0), InvalidInput);
    EXPECT_THROW(oracle::hyp2f1_at_minus_one(3.0, 2.0, 1.0), ConvergenceError);
}

TEST(Oracle, CoherentSpinState) {
    // Reduces to 8 - 8 cos tau + 4 k^2 N (tau - sin tau)^2 for every N.
    for (int n = 1; n <= 40; ++n)
        for (double tau : {1.0, 2.0 * pi}) {
            const double s = tau - std::sin(tau);
            const double expect = 8.0 - 8.0 * std::cos(tau) + 4.0 * 0.3 * 0.3 * n * s * s;
            EXPECT_NEAR(oracle::qfi_css(0.3, n, tau), expect, 1e-10 * expect) << n;
        }
    EXPECT_NEAR(oracle::qfi_css(0.4, 1, 2.1), oracle::qfi_ghz(0.4, 1, 2.1, 0.0), 1e-10);
    for (int n : {1, 5, 30}) EXPECT_NEAR(oracle::qfi_css_2pi(0.2, n), oracle::qfi_css(0.2, n, 2.0 * pi), 1e-9);
    EXPECT_THROW(oracle::qfi_css(0.1, 0, 1.0), InvalidInput);
}

TEST(Oracle, Sensitivity) {
    const double omega = 2.0e4, mass = 3.0e-11, nu = 1e3;
    for (int n : {1, 3, 10}) {
        const double closed = std::sqrt(2.0 * oracle::hbar * omega * omega * omega / mass) / (4.0 * pi * n * std::sqrt(nu));
        EXPECT_NEAR(oracle::sensitivity(omega, mass, n, nu, 1.0, 2.0 * pi, 0.0), closed, 1e-12 * closed);
    }
    EXPECT_NEAR(std::sqrt(2.0 * oracle::hbar) / (4.0 * pi * std::sqrt(1e3)), 3.655e-20, 5e-24);
    EXPECT_THROW(oracle::sensitivity(-1.0, 1.0, 1, 1.0, 1.0, 1.0, 0.0), InvalidInput);
}
