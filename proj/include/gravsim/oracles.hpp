#pragma once

// Closed-form reference values: full-system QFI for single, two-spin, GHZ
// and coherent-spin-state probes, spin-subsystem QFI and CFI, linear entropy,
// and the SI sensitivity conversion.

#include <cmath>

#include "gravsim/errors.hpp"
#include "gravsim/hilbert.hpp"

namespace gravsim::oracle {

inline constexpr double hbar = 1.054571817e-34;  // J s

/// Single spin with Bloch polar angle theta, whole system.
inline double qfi_single_full(double k, double tau, double theta, double xi) {
    const double c = std::cos(xi);
    const double s = tau - std::sin(tau);
    return c * c *
           (k * k * (2.0 * tau * tau + 1.0) +
            k * k * (-2.0 * s * s * std::cos(2.0 * theta) - 4.0 * tau * std::sin(tau) - std::cos(2.0 * tau)) -
            8.0 * std::cos(tau) + 8.0);
}

/// Two spins with amplitudes R1|01> + R2|00> + R3|10> + R4|11> (first digit is
/// spin 1, 0 is sigma_z = +1); r1 is fixed by normalization.
inline double qfi_two(double k1, double k2, double r2, double r3, double r4, double xi, double tau) {
    const double c = std::cos(xi);
    const double a = r3 * r3 + r4 * r4;
    const double b = r2 * r2 + r3 * r3;
    const double y = k1 * k1 * (a - 1.0) * a - 2.0 * k1 * k2 * r4 * r4 * b - 2.0 * k1 * k2 * r3 * r3 * (b - 1.0) +
                     k2 * k2 * (b - 1.0) * b;
    const double st = std::sin(tau);
    return -8.0 * c * c * (2.0 * tau * tau * y + 2.0 * st * (st - 2.0 * tau) * y + std::cos(tau) - 1.0);
}

/// GHZ probe, whole system.
inline double qfi_ghz(double k, int n, double tau, double xi) {
    const double c = std::cos(xi);
    const double kn2 = k * k * n * n;
    return 2.0 * c * c *
           (kn2 * (2.0 * tau * tau + 1.0) - kn2 * (4.0 * tau * std::sin(tau) + std::cos(2.0 * tau)) -
            4.0 * std::cos(tau) + 4.0);
}

/// GHZ probe, spin subsystem only.
inline double qfi_spin_ghz(double k, int n, double tau, double xi = 0.0) {
    const double kn = k * n;
    const double s = tau - std::sin(tau);
    const double c = std::cos(xi);
    return 4.0 * std::exp(2.0 * kn * kn * (std::cos(tau) - 1.0)) * kn * kn * c * c * s * s;
}

inline double linear_entropy_ghz(double k, int n, double tau) {
    const double kn = k * n;
    return 0.5 * (1.0 - std::exp(2.0 * kn * kn * (std::cos(tau) - 1.0)));
}

/// Spin POVM phase argument phi + 2gkN tau cos(xi) - 2kN(alpha + g cos(xi)) sin(tau).
inline double spin_povm_phase(double k, int n, double tau, double alpha, double g, double xi, double phi) {
    const double kn = k * n;
    const double gc = g * std::cos(xi);
    return phi + 2.0 * gc * kn * tau - 2.0 * kn * (alpha + gc) * std::sin(tau);
}

/// p(Upsilon(theta, phi) | g) for the GHZ probe.
inline double spin_probability_analytic(double k, int n, double tau, double alpha, double g, double xi,
                                        double theta, double phi) {
    const double kn = k * n;
    return 0.5 * (1.0 + std::exp(kn * kn * (std::cos(tau) - 1.0)) * std::sin(theta) *
                            std::cos(spin_povm_phase(k, n, tau, alpha, g, xi, phi)));
}

/// CFI of the two-outcome spin POVM as the ratio of the two negative factors.
/// Returns 0 when the denominator vanishes (pinned outcome).
inline double cfi_spin_analytic(double k, int n, double tau, double alpha, double g, double xi, double theta,
                                double phi) {
    const double kn = k * n;
    const double decay = std::exp(2.0 * kn * kn * (std::cos(tau) - 1.0));
    const double arg = spin_povm_phase(k, n, tau, alpha, g, xi, phi);
    const double s = tau - std::sin(tau);
    const double st = std::sin(theta);
    const double c = std::cos(xi);
    const double num = -4.0 * decay * kn * kn * c * c * s * s * st * st * std::pow(std::sin(arg), 2);
    const double den = std::pow(std::cos(arg), 2) * decay * st * st - 1.0;
    if (std::abs(den) < 1e-12) return 0.0;
    return num / den;
}

namespace detail {

/// Cohen-Villegas-Zagier acceleration of sum_{j>=0} (-1)^j a(j).
template <class F>
double alternating_sum(F&& a, int terms = 40) {
    double d = std::pow(3.0 + std::sqrt(8.0), terms);
    d = 0.5 * (d + 1.0 / d);
    double b = -1.0;
    double c = -d;
    double s = 0.0;
    for (int j = 0; j < terms; ++j) {
        c = b - c;
        s += c * a(j);
        b *= (j + terms) * (j - terms) / ((j + 0.5) * (j + 1.0));
    }
    return s / d;
}

inline bool nonpositive_integer(double x) { return x <= 0.0 && x == std::floor(x); }

}  // namespace detail

/// Gauss series 2F1(a, b; c; -1). Terminates when a or b is a non-positive
/// integer; otherwise the alternating tail is accelerated.
inline double hyp2f1_at_minus_one(double a, double b, double c) {
    if (detail::nonpositive_integer(c)) throw InvalidInput("2F1 lower parameter is a non-positive integer");
    constexpr int max_terms = 100000;
    const bool terminating = detail::nonpositive_integer(a) || detail::nonpositive_integer(b);
    if (!terminating && c - a - b <= -1.0) throw ConvergenceError("2F1 series diverges at z = -1");

    // Direct summation until the terms settle into an alternating, shrinking
    // sequence; the remainder goes through the accelerator.
    double term = 1.0;
    double sum = 0.0;
    const double settle = std::abs(a) + std::abs(b) + std::abs(c) + 10.0;
    int n = 0;
    for (; n < max_terms; ++n) {
        if (term == 0.0) return sum;
        if (!terminating && n >= settle) break;
        sum += term;
        term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * -1.0;
    }
    if (n >= max_terms) throw ConvergenceError("2F1 series did not settle within the term guard");

    // term is the signed n-th term; tail = sum_j (-1)^j |t_{n+j}|.
    const double sign = term < 0.0 ? -1.0 : 1.0;
    const int start = n;
    auto magnitude = [&](int j) {
        double t = std::abs(term);
        for (int m = start; m < start + j; ++m) t *= std::abs((a + m) * (b + m) / ((c + m) * (m + 1.0)));
        return t;
    };
    return sum + sign * detail::alternating_sum(magnitude);
}

/// Coherent-spin-state probe, whole system.
inline double qfi_css(double k, int n, double tau) {
    if (n < 1) throw InvalidInput("need at least one spin");
    const double nd = n;
    const double lg = std::lgamma(0.5 * (1.0 + nd));
    const double first = (2.0 + 3.0 * nd) * std::exp(lg - std::lgamma(2.0 + 0.5 * nd));
    const double second = (nd - 2.0) * nd * hyp2f1_at_minus_one(1.0, 2.0 - 0.5 * nd, 0.5 * (6.0 + nd)) *
                          std::exp(lg - std::lgamma(0.5 * (6.0 + nd)));
    const double s = tau - std::sin(tau);
    return 8.0 - 8.0 * std::cos(tau) + 2.0 * k * k * nd / std::sqrt(pi) * s * s * (first + second);
}

/// qfi_css at tau = 2 pi.
inline double qfi_css_2pi(double k, int n) {
    if (n < 1) throw InvalidInput("need at least one spin");
    const double nd = n;
    const double lg = std::lgamma(0.5 * (1.0 + nd));
    const double first = (2.0 + 3.0 * nd) * std::exp(lg - std::lgamma(2.0 + 0.5 * nd));
    const double second = (nd - 2.0) * nd * hyp2f1_at_minus_one(1.0, 2.0 - 0.5 * nd, 0.5 * (6.0 + nd)) *
                          std::exp(lg - std::lgamma(0.5 * (6.0 + nd)));
    return 8.0 * std::pow(pi, 1.5) * k * k * nd * (first + second);
}

/// d g / d g_bar for the scaled gravity, SI inputs.
inline double scaled_gravity_per_si(double omega, double mass, double xi) {
    return std::sqrt(mass / (2.0 * hbar * omega * omega * omega)) * std::cos(xi);
}

/// Delta g_bar = 1 / sqrt(nu (dg/dg_bar)^2 Q) with the GHZ full-system QFI.
/// Returns m/s^2.
inline double sensitivity(double omega, double mass, int n, double nu, double k, double tau, double xi) {
    if (!(omega > 0.0) || !(mass > 0.0) || !(nu > 0.0)) throw InvalidInput("omega, mass and nu must be positive");
    const double d = scaled_gravity_per_si(omega, mass, xi);
    return 1.0 / std::sqrt(nu * d * d * qfi_ghz(k, n, tau, xi));
}

}  // namespace gravsim::oracle
