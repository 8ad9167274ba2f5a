#pragma once

// Collective Lindblad dynamics on Dicke (x) truncated Fock space:
//
//   d rho/d tau = -i[H, rho] + gamma_d D[S_z] + gamma D[S_-]
//                 + kappa n_th D[a^dag] + kappa (n_th + 1) D[a]
//
// with D[L] rho = L rho L^dag - {L^dag L, rho}/2 and H the scaled probe
// Hamiltonian. Every operator involved is diagonal or a single shift in one
// of the two factors, so the generator is applied block by block with row and
// column shifts instead of dense products.

#include <cmath>
#include <future>
#include <vector>

#include "gravsim/branch.hpp"
#include "gravsim/fisher.hpp"
#include "gravsim/oracles.hpp"

namespace gravsim {

struct IntegratorControls {
    double dt = 0.01;           // initial step
    double tolerance = 1e-11;   // local error per step (max-norm)
    double dt_min = 1e-8;
    bool adaptive = true;
};

struct LindbladParams {
    double gamma_d = 0.0;
    double gamma = 0.0;
    double kappa = 0.0;
    double n_th = 0.0;
    ProbeConfig probe{};       // isotropic couplings, Dicke-resolvable spins
    int cutoff = -1;           // negative: heuristic over one period
    double tau_end = 2.0 * pi;
    IntegratorControls integrator{};

    void validate() const {
        if (gamma_d < 0 || gamma < 0 || kappa < 0 || n_th < 0) throw InvalidInput("rates must be non-negative");
        if (!probe.isotropic()) throw InvalidInput("collective master equation needs isotropic couplings");
        probe.validate();
        if (!(tau_end >= 0.0)) throw InvalidInput("end time must be non-negative");
        if (!(integrator.dt > 0.0) || !(integrator.tolerance > 0.0)) throw InvalidInput("bad integrator controls");
    }

    /// Fock cutoff: heuristic for the largest displacement reached over a
    /// period, inflated by 4 sqrt(n_th).
    int resolved_cutoff() const {
        if (cutoff >= 0) return cutoff;
        const double zmax = 0.5 * std::abs(probe.couplings.front()) * probe.n_spins + std::abs(probe.g_eff());
        return fock_cutoff_for(std::abs(probe.alpha) + 2.0 * zmax) + static_cast<int>(std::ceil(4.0 * std::sqrt(n_th)));
    }
};

class LindbladGenerator {
public:
    explicit LindbladGenerator(const LindbladParams& p) : p_(p) {
        p_.validate();
        const DickeSpace spin(p.probe.n_spins);
        ds_ = spin.dim();
        fd_ = p_.resolved_cutoff() + 1;
        for (int i = 0; i < ds_; ++i) {
            m_.push_back(spin.m(i));
            z_.push_back(z_eigenvalue(SpinLabel::dicke(spin.twice_m(i)), p.probe));
            c_.push_back(lowering_factor(spin.s(), spin.m(i)));
        }
        const int F = fd_ - 1;
        s_ = Eigen::VectorXd(F);
        for (int n = 1; n <= F; ++n) s_(n - 1) = std::sqrt(static_cast<double>(n));
        ss_ = s_ * s_.transpose();
        // Fock-diagonal field dissipation: -kappa n_th (aa^dag_p + aa^dag_q)/2
        // with aa^dag truncated to 0 on the top level, and -kappa (n_th+1)(p+q)/2.
        const double kn = p_.kappa * p_.n_th;
        const double kn1 = p_.kappa * (p_.n_th + 1.0);
        diag_ = Eigen::MatrixXd(fd_, fd_);
        n_row_ = Eigen::MatrixXd(fd_, fd_);
        n_col_ = Eigen::MatrixXd(fd_, fd_);
        for (int q = 0; q < fd_; ++q)
            for (int pp = 0; pp < fd_; ++pp) {
                const double aap = pp < F ? pp + 1.0 : 0.0;
                const double aaq = q < F ? q + 1.0 : 0.0;
                diag_(pp, q) = -0.5 * kn * (aap + aaq) - 0.5 * kn1 * (pp + q);
                n_row_(pp, q) = pp;
                n_col_(pp, q) = q;
            }
    }

    int spin_dim() const noexcept { return ds_; }
    int fock_dim() const noexcept { return fd_; }
    int dim() const noexcept { return ds_ * fd_; }
    const LindbladParams& params() const noexcept { return p_; }

    /// L(rho) for rho in spin-major ordering.
    CMatrix apply(const CMatrix& rho) const {
        if (rho.rows() != dim() || rho.cols() != dim()) throw DimensionMismatch("density matrix size mismatch");
        CMatrix out(dim(), dim());
        const int F = fd_ - 1;
        const double kn = p_.kappa * p_.n_th;
        const double kn1 = p_.kappa * (p_.n_th + 1.0);
        CMatrix shifted(fd_, fd_);
        for (int i = 0; i < ds_; ++i)
            for (int j = 0; j < ds_; ++j) {
                const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
                const double dm = m_[ui] - m_[uj];
                const double diag_spin =
                    -0.5 * p_.gamma_d * dm * dm - 0.5 * p_.gamma * (c_[ui] * c_[ui] + c_[uj] * c_[uj]);
                const auto x = rho.block(static_cast<long>(i) * fd_, static_cast<long>(j) * fd_, fd_, fd_);
                auto o = out.block(static_cast<long>(i) * fd_, static_cast<long>(j) * fd_, fd_, fd_);

                // -i (n x - x n) plus every term diagonal in the Fock indices
                o = x.array() * (diag_.array() - I * (n_row_.array() - n_col_.array()));
                if (F == 0) continue;
                // (a + a^dag) x, shifted rows
                shifted.setZero();
                shifted.topRows(F) = (s_.asDiagonal() * x.bottomRows(F)).eval();
                shifted.bottomRows(F) += s_.asDiagonal() * x.topRows(F);
                o += (I * z_[ui]) * shifted;
                // x (a + a^dag), shifted columns
                shifted.setZero();
                shifted.rightCols(F) = (x.leftCols(F) * s_.asDiagonal()).eval();
                shifted.leftCols(F) += x.rightCols(F) * s_.asDiagonal();
                o -= (I * z_[uj]) * shifted;
                o.array() += diag_spin * x.array();
                if (p_.kappa > 0.0) {
                    o.block(1, 1, F, F).array() += kn * ss_.array() * x.block(0, 0, F, F).array();
                    o.block(0, 0, F, F).array() += kn1 * ss_.array() * x.block(1, 1, F, F).array();
                }
                if (p_.gamma > 0.0 && i + 1 < ds_ && j + 1 < ds_) {
                    o += (p_.gamma * c_[ui + 1] * c_[uj + 1]) *
                         rho.block(static_cast<long>(i + 1) * fd_, static_cast<long>(j + 1) * fd_, fd_, fd_);
                }
            }
        return out;
    }

private:
    LindbladParams p_;
    int ds_ = 0, fd_ = 0;
    std::vector<double> m_, z_, c_;
    Eigen::VectorXd s_;
    Eigen::MatrixXd ss_, diag_, n_row_, n_col_;
};

/// Convenience wrapper matching the generator construction step.
inline LindbladGenerator build_generator(const LindbladParams& params) { return LindbladGenerator(params); }

struct IntegrationResult {
    DensityMatrix rho;
    std::vector<double> steps;   // accepted step sizes
    double max_local_error = 0.0;
    double trace_error = 0.0;
    double min_eigenvalue = 0.0;
};

namespace detail {

inline CMatrix rk4_step(const LindbladGenerator& L, const CMatrix& r, double h) {
    const CMatrix k1 = L.apply(r);
    const CMatrix k2 = L.apply(r + 0.5 * h * k1);
    const CMatrix k3 = L.apply(r + 0.5 * h * k2);
    const CMatrix k4 = L.apply(r + h * k3);
    return r + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline void symmetrize(CMatrix& r) { r = (0.5 * (r + r.adjoint())).eval(); }

}  // namespace detail

/// RK4 with step-doubling error control. If `schedule` is given those step
/// sizes are replayed with plain RK4 steps and no error estimate.
inline IntegrationResult integrate(const DensityMatrix& rho0, const LindbladParams& params, double tau_end,
                                   const std::vector<double>* schedule = nullptr) {
    const LindbladGenerator L(params);
    if (rho0.dim() != L.dim()) throw DimensionMismatch("initial state does not match the generator space");
    rho0.validate(1e-8);
    const auto& ctl = params.integrator;
    IntegrationResult res;
    CMatrix r = rho0.matrix;
    double t = 0.0;
    double h = std::min(ctl.dt, tau_end);

    auto take = [&](double step) {
        const CMatrix full = detail::rk4_step(L, r, step);
        const CMatrix half = detail::rk4_step(L, detail::rk4_step(L, r, 0.5 * step), 0.5 * step);
        const double err = (half - full).cwiseAbs().maxCoeff() / 15.0;
        return std::pair<CMatrix, double>{half, err};
    };

    if (schedule) {
        for (double step : *schedule) {
            r = detail::rk4_step(L, r, step);
            detail::symmetrize(r);
            res.steps.push_back(step);
            t += step;
        }
        if (std::abs(t - tau_end) > 1e-9) throw InvalidInput("step schedule does not reach the end time");
    } else {
        while (t < tau_end - 1e-14) {
            h = std::min(h, tau_end - t);
            auto [next, err] = take(h);
            if (ctl.adaptive && err > ctl.tolerance) {
                h *= std::max(0.2, 0.9 * std::pow(ctl.tolerance / err, 0.2));
                if (h < ctl.dt_min) throw ConvergenceError("integrator step fell below the minimum");
                continue;
            }
            r = std::move(next);
            detail::symmetrize(r);
            t += h;
            res.steps.push_back(h);
            res.max_local_error = std::max(res.max_local_error, err);
            if (ctl.adaptive) h *= std::min(2.0, std::max(1.0, 0.9 * std::pow(ctl.tolerance / std::max(err, 1e-300), 0.2)));
        }
    }
    res.rho = DensityMatrix(r, {L.spin_dim(), L.fock_dim()});
    res.trace_error = std::abs(res.rho.trace() - 1.0);
    res.min_eigenvalue = res.rho.min_eigenvalue();
    return res;
}

/// Initial pure state (spins (x) coherent field) in the generator's space.
inline DensityMatrix initial_density(const LindbladParams& params) {
    params.validate();
    const auto s = evolve(params.probe, 0.0);
    if (s.product_labels()) throw InvalidInput("collective master equation needs Dicke labels");
    const auto dense = to_dense(s, FockSpace(params.resolved_cutoff()));
    return DensityMatrix::pure(dense.amplitudes, dense.dims());
}

struct LossesResult {
    FisherResult qfi;
    double ideal = 0.0;      // lossless GHZ value at tau_end
    double fraction = 0.0;   // qfi / ideal
    IntegrationResult central;
};

/// Mixed-state QFI of rho(tau_end) with d rho/dg from integrations at
/// g0 +- h (and g0 +- 2h for Richardson). All runs share the step schedule
/// chosen adaptively at g0, so the difference quotient sees no step noise.
inline LossesResult qfi_losses(LindbladParams params, double g0, double h = 1e-4, bool richardson = true) {
    params.probe.g = g0;
    params.validate();
    const DensityMatrix rho0 = initial_density(params);
    LossesResult out;
    out.central = integrate(rho0, params, params.tau_end);
    const auto schedule = out.central.steps;

    auto run = [&](double g) {
        LindbladParams q = params;
        q.probe.g = g;
        return integrate(initial_density(q), q, q.tau_end, &schedule).rho.matrix;
    };
    std::vector<double> offsets{h, -h};
    if (richardson) {
        offsets.push_back(2.0 * h);
        offsets.push_back(-2.0 * h);
    }
    std::vector<std::future<CMatrix>> jobs;
    for (double d : offsets) jobs.push_back(std::async(std::launch::async, run, g0 + d));
    std::vector<CMatrix> r;
    for (auto& j : jobs) r.push_back(j.get());

    CMatrix drho = (r[0] - r[1]) / (2.0 * h);
    if (richardson) drho = (4.0 * drho - (r[2] - r[3]) / (4.0 * h)) / 3.0;

    out.qfi = qfi_mixed(out.central.rho, drho);
    out.qfi.numerics.fd_step = h;
    out.qfi.numerics.cutoff = params.resolved_cutoff();
    if (out.central.trace_error > 1e-8) out.qfi.diagnostics.push_back("trace drift above 1e-8");
    if (out.central.min_eigenvalue < -1e-8) out.qfi.diagnostics.push_back("negative eigenvalue below -1e-8");
    out.ideal = oracle::qfi_ghz(params.probe.couplings.front(), params.probe.n_spins, params.tau_end, params.probe.xi);
    out.fraction = out.ideal > 0.0 ? out.qfi.value / out.ideal : 0.0;
    return out;
}

}  // namespace gravsim
