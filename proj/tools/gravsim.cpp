// gravsim command line: figure data, single-point Fisher information, open
// system runs and SI sensitivity.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "gravsim/gravsim.hpp"

namespace {

using namespace gravsim;

constexpr int kExitInvalid = 2;
constexpr int kExitTolerance = 3;

void line(const std::string& key, double v) { std::printf("%s=%s\n", key.c_str(), fmt(v).c_str()); }

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw InvalidInput("cannot write " + p.string());
    f << text;
}

struct FigOptions {
    int id = 1;
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    bool no_timestamp = false;
    std::string format = "both";
};

int run_fig(const FigOptions& o) {
    SweepSpec spec;
    if (!o.config.empty()) spec.apply(parse_config_file(o.config));
    if (o.seed) spec.seed = *o.seed;
    const Dataset d = run_figure(o.id, spec);
    std::filesystem::create_directories(o.out);
    const std::string stem = "fig" + std::to_string(o.id);
    if (o.format != "json") write_file(std::filesystem::path(o.out) / (stem + ".csv"), to_csv(d, !o.no_timestamp));
    if (o.format != "csv") write_file(std::filesystem::path(o.out) / (stem + ".json"), to_json(d, !o.no_timestamp));
    std::printf("figure=%d rows=%zu out=%s\n", o.id, d.rows.size(), o.out.c_str());
    return 0;
}

struct QfiOptions {
    double k = 0.1;
    int n = 1;
    double tau = 2.0 * pi;
    double xi = 0.0;
    double alpha = 0.0;
    double g = 0.1;
    std::string state = "ghz";
    std::vector<std::string> channels{"qfi"};
    double lambda = 0.0;
    int n_max = -1;
};

void print_angles(const FisherResult& r) {
    if (r.angles) {
        line("theta", r.angles->theta);
        line("phi", r.angles->phi);
    }
    if (r.standard_angles) {
        line("standard_theta", r.standard_angles->theta);
        line("standard_phi", r.standard_angles->phi);
    }
    for (const auto& s : r.diagnostics) std::printf("# %s\n", s.c_str());
}

int run_qfi(const QfiOptions& o) {
    ProbeConfig c;
    c.n_spins = o.n;
    c.couplings = {o.k};
    c.g = o.g;
    c.xi = o.xi;
    c.alpha = o.alpha;
    if (o.state == "css") c.spins = Css{};
    else if (o.state != "ghz") throw InvalidInput("state must be ghz or css");
    const auto st = evolve(c, o.tau);
    const auto t = d_dg(st);
    for (const auto& ch : o.channels) {
        if (ch == "qfi") {
            line("qfi", qfi_pure(st, t).value);
        } else if (ch == "spin-qfi") {
            line("spin_qfi", qfi_mixed(spin_reduced_dm(st), spin_reduced_dm_derivative(st, t)).value);
        } else if (ch == "spin") {
            const auto r = optimize_spin_angles(st);
            line("cfi_spin", r.value);
            print_angles(r);
        } else if (ch == "homodyne" || ch == "heterodyne" || ch == "photocount") {
            QuadratureGrid grid;
            grid.lambda = o.lambda;
            const auto r = ch == "homodyne"     ? cfi_homodyne(st, grid)
                           : ch == "heterodyne" ? cfi_heterodyne(st, grid)
                                                : cfi_photocount(st, o.n_max);
            line("cfi_" + ch, r.value);
            line("cfi_" + ch + "_standard", r.standard_value);
            print_angles(r);
        } else {
            throw InvalidInput("unknown channel: " + ch);
        }
    }
    return 0;
}

struct LindbladOptions {
    double gamma_d = 1e-3, gamma = 1e-3, kappa = 1e-5, nth = 10.0;
    int n = 4;
    double k = 1.0, g = 0.1, tau = 2.0 * pi;
    int cutoff = 40;
};

int run_lindblad(const LindbladOptions& o) {
    LindbladParams p;
    p.gamma_d = o.gamma_d;
    p.gamma = o.gamma;
    p.kappa = o.kappa;
    p.n_th = o.nth;
    p.probe.n_spins = o.n;
    p.probe.couplings = {o.k};
    p.probe.g = o.g;
    p.cutoff = o.cutoff;
    p.tau_end = o.tau;
    const auto r = qfi_losses(p, o.g);
    line("qfi_losses", r.qfi.value);
    line("qfi_ideal", r.ideal);
    line("fraction", r.fraction);
    std::printf("cutoff=%d\nsteps=%zu\n", p.resolved_cutoff(), r.central.steps.size());
    line("trace_error", r.central.trace_error);
    line("min_eigenvalue", r.central.min_eigenvalue);
    return 0;
}

struct SenseOptions {
    double omega = 1e3, mass = 1e-12, nu = 1e3, k = 1.0;
    int n = 1;
};

int run_sense(const SenseOptions& o) {
    const double dg = oracle::sensitivity(o.omega, o.mass, o.n, o.nu, o.k, 2.0 * pi, 0.0);
    line("delta_g_bar", dg);
    line("log10_delta_g_bar", std::log10(dg));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gravsim: spin-mechanical gravimetry simulator"};
    app.require_subcommand(1);

    FigOptions fig;
    auto* cfig = app.add_subcommand("fig", "write figure data (CSV and JSON)");
    cfig->add_option("id", fig.id, "figure id")->required()->check(CLI::Range(1, 7));
    cfig->add_option("--config", fig.config, "flat key=value sweep file");
    cfig->add_option("--out", fig.out, "output directory");
    cfig->add_option("--seed", fig.seed, "Monte Carlo seed");
    cfig->add_flag("--no-timestamp", fig.no_timestamp, "omit the generated-at header line");
    cfig->add_option("--format", fig.format, "csv, json or both")->check(CLI::IsMember({"csv", "json", "both"}));

    QfiOptions qfi;
    auto* cqfi = app.add_subcommand("qfi", "Fisher information at one point");
    cqfi->set_config("--config");
    cqfi->add_option("--k", qfi.k, "coupling per spin");
    cqfi->add_option("--N", qfi.n, "number of spins")->check(CLI::PositiveNumber);
    cqfi->add_option("--tau", qfi.tau, "scaled time");
    cqfi->add_option("--xi", qfi.xi, "tilt angle");
    cqfi->add_option("--alpha", qfi.alpha, "initial coherent amplitude (real)");
    cqfi->add_option("--g", qfi.g, "scaled gravity");
    cqfi->add_option("--state", qfi.state, "ghz or css");
    cqfi->add_option("--channel", qfi.channels, "qfi, spin-qfi, spin, homodyne, heterodyne, photocount");
    cqfi->add_option("--lambda", qfi.lambda, "homodyne quadrature angle");
    cqfi->add_option("--n-max", qfi.n_max, "photocount cutoff (-1 for the heuristic)");

    LindbladOptions lb;
    auto* clb = app.add_subcommand("lindblad", "open-system QFI at tau");
    clb->set_config("--config");
    clb->add_option("--gamma-d", lb.gamma_d, "spin dephasing rate");
    clb->add_option("--gamma", lb.gamma, "spin relaxation rate");
    clb->add_option("--kappa", lb.kappa, "mechanical damping rate");
    clb->add_option("--nth", lb.nth, "bath occupation");
    clb->add_option("--N", lb.n, "number of spins")->check(CLI::PositiveNumber);
    clb->add_option("--k", lb.k, "coupling per spin");
    clb->add_option("--g", lb.g, "scaled gravity");
    clb->add_option("--tau", lb.tau, "final scaled time");
    clb->add_option("--cutoff", lb.cutoff, "Fock cutoff (-1 for the heuristic)");

    SenseOptions se;
    auto* cse = app.add_subcommand("sense", "SI sensitivity of the GHZ probe at tau = 2 pi");
    cse->set_config("--config");
    cse->add_option("--omega", se.omega, "mechanical frequency [rad/s]")->check(CLI::PositiveNumber);
    cse->add_option("--mass", se.mass, "oscillator mass [kg]")->check(CLI::PositiveNumber);
    cse->add_option("--N", se.n, "number of spins")->check(CLI::PositiveNumber);
    cse->add_option("--nu", se.nu, "repetitions")->check(CLI::PositiveNumber);
    cse->add_option("--k", se.k, "coupling per spin");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInvalid;
    }

    try {
        if (*cfig) return run_fig(fig);
        if (*cqfi) return run_qfi(qfi);
        if (*clb) return run_lindblad(lb);
        if (*cse) return run_sense(se);
    } catch (const InvalidInput& e) {
        std::fprintf(stderr, "invalid input: %s\n", e.what());
        return kExitInvalid;
    } catch (const DimensionMismatch& e) {
        std::fprintf(stderr, "invalid input: %s\n", e.what());
        return kExitInvalid;
    } catch (const Error& e) {
        std::fprintf(stderr, "tolerance failure: %s\n", e.what());
        return kExitTolerance;
    }
    return 0;
}
