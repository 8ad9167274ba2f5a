#pragma once

// Figure pipelines, Monte Carlo over coupling disorder, scaling fits, flat
// key=value configuration and CSV/JSON output.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "gravsim/fisher.hpp"
#include "gravsim/lindblad.hpp"
#include "gravsim/oracles.hpp"

namespace gravsim {

// ---------------------------------------------------------------- RNG

inline constexpr const char* kRngName = "splitmix64-counter";

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Uniform [0, 1) keyed by (seed, sample, index); independent of call order.
inline double counter_uniform(std::uint64_t seed, std::uint64_t sample, std::uint64_t index) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ sample);
    h = splitmix64(h ^ (index * 0xD1B54A32D192ED03ULL));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// ---------------------------------------------------------------- formatting

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string short_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

// ---------------------------------------------------------------- fits

struct ScalingFit {
    double exponent = 0.0;
    double prefactor = 0.0;
    double r2 = 0.0;
};

/// Least squares of log y = mu log x + log c.
inline ScalingFit scaling_fit(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3) throw InvalidInput("scaling fit needs at least three points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [x, y] : points) {
        if (!(x > 0.0) || !(y > 0.0)) throw InvalidInput("scaling fit needs positive values");
        const double lx = std::log(x), ly = std::log(y);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double n = static_cast<double>(points.size());
    const double den = n * sxx - sx * sx;
    if (den <= 1e-12 * n * sxx) throw InvalidInput("scaling fit needs distinct abscissae");
    ScalingFit f;
    f.exponent = (n * sxy - sx * sy) / den;
    const double b = (sy - f.exponent * sx) / n;
    f.prefactor = std::exp(b);
    double ss_res = 0, ss_tot = 0;
    const double mean = sy / n;
    for (const auto& [x, y] : points) {
        const double r = std::log(y) - (f.exponent * std::log(x) + b);
        ss_res += r * r;
        ss_tot += (std::log(y) - mean) * (std::log(y) - mean);
    }
    f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return f;
}

// ---------------------------------------------------------------- anisotropy

struct AnisotropyModel {
    double k = 1.0;
    double delta_k = 0.0;
    int n_spins = 1;
    int samples = 1000;
    std::uint64_t seed = 0;
};

struct MonteCarloResult {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation (n - 1)
    std::vector<double> values;
};

/// Full-system QFI of GHZ probes with k_i = k (1 + Delta k_i), Delta k_i
/// uniform on [-delta_k, delta_k]; each sample is evolved as two branches.
inline MonteCarloResult anisotropy_mc(const AnisotropyModel& m, double tau, double g = 0.1, double xi = 0.0,
                                      cplx alpha = 0.0) {
    if (m.delta_k < 0.0) throw InvalidInput("delta_k must be non-negative");
    if (m.samples < 1) throw InvalidInput("need at least one sample");
    if (m.n_spins < 2) throw InvalidInput("coupling disorder needs at least two spins");
    MonteCarloResult r;
    r.values.reserve(static_cast<std::size_t>(m.samples));
    for (int s = 0; s < m.samples; ++s) {
        ProbeConfig c;
        c.n_spins = m.n_spins;
        c.g = g;
        c.xi = xi;
        c.alpha = alpha;
        c.couplings.resize(static_cast<std::size_t>(m.n_spins));
        for (int i = 0; i < m.n_spins; ++i) {
            const double u = counter_uniform(m.seed, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(i));
            c.couplings[static_cast<std::size_t>(i)] = m.k * (1.0 + m.delta_k * (2.0 * u - 1.0));
        }
        const auto st = evolve(c, tau);
        r.values.push_back(qfi_pure(st, d_dg(st)).value);
    }
    double sum = 0.0;
    for (double v : r.values) sum += v;
    r.mean = sum / m.samples;
    double var = 0.0;
    for (double v : r.values) var += (v - r.mean) * (v - r.mean);
    r.std = m.samples > 1 ? std::sqrt(var / (m.samples - 1)) : 0.0;
    return r;
}

// ---------------------------------------------------------------- config

using KeyValues = std::map<std::string, std::string>;

/// Flat "key = value" text; '#' starts a comment.
inline KeyValues parse_config_text(const std::string& text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InvalidInput("config line " + std::to_string(lineno) + " has no '='");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw InvalidInput("config line " + std::to_string(lineno) + " has an empty key");
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

inline KeyValues parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InvalidInput("cannot read config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

namespace detail {

inline double to_double(const std::string& key, const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InvalidInput("config key " + key + ": not a number: " + s);
    }
}

inline std::vector<double> to_list(const std::string& key, const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) throw InvalidInput("config key " + key + ": empty list item");
        out.push_back(to_double(key, item.substr(b, e - b + 1)));
    }
    if (out.empty()) throw InvalidInput("config key " + key + ": empty list");
    return out;
}

inline std::vector<int> to_int_list(const std::string& key, const std::string& s) {
    std::vector<int> out;
    for (double v : to_list(key, s)) {
        if (v != std::floor(v) || v < 1) throw InvalidInput("config key " + key + ": expected positive integers");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

}  // namespace detail

/// Everything a figure run can be steered by. Defaults reproduce the
/// published panels at desk scale.
struct SweepSpec {
    int figure = 1;
    int tau_points = 601;
    int fig4_tau_points = 25;
    std::vector<double> kn_list{0.05, 0.5, 1.0, 2.0};
    std::vector<double> fig4_kn_list{0.01, 0.1, 2.0};
    std::vector<int> n_list{1, 2, 4, 8, 16};
    std::vector<double> scaling_taus{pi / 2, pi, 1.5 * pi, 2.0 * pi};
    double k = 0.1;
    double alpha = 0.0;
    double g = 0.1;
    double xi = 0.0;
    // homodyne
    double lambda = 0.0;
    bool lambda_sweep = false;
    // anisotropy
    std::uint64_t seed = 20240601;
    int samples = 1000;
    std::vector<double> delta_k_list{0.1, 0.3, 0.5};
    std::vector<int> mc_n_list{4, 8, 16, 32};
    double mc_k = 1.0;
    double mc_tau = 2.0 * pi;
    // open system
    std::vector<double> gamma_d_list{1e-4, 1e-3, 1e-2};
    std::vector<double> gamma_list{0.0, 1e-3};
    std::vector<int> loss_n_list{1, 2, 3, 4};
    double loss_gamma_d = 1e-3;
    double loss_k = 1.0;
    double kappa = 1e-5;
    double n_th = 10.0;
    int lindblad_cutoff = 40;
    // vicinity comparison
    std::vector<double> vicinity_k_list{0.1, 0.5};
    std::vector<double> vicinity_tau_fractions{0.99, 0.95};
    int vicinity_n_max = 30;
    // sensitivity map
    double log_omega_min = 3.0, log_omega_max = 8.0;
    int omega_points = 51;
    double log_mass_min = -18.0, log_mass_max = -6.0;
    int mass_points = 61;
    std::vector<int> sense_n_list{3, 10, 100};
    double nu = 1e3;
    double sense_k = 1.0;
    unsigned workers = 0;  // 0: hardware concurrency

    void validate() const {
        if (figure < 1 || figure > 7) throw InvalidInput("figure id must be 1..7");
        if (tau_points < 2 || fig4_tau_points < 2) throw InvalidInput("tau grids need at least two points");
        if (samples < 2) throw InvalidInput("Monte Carlo needs at least two samples");
        if (omega_points < 1 || mass_points < 1) throw InvalidInput("sensitivity grid is empty");
        if (lindblad_cutoff < -1) throw InvalidInput("lindblad_cutoff must be >= -1");
        if (!(nu > 0.0)) throw InvalidInput("nu must be positive");
    }

    /// Apply config keys; unknown keys are an error.
    void apply(const KeyValues& kv) {
        for (const auto& [key, v] : kv) {
            using namespace detail;
            if (key == "figure") figure = static_cast<int>(to_double(key, v));
            else if (key == "tau_points") tau_points = static_cast<int>(to_double(key, v));
            else if (key == "fig4_tau_points") fig4_tau_points = static_cast<int>(to_double(key, v));
            else if (key == "kn_list") kn_list = to_list(key, v);
            else if (key == "fig4_kn_list") fig4_kn_list = to_list(key, v);
            else if (key == "n_list") n_list = to_int_list(key, v);
            else if (key == "scaling_taus") scaling_taus = to_list(key, v);
            else if (key == "k") k = to_double(key, v);
            else if (key == "alpha") alpha = to_double(key, v);
            else if (key == "g") g = to_double(key, v);
            else if (key == "xi") xi = to_double(key, v);
            else if (key == "lambda") lambda = to_double(key, v);
            else if (key == "lambda_sweep") lambda_sweep = to_double(key, v) != 0.0;
            else if (key == "seed") {
                try {
                    seed = std::stoull(v);
                } catch (const std::exception&) {
                    throw InvalidInput("config key seed: not an unsigned integer: " + v);
                }
            } else if (key == "samples") samples = static_cast<int>(to_double(key, v));
            else if (key == "delta_k_list") delta_k_list = to_list(key, v);
            else if (key == "mc_n_list") mc_n_list = to_int_list(key, v);
            else if (key == "mc_k") mc_k = to_double(key, v);
            else if (key == "mc_tau") mc_tau = to_double(key, v);
            else if (key == "gamma_d_list") gamma_d_list = to_list(key, v);
            else if (key == "gamma_list") gamma_list = to_list(key, v);
            else if (key == "loss_n_list") loss_n_list = to_int_list(key, v);
            else if (key == "loss_gamma_d") loss_gamma_d = to_double(key, v);
            else if (key == "loss_k") loss_k = to_double(key, v);
            else if (key == "kappa") kappa = to_double(key, v);
            else if (key == "n_th") n_th = to_double(key, v);
            else if (key == "lindblad_cutoff") lindblad_cutoff = static_cast<int>(to_double(key, v));
            else if (key == "vicinity_k_list") vicinity_k_list = to_list(key, v);
            else if (key == "vicinity_tau_fractions") vicinity_tau_fractions = to_list(key, v);
            else if (key == "vicinity_n_max") vicinity_n_max = static_cast<int>(to_double(key, v));
            else if (key == "log_omega_min") log_omega_min = to_double(key, v);
            else if (key == "log_omega_max") log_omega_max = to_double(key, v);
            else if (key == "omega_points") omega_points = static_cast<int>(to_double(key, v));
            else if (key == "log_mass_min") log_mass_min = to_double(key, v);
            else if (key == "log_mass_max") log_mass_max = to_double(key, v);
            else if (key == "mass_points") mass_points = static_cast<int>(to_double(key, v));
            else if (key == "sense_n_list") sense_n_list = to_int_list(key, v);
            else if (key == "nu") nu = to_double(key, v);
            else if (key == "sense_k") sense_k = to_double(key, v);
            else if (key == "workers") workers = static_cast<unsigned>(to_double(key, v));
            else throw InvalidInput("unknown config key: " + key);
        }
    }
};

// ---------------------------------------------------------------- datasets

struct Row {
    std::string series;
    double x = 0.0;
    double x2 = std::numeric_limits<double>::quiet_NaN();  // second coordinate (maps only)
    double y = 0.0;
    std::string params;  // key=value;... enough to recompute the point
};

struct Dataset {
    int figure = 0;
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<Row> rows;
};

inline std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return v;
}


using RowTask = std::function<std::vector<Row>()>;

/// Runs tasks on a bounded pool; output order is the task order.
inline std::vector<Row> run_tasks(const std::vector<RowTask>& tasks, unsigned workers = 0) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, tasks.size())));
    std::vector<std::vector<Row>> out(tasks.size());
    std::vector<std::exception_ptr> errors(tasks.size());
    std::size_t next = 0;
    std::mutex m;
    auto worker = [&] {
        for (;;) {
            std::size_t i;
            {
                std::lock_guard<std::mutex> lock(m);
                if (next >= tasks.size()) return;
                i = next++;
            }
            try {
                out[i] = tasks[i]();
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::vector<Row> rows;
    for (auto& v : out) rows.insert(rows.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
    return rows;
}

namespace detail {

inline ProbeConfig ghz_config(double kn, int n, const SweepSpec& s) {
    ProbeConfig c;
    c.n_spins = n;
    c.couplings = {kn / n};
    c.g = s.g;
    c.xi = s.xi;
    c.alpha = s.alpha;
    return c;
}

inline std::string probe_params(const ProbeConfig& c, double tau) {
    return "k=" + fmt(c.couplings.front()) + ";N=" + std::to_string(c.n_spins) + ";tau=" + fmt(tau) +
           ";alpha=" + fmt(std::real(c.alpha)) + ";g=" + fmt(c.g) + ";xi=" + fmt(c.xi);
}

inline double q_spin_numeric(const BranchedState& st) {
    return qfi_mixed(spin_reduced_dm(st), spin_reduced_dm_derivative(st, d_dg(st))).value;
}

inline void common_meta(Dataset& d, const SweepSpec& s) {
    d.meta.push_back({"alpha", fmt(s.alpha)});
    d.meta.push_back({"g", fmt(s.g)});
    d.meta.push_back({"xi", fmt(s.xi)});
    d.meta.push_back({"qfi_pure", "branch closed form"});
    d.meta.push_back({"qfi_mixed_threshold", "1e-12"});
}

inline Dataset figure1(const SweepSpec& s) {
    Dataset d{1, {}, {}};
    common_meta(d, s);
    d.meta.push_back({"n_spins", "1 for time traces"});
    std::vector<RowTask> tasks;
    for (double kn : s.kn_list)
        for (double tau : linspace(0.0, 2.0 * pi, s.tau_points))
            tasks.push_back([=] {
                const auto c = ghz_config(kn, 1, s);
                const auto st = evolve(c, tau);
                return std::vector<Row>{
                    {"Q_sm kN=" + short_num(kn), tau, NAN, qfi_pure(st, d_dg(st)).value, probe_params(c, tau)},
                    {"Q_spin kN=" + short_num(kn), tau, NAN, q_spin_numeric(st), probe_params(c, tau)}};
            });
    for (double tau : s.scaling_taus)
        for (int n : s.n_list)
            tasks.push_back([=] {
                const auto c = ghz_config(s.k * n, n, s);
                const auto st = evolve(c, tau);
                const double x = s.k * n * s.k * n;
                return std::vector<Row>{
                    {"Q_sm tau=" + short_num(tau), x, NAN, qfi_pure(st, d_dg(st)).value, probe_params(c, tau)},
                    {"Q_spin tau=" + short_num(tau), x, NAN, q_spin_numeric(st), probe_params(c, tau)}};
            });
    d.rows = run_tasks(tasks, s.workers);
    return d;
}

inline Dataset figure2(const SweepSpec& s) {
    Dataset d{2, {}, {}};
    common_meta(d, s);
    d.meta.push_back({"linear_entropy", "1 - field purity from branch overlaps"});
    std::vector<RowTask> tasks;
    for (double kn : s.kn_list)
        for (double tau : linspace(0.0, 2.0 * pi, s.tau_points))
            tasks.push_back([=] {
                const auto c = ghz_config(kn, 1, s);
                const auto st = evolve(c, tau);
                return std::vector<Row>{
                    {"S_L kN=" + short_num(kn), tau, NAN, 1.0 - field_purity(st), probe_params(c, tau)}};
            });
    d.rows = run_tasks(tasks, s.workers);
    return d;
}

inline Dataset figure3(const SweepSpec& s) {
    Dataset d{3, {}, {}};
    common_meta(d, s);
    d.meta.push_back({"angle_search", "61x181 grid, 181-point phi scan, golden section 1e-8"});
    std::vector<RowTask> tasks;
    for (double kn : s.kn_list)
        for (double tau : linspace(0.0, 2.0 * pi, s.tau_points))
            tasks.push_back([=] {
                const auto c = ghz_config(kn, 1, s);
                const auto st = evolve(c, tau);
                const double q_sm = qfi_pure(st, d_dg(st)).value;
                const auto f = optimize_spin_angles(st);
                const std::string p =
                    probe_params(c, tau) + ";Theta=" + fmt(f.angles->theta) + ";Phi=" + fmt(f.angles->phi);
                return std::vector<Row>{{"Q_spin kN=" + short_num(kn), tau, NAN, q_spin_numeric(st), p},
                                        {"F_spin kN=" + short_num(kn), tau, NAN, f.value, p},
                                        {"ratio kN=" + short_num(kn), tau, NAN, q_sm > 0.0 ? f.value / q_sm : 0.0, p}};
            });
    d.rows = run_tasks(tasks, s.workers);
    return d;
}

inline Dataset figure4(const SweepSpec& s) {
    Dataset d{4, {}, {}};
    common_meta(d, s);
    QuadratureGrid grid;
    grid.lambda = s.lambda;
    grid.lambda_sweep = s.lambda_sweep;
    d.meta.push_back({"homodyne", "2001-point trapezoid, half-width sqrt(2) max|phi| + 6, lambda=" + fmt(s.lambda) +
                                      (s.lambda_sweep ? " (swept)" : "")});
    d.meta.push_back({"heterodyne", "201x201 midpoint, half-width max|phi| + 5"});
    d.meta.push_back({"photocount", "n_max = Fock cutoff heuristic"});
    d.meta.push_back({"joint_angle_search", "13x37 grid, 181-point phi scan, golden section 1e-8"});
    d.meta.push_back({"literal", "sum over Upsilon of (dp)^2 / (p(1-p))"});
    d.meta.push_back({"standard", "sum over both spin outcomes of (dp)^2 / p"});
    std::vector<RowTask> tasks;
    for (double kn : s.fig4_kn_list)
        for (double tau : linspace(0.0, 2.0 * pi, s.fig4_tau_points))
            tasks.push_back([=] {
                const auto c = ghz_config(kn, 1, s);
                const auto st = evolve(c, tau);
                const std::string p = probe_params(c, tau);
                const std::string tag = " kN=" + short_num(kn);
                const auto hom = cfi_homodyne(st, grid);
                const auto het = cfi_heterodyne(st, grid);
                const auto pho = cfi_photocount(st);
                const std::string ph = p + ";lambda=" + fmt(hom.numerics.lambda) +
                                       ";x_points=" + std::to_string(grid.x_points) +
                                       ";x_half_width=" + fmt(hom.numerics.grid_half_width);
                const std::string pe = p + ";het_points=" + std::to_string(grid.het_points) +
                                       ";het_half_width=" + fmt(het.numerics.grid_half_width);
                const std::string pp = p + ";n_max=" + std::to_string(pho.numerics.n_max);
                return std::vector<Row>{{"Q_sm" + tag, tau, NAN, qfi_pure(st, d_dg(st)).value, p},
                                        {"F_spin" + tag, tau, NAN, optimize_spin_angles(st).value, p},
                                        {"F_hom" + tag, tau, NAN, hom.value, ph},
                                        {"F_hom_std" + tag, tau, NAN, hom.standard_value, ph},
                                        {"F_het" + tag, tau, NAN, het.value, pe},
                                        {"F_het_std" + tag, tau, NAN, het.standard_value, pe},
                                        {"F_pho" + tag, tau, NAN, pho.value, pp},
                                        {"F_pho_std" + tag, tau, NAN, pho.standard_value, pp}};
            });
    d.rows = run_tasks(tasks, s.workers);
    return d;
}

inline LindbladParams loss_params(const SweepSpec& s, int n, double gamma_d, double gamma) {
    LindbladParams p;
    p.gamma_d = gamma_d;
    p.gamma = gamma;
    p.kappa = s.kappa;
    p.n_th = s.n_th;
    p.probe.n_spins = n;
    p.probe.couplings = {s.loss_k};
    p.probe.g = s.g;
    p.probe.xi = s.xi;
    p.probe.alpha = s.alpha;
    p.cutoff = s.lindblad_cutoff;
    return p;
}

inline std::string loss_tag(const LindbladParams& p) {
    return "gamma_d=" + fmt(p.gamma_d) + ";gamma=" + fmt(p.gamma) + ";kappa=" + fmt(p.kappa) + ";n_th=" +
           fmt(p.n_th) + ";N=" + std::to_string(p.probe.n_spins) + ";k=" + fmt(p.probe.couplings.front()) +
           ";g=" + fmt(p.probe.g) + ";alpha=" + fmt(std::real(p.probe.alpha)) +
           ";cutoff=" + std::to_string(p.resolved_cutoff()) + ";h=1e-4";
}

inline Dataset figure5(const SweepSpec& s) {
    Dataset d{5, {}, {}};
    common_meta(d, s);
    d.meta.push_back({"rng", kRngName});
    d.meta.push_back({"seed", std::to_string(s.seed)});
    d.meta.push_back({"samples", std::to_string(s.samples)});
    d.meta.push_back({"mc_k", fmt(s.mc_k)});
    d.meta.push_back({"mc_tau", fmt(s.mc_tau)});
    d.meta.push_back({"integrator", "RK4, step doubling, local error 1e-11, schedule shared across g offsets"});
    d.meta.push_back({"fd", "central difference h=1e-4 with Richardson (2h) extrapolation"});
    std::vector<RowTask> tasks;
    for (double dk : s.delta_k_list)
        for (int n : s.mc_n_list)
            tasks.push_back([=] {
                const AnisotropyModel m{s.mc_k, dk, n, s.samples, s.seed};
                const auto r = anisotropy_mc(m, s.mc_tau, s.g, s.xi, s.alpha);
                const std::string p = "k=" + fmt(s.mc_k) + ";N=" + std::to_string(n) + ";delta_k=" + fmt(dk) +
                                      ";tau=" + fmt(s.mc_tau) + ";samples=" + std::to_string(s.samples) +
                                      ";seed=" + std::to_string(s.seed);
                return std::vector<Row>{{"mean dk=" + short_num(dk), static_cast<double>(n), NAN, r.mean, p},
                                        {"std/mean dk=" + short_num(dk), static_cast<double>(n), NAN, r.std / r.mean, p}};
            });
    for (double gamma : s.gamma_list)
        for (double gd : s.gamma_d_list)
            tasks.push_back([=] {
                const auto p = loss_params(s, 4, gd, gamma);
                const auto r = qfi_losses(p, s.g);
                return std::vector<Row>{{"Q_losses gamma=" + short_num(gamma), gd, NAN, r.qfi.value, loss_tag(p)},
                                        {"Q_sm gamma=" + short_num(gamma), gd, NAN, r.ideal, loss_tag(p)}};
            });
    for (double gamma : s.gamma_list)
        for (int n : s.loss_n_list)
            tasks.push_back([=] {
                const auto p = loss_params(s, n, s.loss_gamma_d, gamma);
                const auto r = qfi_losses(p, s.g);
                return std::vector<Row>{
                    {"fraction gamma=" + short_num(gamma), static_cast<double>(n), NAN, r.fraction, loss_tag(p)}};
            });
    d.rows = run_tasks(tasks, s.workers);
    return d;
}

inline Dataset figure6(const SweepSpec& s) {
    Dataset d{6, {}, {}};
    common_meta(d, s);
    d.meta.push_back({"quantity", "spin-subsystem QFI from the branch Gram matrix"});
    std::vector<RowTask> tasks;
    for (double k : s.vicinity_k_list)
        for (double frac : s.vicinity_tau_fractions)
            for (int css = 0; css < 2; ++css)
                for (int n = 1; n <= s.vicinity_n_max; ++n)
                    tasks.push_back([=] {
                        const double tau = frac * 2.0 * pi;
                        ProbeConfig c = ghz_config(k * n, n, s);
                        if (css) c.spins = Css{};
                        const auto st = evolve(c, tau);
                        const std::string series = std::string(css ? "CSS" : "GHZ") + " k=" + short_num(k) +
                                                   " tau=" + short_num(frac) + "x2pi";
                        return std::vector<Row>{
                            {series, static_cast<double>(n), NAN, q_spin_numeric(st), probe_params(c, tau)}};
                    });
    d.rows = run_tasks(tasks, s.workers);
    return d;
}

inline Dataset figure7(const SweepSpec& s) {
    Dataset d{7, {}, {}};
    d.meta.push_back({"hbar", fmt(oracle::hbar)});
    d.meta.push_back({"nu", fmt(s.nu)});
    d.meta.push_back({"k", fmt(s.sense_k)});
    d.meta.push_back({"tau", "2pi"});
    d.meta.push_back({"xi", "0"});
    d.meta.push_back({"x", "log10 omega [rad/s]"});
    d.meta.push_back({"x2", "log10 M [kg]"});
    d.meta.push_back({"y", "log10 Delta g_bar [m/s^2]"});
    for (int n : s.sense_n_list)
        for (double lw : linspace(s.log_omega_min, s.log_omega_max, s.omega_points))
            for (double lm : linspace(s.log_mass_min, s.log_mass_max, s.mass_points)) {
                const double dg = oracle::sensitivity(std::pow(10.0, lw), std::pow(10.0, lm), n, s.nu, s.sense_k,
                                                      2.0 * pi, 0.0);
                d.rows.push_back({"N=" + std::to_string(n), lw, lm, std::log10(dg),
                                  "N=" + std::to_string(n) + ";nu=" + fmt(s.nu) + ";k=" + fmt(s.sense_k)});
            }
    return d;
}

}  // namespace detail

inline Dataset run_figure(int id, SweepSpec spec) {
    spec.figure = id;
    spec.validate();
    switch (id) {
        case 1: return detail::figure1(spec);
        case 2: return detail::figure2(spec);
        case 3: return detail::figure3(spec);
        case 4: return detail::figure4(spec);
        case 5: return detail::figure5(spec);
        case 6: return detail::figure6(spec);
        case 7: return detail::figure7(spec);
        default: throw InvalidInput("figure id must be 1..7");
    }
}

/// Grid of figure 7 only.
inline Dataset sensitivity_map(const SweepSpec& spec) { return detail::figure7(spec); }

// ---------------------------------------------------------------- output

inline std::string timestamp_utc() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string to_csv(const Dataset& d, bool with_timestamp) {
    std::ostringstream out;
    out << "# gravsim figure " << d.figure << "\n";
    if (with_timestamp) out << "# generated " << timestamp_utc() << "\n";
    for (const auto& [k, v] : d.meta) out << "# " << k << ": " << v << "\n";
    out << "figure,series,x,x2,y,params\n";
    for (const auto& r : d.rows) {
        out << d.figure << ',' << r.series << ',' << fmt(r.x) << ',' << (std::isnan(r.x2) ? "" : fmt(r.x2)) << ','
            << fmt(r.y) << ',' << r.params << "\n";
    }
    return out.str();
}

inline std::string to_json(const Dataset& d, bool with_timestamp) {
    nlohmann::ordered_json j;
    j["figure"] = d.figure;
    if (with_timestamp) j["generated"] = timestamp_utc();
    nlohmann::ordered_json meta = nlohmann::ordered_json::object();
    for (const auto& [k, v] : d.meta) meta[k] = v;
    j["meta"] = meta;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : d.rows) {
        nlohmann::ordered_json o;
        o["series"] = r.series;
        o["x"] = r.x;
        if (!std::isnan(r.x2)) o["x2"] = r.x2;
        o["y"] = r.y;
        o["params"] = r.params;
        rows.push_back(std::move(o));
    }
    j["rows"] = rows;
    return j.dump(1) + "\n";
}

}  // namespace gravsim
