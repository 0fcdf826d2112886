#include <gardner/cli.hpp>
#include <gardner/parallel.hpp>
#include <gardner/qsim.hpp>
#include <gardner/specfun.hpp>
#include <CLI11.hpp>
#include <Eigen/Core>
#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace gardner {
namespace cli {

namespace {

constexpr const char* version = "0.1.0";

std::string trim(const std::string& s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& text, char sep)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep)) out.push_back(trim(item));
    if (!text.empty() && text.back() == sep) out.emplace_back();
    return out;
}

double to_real(const std::string& s)
{
    double x = 0.0;
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, x);
    if (s.empty() || res.ec != std::errc() || res.ptr != end || !std::isfinite(x))
        throw usage_error("not a finite number: '" + s + "'");
    return x;
}

class Csv
{
public:
    Csv(std::ostream& out, std::initializer_list<const char*> header) : _out(out), _width(header.size())
    {
        bool first = true;
        for (const char* h : header) {
            _out << (first ? "" : ",") << h;
            first = false;
        }
        _out << '\n';
    }

    Csv& cell(double x) { return put(format_real(x)); }
    Csv& cell(int x) { return put(std::to_string(x)); }
    Csv& cell(long long x) { return put(std::to_string(x)); }
    Csv& cell(const std::string& s) { return put(s); }
    Csv& cell(const char* s) { return put(s); }
    Csv& cell(std::optional<double> x) { return x ? cell(*x) : put(not_applicable); }

    void end()
    {
        if (_col != _width) throw std::logic_error("csv row width mismatch");
        _out << '\n';
        _col = 0;
    }

private:
    Csv& put(const std::string& s)
    {
        _out << (_col == 0 ? "" : ",") << s;
        ++_col;
        return *this;
    }

    std::ostream& _out;
    std::size_t _width;
    std::size_t _col = 0;
};

void require(bool ok, const std::string& what)
{
    if (!ok) throw usage_error(what);
}

std::optional<double> theory_free_energy(double alpha, double kappa_eff)
{
    if (alpha == 0.0) return 0.0;
    try {
        return capacity::free_energy(alpha, kappa_eff).free_energy;
    } catch (const diverged_error&) {
        return std::nullopt;
    }
}

} // namespace

std::string to_string(Command command)
{
    switch (command) {
    case Command::theory_capacity: return "theory capacity";
    case Command::theory_quantum: return "theory quantum";
    case Command::saddle: return "saddle";
    case Command::empirical: return "empirical";
    case Command::volume: return "volume";
    case Command::circuit_verify: return "circuit verify";
    case Command::selfavg: return "selfavg";
    }
    return "?";
}

std::string format_real(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::vector<double> parse_grid(const std::string& text)
{
    const auto items = split(text, ',');
    require(!items.empty(), "grid must not be empty");
    std::vector<double> out;
    for (const auto& item : items) {
        out.push_back(to_real(item));
        require(out.size() < 2 || out[out.size() - 2] < out.back(), "grid must be strictly increasing: '" + text + "'");
    }
    return out;
}

std::vector<int> parse_int_grid(const std::string& text)
{
    std::vector<int> out;
    for (double x : parse_grid(text)) {
        require(x == std::floor(x) && std::abs(x) < 1e9, "grid entries must be integers: '" + text + "'");
        out.push_back(static_cast<int>(x));
    }
    return out;
}

std::map<std::string, std::string> parse_config(std::istream& in)
{
    std::map<std::string, std::string> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw usage_error("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::replace(key.begin(), key.end(), '_', '-');
        if (key.empty()) throw usage_error("config line " + std::to_string(lineno) + ": empty key");
        if (out.count(key)) throw usage_error("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

int cmd_theory_capacity(const ExperimentConfig& config, std::ostream& out, std::ostream& log)
{
    for (double k : config.kappa_grid) require(k >= 0.0, "theory capacity: kappa must be >= 0");
    Csv csv(out, {"kappa", "alpha_c"});
    double prev = INFINITY;
    bool monotone = true;
    for (double k : config.kappa_grid) {
        const double a = capacity::classical_capacity(k);
        monotone = monotone && a < prev;
        prev = a;
        csv.cell(k).cell(a).end();
    }
    if (!monotone) {
        log << "check failed: alpha_c not strictly decreasing in kappa\n";
        return exit_check_failed;
    }
    return exit_ok;
}

int cmd_theory_quantum(const ExperimentConfig& config, std::ostream& out, std::ostream& log)
{
    for (double e : config.epsilon_grid) require(e > 0.0 && e <= 0.5, "theory quantum: epsilon must lie in (0, 0.5]");
    for (double s : config.sigma_grid) require(s >= 0.0, "theory quantum: sigma must be >= 0");
    for (double k : config.kappa_grid) require(k >= 0.0, "theory quantum: kappa must be >= 0");
    Csv csv(out, {"kappa", "epsilon", "sigma", "kappa_tilde", "alpha_c_q", "alpha_c_classical", "ratio"});
    int bad = 0;
    for (double k : config.kappa_grid) {
        const double classical = capacity::classical_capacity(k);
        for (double e : config.epsilon_grid) {
            for (double s : config.sigma_grid) {
                const capacity::TheoryParams tp{k, e, s};
                const double kt = capacity::effective_stability(tp);
                const double aq = capacity::quantum_capacity(tp);
                const double ratio = aq / classical;
                const bool boundary = s == 0.0 || e == 0.5;
                if (boundary ? std::abs(ratio - 1.0) > 1e-9 : !(ratio < 1.0)) ++bad;
                csv.cell(k).cell(e).cell(s).cell(kt).cell(aq).cell(classical).cell(ratio).end();
            }
        }
    }
    if (bad > 0) {
        log << "check failed: " << bad << " rows violate the quantum reduction identities\n";
        return exit_check_failed;
    }
    return exit_ok;
}

int cmd_saddle(const ExperimentConfig& config, std::ostream& out, std::ostream& log)
{
    config.params.validate();
    for (double a : config.alpha_grid) require(a > 0.0, "saddle: alpha must be > 0");
    const double kt = capacity::effective_stability(config.params);
    Csv csv(out, {"alpha", "q", "free_energy", "diverged"});
    std::optional<capacity::SaddlePoint> prev;
    bool monotone = true;
    for (double a : config.alpha_grid) {
        try {
            const auto sp = capacity::free_energy(a, kt);
            if (prev) monotone = monotone && sp.q > prev->q && sp.free_energy < prev->free_energy;
            prev = sp;
            csv.cell(a).cell(sp.q).cell(sp.free_energy).cell(0).end();
        } catch (const diverged_error&) {
            csv.cell(a).cell(not_applicable).cell(not_applicable).cell(1).end();
        }
    }
    if (!monotone) {
        log << "check failed: q not increasing or free energy not decreasing along the alpha grid\n";
        return exit_check_failed;
    }
    return exit_ok;
}

int cmd_empirical(const ExperimentConfig& config, std::ostream& out, std::ostream& log)
{
    require(config.n >= 10, "empirical: n must be >= 10");
    require(config.trials >= 1, "empirical: trials must be >= 1");
    require(config.bootstrap >= 1, "empirical: bootstrap must be >= 1");
    config.params.validate();
    if (!config.quantum) require(config.params.kappa >= 0.0, "empirical: kappa must be >= 0");

    percep::EmpiricalOptions opts;
    opts.distribution = config.dist;
    opts.threads = config.threads;
    opts.bootstrap = config.bootstrap;
    const auto result = percep::empirical_capacity(config.n, config.params, config.quantum, config.trials, config.seed, opts);

    const double z = specfun::std_normal_quantile(0.975);
    Csv csv(out, {"row", "alpha", "p", "sat_count", "trials", "failures", "p_sat", "ci_low", "ci_high"});
    long long total = 0;
    long long failed = 0;
    for (const auto& pr : result.probes) {
        const int m = pr.trials - pr.failures;
        double lo = 0.0;
        double hi = 1.0;
        if (m > 0) {
            // Wilson score interval
            const double ph = pr.p_sat();
            const double denom = 1.0 + z * z / m;
            const double centre = (ph + z * z / (2.0 * m)) / denom;
            const double half = z * std::sqrt(ph * (1.0 - ph) / m + z * z / (4.0 * m * m)) / denom;
            lo = std::max(0.0, centre - half);
            hi = std::min(1.0, centre + half);
        }
        total += pr.trials;
        failed += pr.failures;
        csv.cell("probe").cell(pr.alpha).cell(pr.p).cell(pr.sat_count).cell(pr.trials).cell(pr.failures);
        if (m > 0) {
            csv.cell(pr.p_sat()).cell(lo).cell(hi).end();
        } else {
            csv.cell(not_applicable).cell(not_applicable).cell(not_applicable).end();
        }
    }
    csv.cell("summary").cell(result.alpha_hat).cell(not_applicable).cell(not_applicable).cell(static_cast<int>(total))
        .cell(static_cast<int>(failed)).cell(not_applicable)
        .cell(result.alpha_hat - result.ci_halfwidth).cell(result.alpha_hat + result.ci_halfwidth).end();
    if (total > 0 && 20 * failed > total) {
        log << "check failed: " << failed << " of " << total << " solver runs did not converge\n";
        return exit_check_failed;
    }
    return exit_ok;
}

int cmd_volume(const ExperimentConfig& config, std::ostream& out, std::ostream& log)
{
    (void)log;
    require(config.n >= 1, "volume: n must be >= 1");
    require(config.samples >= 1, "volume: samples must be >= 1");
    if (config.method == volume::Method::sequential) require(config.samples >= 100, "volume: sequential needs samples >= 100");
    for (double a : config.alpha_grid) require(a >= 0.0, "volume: alpha must be >= 0");
    config.params.validate();
    if (config.quantum) require(config.params.sigma > 0.0, "volume: --quantum needs sigma > 0");
    const double threshold = config.quantum ? capacity::effective_stability(config.params) : config.params.kappa;

    struct Row
    {
        int p = 0;
        volume::VolumeEstimate est;
        std::string diagnostics = "ok";
        bool failed = false;
    };
    std::vector<Row> rows(config.alpha_grid.size());
    parallel_for(rows.size(), config.threads, [&](std::size_t i) {
        Row& row = rows[i];
        row.p = static_cast<int>(std::lround(config.alpha_grid[i] * config.n));
        const auto ps = percep::generate_patterns(config.n, row.p, config.dist, derive_key(config.seed, config.n, row.p));
        auto rng = counter_rng::stream(config.seed, config.n, row.p, 1);
        try {
            if (config.method == volume::Method::hit_or_miss) {
                row.est = config.quantum ? volume::hit_or_miss(ps, config.params, config.samples, rng)
                                         : volume::hit_or_miss(ps, threshold, config.samples, rng);
                if (row.est.bound_only) row.diagnostics = "bound_only";
            } else {
                row.est = config.quantum ? volume::sequential_volume(ps, config.params, config.samples, rng)
                                         : volume::sequential_volume(ps, threshold, config.samples, rng);
            }
        } catch (const stage_failure_error& e) {
            row.failed = true;
            row.diagnostics = "stage_failure:" + std::to_string(e.stage());
        }
    });

    Csv csv(out, {"n", "p", "alpha", "method", "log_v_over_n", "std_error", "theory_f", "diagnostics"});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Row& row = rows[i];
        const double alpha = static_cast<double>(row.p) / config.n;
        csv.cell(config.n).cell(row.p).cell(alpha).cell(volume::to_string(config.method));
        if (row.failed) {
            csv.cell(not_applicable).cell(not_applicable);
        } else {
            csv.cell(row.est.log_v_over_n).cell(row.est.std_error);
        }
        csv.cell(theory_free_energy(alpha, threshold)).cell(row.diagnostics).end();
    }
    return exit_ok;
}

int cmd_circuit_verify(const ExperimentConfig& config, std::ostream& out, std::ostream& log)
{
    require(config.n >= 1 && config.n <= 12, "circuit verify: n must lie in [1, 12]");
    require(config.trials >= 1, "circuit verify: trials must be >= 1");
    require(config.shots >= 2, "circuit verify: shots must be >= 2");
    require(config.params.sigma > 0.0, "circuit verify: sigma must be > 0");

    struct Row
    {
        double mean_sim, mean_theory, var_sim, var_theory, ks, scale;
    };
    const int n = config.n;
    std::vector<Row> rows(config.trials);
    parallel_for(rows.size(), config.threads, [&](std::size_t t) {
        auto rng = counter_rng::stream(config.seed, t, 0);
        vec_t x(n);
        vec_t w(n);
        for (int j = 0; j < n; ++j) x[j] = rng.normal();
        for (int j = 0; j < n; ++j) w[j] = rng.normal();
        const vec_t sigmas = vec_t::Constant(n, config.params.sigma);
        const auto res = qsim::run_perceptron_circuit(x, w, sigmas);
        auto shots_rng = counter_rng::stream(config.seed, t, 1);
        const auto samples = qsim::homodyne_sample(res.state, static_cast<int>(res.state.n_modes()) - 1, shots_rng, config.shots);
        Row& r = rows[t];
        r.mean_sim = res.mean_out;
        r.mean_theory = w.dot(x);
        r.var_sim = res.var_out;
        r.var_theory = config.params.sigma * config.params.sigma * w.squaredNorm();
        r.ks = qsim::ks_statistic(samples, r.mean_theory, r.var_theory);
        r.scale = (w.array() * x.array()).abs().sum();
    });

    const double ks_critical = 1.63 / std::sqrt(static_cast<double>(config.shots));
    Csv csv(out, {"n", "trial", "mean_sim", "mean_theory", "var_sim", "var_theory", "ks_stat", "ks_pass"});
    int bad = 0;
    int ks_fail = 0;
    for (int t = 0; t < config.trials; ++t) {
        const Row& r = rows[t];
        const bool mean_ok = std::abs(r.mean_sim - r.mean_theory) <= 1e-10 * std::max(r.scale, 1e-300);
        const bool var_ok = std::abs(r.var_sim - r.var_theory) <= 1e-10 * r.var_theory;
        bad += mean_ok && var_ok ? 0 : 1;
        const bool ks_pass = r.ks <= ks_critical;
        ks_fail += ks_pass ? 0 : 1;
        csv.cell(n).cell(t).cell(r.mean_sim).cell(r.mean_theory).cell(r.var_sim).cell(r.var_theory).cell(r.ks)
            .cell(ks_pass ? "true" : "false").end();
    }
    if (ks_fail > 0) log << "note: " << ks_fail << " trials above the 1% KS critical value\n";
    if (bad > 0) {
        log << "check failed: " << bad << " trials disagree with w.x / sigma^2 |w|^2 beyond 1e-10\n";
        return exit_check_failed;
    }
    return exit_ok;
}

int cmd_selfavg(const ExperimentConfig& config, std::ostream& out, std::ostream& log)
{
    require(config.n_list.size() >= 2, "selfavg: n-list needs at least two sizes");
    require(config.n_list.front() >= 1, "selfavg: sizes must be >= 1");
    require(config.draws >= 1, "selfavg: draws must be >= 1");
    require(config.samples >= 100, "selfavg: samples must be >= 100");
    require(config.alpha > 0.0, "selfavg: alpha must be > 0");

    volume::SelfAveragingOptions opts;
    opts.samples_per_stage = config.samples;
    opts.distribution = config.dist;
    opts.threads = config.threads;
    const auto rows = volume::self_averaging_probe(config.n_list, config.alpha, config.params.kappa, config.draws,
                                                   config.seed, opts);
    const auto f = theory_free_energy(config.alpha, config.params.kappa);
    Csv csv(out, {"n", "draws", "mean_log_v_over_n", "std", "theory_f", "failures"});
    bool decreasing = true;
    std::optional<double> prev;
    for (const auto& r : rows) {
        if (r.std && prev) decreasing = decreasing && *r.std < *prev;
        if (r.std) prev = r.std;
        csv.cell(r.n).cell(r.draws);
        if (r.failures < r.draws) {
            csv.cell(r.mean);
        } else {
            csv.cell(not_applicable);
        }
        csv.cell(r.std).cell(f).cell(r.failures).end();
    }
    if (!decreasing) {
        log << "check failed: disorder std not strictly decreasing in n\n";
        return exit_check_failed;
    }
    return exit_ok;
}

int dispatch(const ExperimentConfig& config, std::ostream& out, std::ostream& log)
{
    switch (config.command) {
    case Command::theory_capacity: return cmd_theory_capacity(config, out, log);
    case Command::theory_quantum: return cmd_theory_quantum(config, out, log);
    case Command::saddle: return cmd_saddle(config, out, log);
    case Command::empirical: return cmd_empirical(config, out, log);
    case Command::volume: return cmd_volume(config, out, log);
    case Command::circuit_verify: return cmd_circuit_verify(config, out, log);
    case Command::selfavg: return cmd_selfavg(config, out, log);
    }
    return exit_usage;
}

namespace {

// String-typed option storage; converted into an ExperimentConfig after the
// config file has been merged in.
struct RawOptions
{
    std::uint64_t seed = 1;
    std::string out = "-";
    int threads = default_threads();
    std::string config;

    std::string kappa;
    std::string epsilon;
    std::string sigma;
    std::string alpha;
    std::string n_list = "12,24";
    int n = 0;
    int trials = 0;
    int samples = 0;
    int shots = 0;
    int draws = 0;
    int bootstrap = 200;
    bool quantum = false;
    std::string dist = "gaussian";
    std::string method = "sequential";
};

double scalar(const std::string& s, const char* name)
{
    try {
        return to_real(s);
    } catch (const usage_error&) {
        throw usage_error(std::string("--") + name + ": not a number: '" + s + "'");
    }
}

ExperimentConfig build(Command command, const RawOptions& raw)
{
    ExperimentConfig c;
    c.command = command;
    c.seed = raw.seed;
    c.out_path = raw.out;
    c.threads = raw.threads;
    require(c.threads >= 1, "--threads must be >= 1");
    c.n = raw.n;
    c.trials = raw.trials;
    c.samples = raw.samples;
    c.shots = raw.shots;
    c.draws = raw.draws;
    c.bootstrap = raw.bootstrap;
    c.quantum = raw.quantum;
    try {
        c.dist = percep::distribution_from_string(raw.dist);
        c.method = volume::method_from_string(raw.method);
    } catch (const domain_error& e) {
        throw usage_error(e.what());
    }
    switch (command) {
    case Command::theory_capacity:
        c.kappa_grid = parse_grid(raw.kappa);
        break;
    case Command::theory_quantum:
        c.kappa_grid = parse_grid(raw.kappa);
        c.epsilon_grid = parse_grid(raw.epsilon);
        c.sigma_grid = parse_grid(raw.sigma);
        break;
    case Command::saddle:
        c.alpha_grid = parse_grid(raw.alpha);
        [[fallthrough]];
    case Command::empirical:
        c.params = {scalar(raw.kappa, "kappa"), scalar(raw.epsilon, "epsilon"), scalar(raw.sigma, "sigma")};
        break;
    case Command::volume:
        c.alpha_grid = parse_grid(raw.alpha);
        c.params = {scalar(raw.kappa, "kappa"), scalar(raw.epsilon, "epsilon"), scalar(raw.sigma, "sigma")};
        break;
    case Command::circuit_verify:
        c.params.sigma = scalar(raw.sigma, "sigma");
        break;
    case Command::selfavg:
        c.alpha = scalar(raw.alpha, "alpha");
        c.params.kappa = scalar(raw.kappa, "kappa");
        c.n_list = parse_int_grid(raw.n_list);
        break;
    }
    return c;
}

void merge_config(const std::vector<CLI::App*>& chain, const std::map<std::string, std::string>& entries)
{
    for (const auto& [key, value] : entries) {
        if (key == "config") throw usage_error("config files cannot include other config files");
        CLI::Option* opt = nullptr;
        for (auto it = chain.rbegin(); it != chain.rend() && !opt; ++it) opt = (*it)->get_option_no_throw("--" + key);
        if (!opt) throw usage_error("config key '" + key + "' is not an option of this command");
        if (opt->count() > 0) continue;  // flags win
        opt->add_result(value);
        try {
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw usage_error("config key '" + key + "': " + e.what());
        }
    }
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    const auto start = std::chrono::steady_clock::now();
    RawOptions raw;
    CLI::App app{"Perceptron storage-capacity lab: replica theory, Monte Carlo capacity, Gardner volumes", "gardner"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version);
    app.add_option("--seed", raw.seed, "Master seed")->capture_default_str();
    app.add_option("--out", raw.out, "CSV destination, - for standard output")->capture_default_str();
    app.add_option("--threads", raw.threads, "Worker threads")->capture_default_str();
    app.add_option("--config", raw.config, "Flat key = value file; flags override its entries");

    std::optional<Command> command;
    auto sub = [&](CLI::App* parent, const char* name, const char* help, Command c) {
        auto* s = parent->add_subcommand(name, help);
        s->fallthrough();
        s->callback([&command, c] { command = c; });
        return s;
    };
    auto* theory = app.add_subcommand("theory", "Replica-symmetric capacity tables");
    theory->fallthrough();
    theory->require_subcommand(1);
    auto* circuit = app.add_subcommand("circuit", "Gaussian circuit simulator checks");
    circuit->fallthrough();
    circuit->require_subcommand(1);

    auto* tcap = sub(theory, "capacity", "alpha_c over a kappa grid", Command::theory_capacity);
    auto* tq = sub(theory, "quantum", "Quantum capacity over kappa x epsilon x sigma grids", Command::theory_quantum);
    auto* saddle = sub(&app, "saddle", "Saddle-point overlap and free energy over an alpha grid", Command::saddle);
    auto* emp = sub(&app, "empirical", "Monte Carlo SAT/UNSAT crossing", Command::empirical);
    auto* vol = sub(&app, "volume", "Gardner volume estimates over an alpha grid", Command::volume);
    auto* cv = sub(circuit, "verify", "Circuit mean, variance and homodyne statistics", Command::circuit_verify);
    auto* sa = sub(&app, "selfavg", "Disorder spread of the Gardner volume", Command::selfavg);

    // defaults differ per command, so each subcommand binds its own copy
    std::map<CLI::App*, RawOptions> locals;
    auto opt_str = [&](CLI::App* s, const char* name, std::string RawOptions::*field, const char* def, const char* help) {
        locals[s].*field = def;
        s->add_option(std::string("--") + name, locals[s].*field, help)->capture_default_str();
    };
    auto opt_int = [&](CLI::App* s, const char* name, int RawOptions::*field, int def, const char* help) {
        locals[s].*field = def;
        s->add_option(std::string("--") + name, locals[s].*field, help)->capture_default_str();
    };
    auto opt_quantum = [&](CLI::App* s) {
        s->add_flag("--quantum", locals[s].quantum, "Use the quantum reliability constraint (threshold kappa_tilde)");
    };

    opt_str(tcap, "kappa", &RawOptions::kappa, "0,0.5,1,1.5,2,2.5", "kappa grid");
    opt_str(tq, "kappa", &RawOptions::kappa, "0,0.5,1", "kappa grid");
    opt_str(tq, "epsilon", &RawOptions::epsilon, "0.05,0.1,0.25,0.5", "epsilon grid, values in (0, 0.5]");
    opt_str(tq, "sigma", &RawOptions::sigma, "0,0.25,0.5,1", "sigma grid");

    opt_str(saddle, "alpha", &RawOptions::alpha, "0.25,0.5,0.75,1,1.25,1.5,1.75", "alpha grid");
    for (auto* s : {saddle, emp, vol}) {
        opt_str(s, "kappa", &RawOptions::kappa, s == vol ? "0.3" : "0", "stability threshold kappa");
        opt_str(s, "epsilon", &RawOptions::epsilon, "0.5", "error tolerance epsilon");
        opt_str(s, "sigma", &RawOptions::sigma, "0", "input noise sigma");
    }
    opt_int(emp, "n", &RawOptions::n, 40, "input dimension");
    opt_int(emp, "trials", &RawOptions::trials, 200, "instances per probe");
    opt_int(emp, "bootstrap", &RawOptions::bootstrap, 200, "bootstrap resamples for the CI");
    opt_str(emp, "dist", &RawOptions::dist, "gaussian", "pattern distribution: binary or gaussian");
    opt_quantum(emp);

    opt_int(vol, "n", &RawOptions::n, 24, "input dimension");
    opt_str(vol, "alpha", &RawOptions::alpha, "0.5", "alpha grid");
    opt_int(vol, "samples", &RawOptions::samples, 2000, "samples (hit_or_miss) or samples per stage (sequential)");
    opt_str(vol, "method", &RawOptions::method, "sequential", "hit_or_miss or sequential");
    opt_str(vol, "dist", &RawOptions::dist, "gaussian", "pattern distribution: binary or gaussian");
    opt_quantum(vol);

    opt_int(cv, "n", &RawOptions::n, 4, "modes, at most 12");
    opt_int(cv, "trials", &RawOptions::trials, 10, "random instances");
    opt_int(cv, "shots", &RawOptions::shots, 100000, "homodyne shots per instance");
    opt_str(cv, "sigma", &RawOptions::sigma, "0.5", "encoding noise sigma");

    opt_str(sa, "n-list", &RawOptions::n_list, "12,24", "sizes, strictly increasing");
    opt_str(sa, "alpha", &RawOptions::alpha, "0.5", "load alpha");
    opt_str(sa, "kappa", &RawOptions::kappa, "0", "stability threshold kappa");
    opt_int(sa, "draws", &RawOptions::draws, 50, "pattern sets per size");
    opt_int(sa, "samples", &RawOptions::samples, 1000, "samples per stage");
    opt_str(sa, "dist", &RawOptions::dist, "gaussian", "pattern distribution: binary or gaussian");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return exit_ok;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return exit_ok;
    } catch (const CLI::CallForVersion& e) {
        app.exit(e, out, err);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\nrun with --help for usage\n";
        return exit_usage;
    }

    CLI::App* leaf = nullptr;
    std::vector<CLI::App*> chain{&app};
    for (CLI::App* a = &app; !a->get_subcommands().empty();) {
        a = a->get_subcommands().front();
        chain.push_back(a);
        leaf = a;
    }
    if (!command || !leaf || !locals.count(leaf)) {
        err << "usage error: missing subcommand\n";
        return exit_usage;
    }

    ExperimentConfig config;
    std::map<std::string, std::string> file_entries;
    try {
        if (!raw.config.empty()) {
            std::ifstream in(raw.config);
            if (!in) throw usage_error("cannot read config file '" + raw.config + "'");
            file_entries = parse_config(in);
            merge_config(chain, file_entries);
        }
        RawOptions merged = locals[leaf];
        merged.seed = raw.seed;
        merged.out = raw.out;
        merged.threads = raw.threads;
        config = build(*command, merged);
    } catch (const usage_error& e) {
        err << "usage error: " << e.what() << '\n';
        return exit_usage;
    }

    err << "# gardner " << version << " (Eigen " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.'
        << EIGEN_MINOR_VERSION << ")\n";
    err << "# command: " << to_string(config.command) << '\n';
    err << "# seed: " << config.seed << '\n';
    err << "# threads: " << config.threads << '\n';
    if (!raw.config.empty()) err << "# config file: " << raw.config << '\n';
    for (const auto& [k, v] : file_entries) err << "#   " << k << " = " << v << '\n';
    for (auto* a : chain) {
        for (const auto* opt : a->get_options()) {
            if (opt->get_name().rfind("--", 0) != 0 || opt->get_name() == "--help" || opt->get_name() == "--version") continue;
            if (a != leaf && a != &app) continue;
            err << "# " << opt->get_name() << " = " << opt->as<std::string>() << (opt->count() ? "" : " (default)") << '\n';
        }
    }

    std::ostringstream csv;
    int code = exit_ok;
    try {
        code = dispatch(config, csv, err);
    } catch (const usage_error& e) {
        err << "usage error: " << e.what() << '\n';
        return exit_usage;
    } catch (const domain_error& e) {
        err << "usage error: " << e.what() << '\n';
        return exit_usage;
    } catch (const error& e) {
        err << "error: " << e.what() << '\n';
        return exit_check_failed;
    }

    if (config.out_path == "-") {
        out << csv.str();
        out.flush();
    } else {
        std::ofstream file(config.out_path, std::ios::binary);
        if (!file || !(file << csv.str()) || !file.flush()) {
            err << "usage error: cannot write '" << config.out_path << "'\n";
            return exit_usage;
        }
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    err << "# wall_time_s: " << wall << '\n';
    err << "# exit: " << code << '\n';
    return code;
}

} // namespace cli
} // namespace gardner
