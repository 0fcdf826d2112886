#include <gardner/parallel.hpp>
#include <gardner/volume.hpp>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace gardner {
namespace volume {

using percep::PatternSet;
using percep::WeightVector;

std::string to_string(Method method)
{
    return method == Method::hit_or_miss ? "hit_or_miss" : "sequential";
}

Method method_from_string(const std::string& name)
{
    if (name == "hit_or_miss") return Method::hit_or_miss;
    if (name == "sequential") return Method::sequential;
    throw domain_error("unknown volume method '" + name + "'");
}

WeightVector sample_sphere(int n, counter_rng& rng)
{
    if (n < 1) throw domain_error("sample_sphere: n must be >= 1");
    vec_t g(n);
    do {
        for (int j = 0; j < n; ++j) g[j] = rng.normal();
    } while (g.squaredNorm() == 0.0);
    return WeightVector(g);
}

double log_c_n(int n)
{
    if (n < 1) throw domain_error("log_c_n: n must be >= 1");
    const double half = 0.5 * n;
    return half * std::log(std::numbers::pi) + (half - 1.0) * std::log(static_cast<double>(n)) - std::lgamma(half);
}

namespace {

struct ThresholdIndicator
{
    double threshold;

    bool operator()(double delta) const { return delta >= threshold - percep::tie_tolerance; }
};

struct ReliabilityIndicator
{
    capacity::TheoryParams params;

    bool operator()(double delta) const
    {
        return percep::reliability(delta, params.kappa, params.sigma) >= 1.0 - params.epsilon;
    }
};

template <class Indicator>
VolumeEstimate hit_or_miss_impl(const PatternSet& ps, Indicator accept, int samples, counter_rng& rng)
{
    if (samples < 1) throw domain_error("hit_or_miss: samples must be >= 1");
    const int n = static_cast<int>(ps.n_features());
    VolumeEstimate est;
    est.method = Method::hit_or_miss;
    est.n = n;
    est.constraints = static_cast<int>(ps.n_patterns());
    if (ps.n_patterns() == 0) {
        est.samples_used = 0;
        return est;
    }
    const double inv_norm = 1.0 / std::sqrt(static_cast<double>(n));
    const rowmat_t z = ps.signed_patterns();
    long long hits = 0;
    for (int s = 0; s < samples; ++s) {
        const WeightVector w = sample_sphere(n, rng);
        const vec_t delta = (z * w.values()) * inv_norm;
        bool ok = true;
        for (Eigen::Index mu = 0; mu < delta.size() && ok; ++mu) ok = accept(delta[mu]);
        hits += ok ? 1 : 0;
    }
    est.samples_used = samples;
    if (hits == 0) {
        est.bound_only = true;
        est.log_v_over_n = std::log(3.0 / samples) / n;
        est.std_error = 0.0;
        return est;
    }
    const double v = static_cast<double>(hits) / samples;
    est.log_v_over_n = std::log(v) / n;
    est.std_error = std::sqrt((1.0 - v) / (v * samples)) / n;
    return est;
}

// Feasible angular interval [lo, hi] (containing 0) of the great circle
// w cos t + u sin t under a . w(t) >= c for every active row.
std::pair<double, double> feasible_arc(const rowmat_t& z, Eigen::Index active, const vec_t& w, const vec_t& u,
                                       double c)
{
    double lo = -std::numbers::pi;
    double hi = std::numbers::pi;
    const vec_t aw = z.topRows(active) * w;
    const vec_t au = z.topRows(active) * u;
    for (Eigen::Index mu = 0; mu < active; ++mu) {
        const double a = aw[mu];
        const double b = au[mu];
        const double r = std::hypot(a, b);
        if (r <= std::abs(c) && c <= 0.0) continue;  // whole circle feasible
        if (c <= -r) continue;
        const double ratio = std::min(1.0, c / r);
        const double half = std::acos(ratio);
        const double phase = std::atan2(b, a);
        double arc_lo = phase - half;
        double arc_hi = phase + half;
        // the current point (t = 0) is feasible up to rounding
        arc_lo = std::min(arc_lo, 0.0);
        arc_hi = std::max(arc_hi, 0.0);
        lo = std::max(lo, arc_lo);
        hi = std::min(hi, arc_hi);
    }
    return {lo, hi};
}

class HitAndRun
{
public:
    HitAndRun(const rowmat_t& z, double c, vec_t start, counter_rng& rng,
              const std::function<void(const vec_t&)>& visit)
        : _z(z), _c(c), _w(std::move(start)), _rng(rng), _radius(std::sqrt(static_cast<double>(_w.size()))),
          _visit(visit)
    {}

    void step(Eigen::Index active)
    {
        const Eigen::Index n = _w.size();
        vec_t u(n);
        for (Eigen::Index j = 0; j < n; ++j) u[j] = _rng.normal();
        u -= (u.dot(_w) / _w.squaredNorm()) * _w;
        const double un = u.norm();
        if (un == 0.0) return;
        u *= _radius / un;
        const auto [lo, hi] = feasible_arc(_z, active, _w, u, _c);
        const double t = lo + (hi - lo) * _rng.uniform();
        vec_t next = std::cos(t) * _w + std::sin(t) * u;
        next *= _radius / next.norm();
        _w = std::move(next);
        if (_visit) _visit(_w);
    }

    const vec_t& point() const { return _w; }
    void reset(vec_t w) { _w = std::move(w); }

private:
    const rowmat_t& _z;
    double _c;
    vec_t _w;
    counter_rng& _rng;
    double _radius;
    const std::function<void(const vec_t&)>& _visit;
};

template <class Indicator>
VolumeEstimate sequential_impl(const PatternSet& ps, double geometry_threshold, Indicator accept,
                               int samples_per_stage, counter_rng& rng, const SequentialOptions& options)
{
    if (samples_per_stage < 100) throw domain_error("sequential_volume: samples_per_stage must be >= 100");
    const int n = static_cast<int>(ps.n_features());
    const Eigen::Index p = ps.n_patterns();
    VolumeEstimate est;
    est.method = Method::sequential;
    est.n = n;
    est.constraints = static_cast<int>(p);
    if (p == 0) return est;

    // seeded random constraint order
    std::vector<Eigen::Index> order(p);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    for (Eigen::Index i = p - 1; i > 0; --i) {
        const auto j = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(i + 1));
        std::swap(order[i], order[j]);
    }
    const rowmat_t signed_rows = ps.signed_patterns();
    rowmat_t z(p, n);
    for (Eigen::Index i = 0; i < p; ++i) z.row(i) = signed_rows.row(order[i]);

    const double radius = std::sqrt(static_cast<double>(n));
    const double c = geometry_threshold * radius;
    auto satisfies = [&](const vec_t& w, Eigen::Index mu) { return accept(z.row(mu).dot(w) / radius); };

    double log_v = 0.0;
    double var_log_v = 0.0;
    long long used = 0;
    vec_t start;
    HitAndRun chain(z, c, vec_t::Zero(n), rng, options.visit);

    for (Eigen::Index stage = 0; stage < p; ++stage) {
        int samples = samples_per_stage;
        bool done = false;
        for (int attempt = 0; attempt <= options.retry_budget && !done; ++attempt, samples *= 2) {
            std::vector<char> hit(samples, 0);
            vec_t next_start;
            if (stage == 0) {
                // exact uniform samples
                for (int s = 0; s < samples; ++s) {
                    const vec_t w = sample_sphere(n, rng).values();
                    hit[s] = satisfies(w, stage);
                    if (hit[s]) next_start = w;
                }
            } else {
                chain.reset(start);
                for (int b = 0; b < options.burn_in; ++b) chain.step(stage);
                for (int s = 0; s < samples; ++s) {
                    for (int t = 0; t < options.thinning; ++t) chain.step(stage);
                    hit[s] = satisfies(chain.point(), stage);
                    if (hit[s]) next_start = chain.point();
                }
            }
            used += samples;
            const long long hits = std::count(hit.begin(), hit.end(), 1);
            if (hits == 0) continue;
            const double ratio = static_cast<double>(hits) / samples;
            double var_ratio;
            if (stage == 0) {
                var_ratio = ratio * (1.0 - ratio) / samples;
            } else {
                // batch means
                const int nb = std::max(2, std::min(options.batches, samples));
                const int len = samples / nb;
                double s1 = 0.0;
                double s2 = 0.0;
                for (int b = 0; b < nb; ++b) {
                    const auto first = hit.begin() + static_cast<std::ptrdiff_t>(b) * len;
                    const double m = static_cast<double>(std::count(first, first + len, 1)) / len;
                    s1 += m;
                    s2 += m * m;
                }
                const double mean_b = s1 / nb;
                const double var_b = std::max(0.0, (s2 - nb * mean_b * mean_b) / (nb - 1));
                // never report less than the independent-sample variance
                var_ratio = std::max(var_b / nb, ratio * (1.0 - ratio) / samples);
            }
            log_v += std::log(ratio);
            var_log_v += var_ratio / (ratio * ratio);
            start = next_start;
            done = true;
        }
        if (!done) {
            std::ostringstream os;
            os << "sequential_volume: stage " << stage + 1 << " (constraint " << order[stage] + 1
               << ") accepted no samples";
            throw stage_failure_error(os.str(), static_cast<int>(stage + 1));
        }
    }
    est.log_v_over_n = log_v / n;
    est.std_error = std::sqrt(var_log_v) / n;
    est.samples_used = used;
    return est;
}

} // namespace

VolumeEstimate hit_or_miss(const PatternSet& ps, double threshold, int samples, counter_rng& rng)
{
    return hit_or_miss_impl(ps, ThresholdIndicator{threshold}, samples, rng);
}

VolumeEstimate hit_or_miss(const PatternSet& ps, const capacity::TheoryParams& params, int samples, counter_rng& rng)
{
    params.validate();
    if (!(params.sigma > 0.0)) throw domain_error("hit_or_miss: quantum indicator needs sigma > 0");
    return hit_or_miss_impl(ps, ReliabilityIndicator{params}, samples, rng);
}

VolumeEstimate sequential_volume(const PatternSet& ps, double threshold, int samples_per_stage, counter_rng& rng,
                                 const SequentialOptions& options)
{
    return sequential_impl(ps, threshold, ThresholdIndicator{threshold}, samples_per_stage, rng, options);
}

VolumeEstimate sequential_volume(const PatternSet& ps, const capacity::TheoryParams& params, int samples_per_stage,
                                 counter_rng& rng, const SequentialOptions& options)
{
    params.validate();
    if (!(params.sigma > 0.0)) throw domain_error("sequential_volume: quantum indicator needs sigma > 0");
    return sequential_impl(ps, capacity::effective_stability(params), ReliabilityIndicator{params},
                           samples_per_stage, rng, options);
}

std::vector<SelfAveragingRow> self_averaging_probe(const std::vector<int>& n_list, double alpha, double kappa,
                                                   int draws, std::uint64_t seed,
                                                   const SelfAveragingOptions& options)
{
    if (draws < 1) throw domain_error("self_averaging_probe: draws must be >= 1");
    std::vector<SelfAveragingRow> rows;
    for (int n : n_list) {
        const int p = static_cast<int>(std::lround(alpha * n));
        std::vector<double> values(draws, 0.0);
        std::vector<char> failed(draws, 0);
        parallel_for(static_cast<std::size_t>(draws), options.threads, [&](std::size_t d) {
            const auto ps = percep::generate_patterns(n, p, options.distribution, derive_key(seed, n, d, 0));
            auto rng = counter_rng::stream(seed, n, d, 1);
            try {
                values[d] = sequential_volume(ps, kappa, options.samples_per_stage, rng, options.sequential).log_v_over_n;
            } catch (const stage_failure_error&) {
                failed[d] = 1;
            }
        });
        SelfAveragingRow row;
        row.n = n;
        row.draws = draws;
        std::vector<double> ok;
        for (int d = 0; d < draws; ++d) {
            if (failed[d]) {
                ++row.failures;
            } else {
                ok.push_back(values[d]);
            }
        }
        if (!ok.empty()) {
            double sum = 0.0;
            for (double v : ok) sum += v;
            row.mean = sum / ok.size();
            if (ok.size() >= 2) {
                double ss = 0.0;
                for (double v : ok) ss += (v - row.mean) * (v - row.mean);
                row.std = std::sqrt(ss / (ok.size() - 1));
            }
        }
        rows.push_back(row);
    }
    return rows;
}

} // namespace volume
} // namespace gardner
