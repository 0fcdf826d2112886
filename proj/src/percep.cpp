#include <gardner/parallel.hpp>
#include <gardner/percep.hpp>
#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <algorithm>
#include <map>
#include <sstream>

namespace gardner {
namespace percep {

std::string to_string(Distribution dist)
{
    return dist == Distribution::binary ? "binary" : "gaussian";
}

Distribution distribution_from_string(const std::string& name)
{
    if (name == "binary") return Distribution::binary;
    if (name == "gaussian") return Distribution::gaussian;
    throw domain_error("unknown pattern distribution '" + name + "'");
}

PatternSet generate_patterns(int n, int p, Distribution dist, std::uint64_t seed)
{
    if (n < 1 || p < 0) throw domain_error("generate_patterns: need n >= 1 and p >= 0");
    PatternSet ps;
    ps.distribution = dist;
    ps.seed = seed;
    ps.patterns.resize(p, n);
    ps.labels.resize(p);
    auto rng = counter_rng::stream(seed, 0);
    for (int mu = 0; mu < p; ++mu) {
        for (int j = 0; j < n; ++j) {
            ps.patterns(mu, j) = dist == Distribution::binary ? ((rng() >> 63) ? 1.0 : -1.0) : rng.normal();
        }
    }
    auto label_rng = counter_rng::stream(seed, 1);
    for (int mu = 0; mu < p; ++mu) ps.labels[mu] = (label_rng() >> 63) ? 1.0 : -1.0;
    return ps;
}

namespace {

// Affine minimum-norm point of the columns of `pts`: weights mu with
// sum(mu) = 1 minimising |pts mu|. Uses (P^T P + 1 1^T) mu' = 1.
vec_t affine_min_norm(const colmat_t& pts)
{
    const Eigen::Index k = pts.cols();
    colmat_t gram = pts.transpose() * pts;
    gram.array() += 1.0;
    vec_t mu = gram.ldlt().solve(vec_t::Ones(k));
    return mu / mu.sum();
}

// max_mu-min ascent on the sphere by projected subgradient steps.
std::pair<vec_t, double> maxmin_ascent(const rowmat_t& z, const vec_t& start, const SolverOptions& options,
                                       std::uint64_t seed)
{
    const Eigen::Index n = z.cols();
    vec_t best = start.normalized();
    double best_val = (z * best).minCoeff();
    for (int r = 0; r < options.ascent_restarts; ++r) {
        vec_t u(n);
        if (r == 0) {
            u = best;
        } else {
            auto rng = counter_rng::stream(seed, 2, r);
            for (Eigen::Index j = 0; j < n; ++j) u[j] = rng.normal();
            u.normalize();
        }
        for (int t = 0; t < options.ascent_steps; ++t) {
            const vec_t margins = z * u;
            Eigen::Index arg;
            const double val = margins.minCoeff(&arg);
            if (val > best_val) {
                best_val = val;
                best = u;
            }
            const vec_t g = z.row(arg).transpose();
            const double gn = g.norm();
            if (gn == 0.0) break;
            u += (0.5 / std::sqrt(t + 1.0)) * g / gn;
            u.normalize();
        }
        const double val = (z * u).minCoeff();
        if (val > best_val) {
            best_val = val;
            best = u;
        }
    }
    return {best, best_val};
}

} // namespace

MaxStability min_norm_separability(const PatternSet& ps, const SolverOptions& options)
{
    const Eigen::Index p = ps.n_patterns();
    const Eigen::Index n = ps.n_features();
    if (p < 1) throw domain_error("max_stability: need at least one pattern");
    const rowmat_t z = ps.signed_patterns();
    const vec_t norms2 = z.rowwise().squaredNorm();
    const double scale = norms2.maxCoeff();
    if (!(scale > 0.0)) throw domain_error("max_stability: all patterns are zero");
    constexpr double weight_floor = 1e-12;

    std::vector<Eigen::Index> corral;
    vec_t lambda(1);
    Eigen::Index start;
    norms2.minCoeff(&start);
    corral.push_back(start);
    lambda[0] = 1.0;
    vec_t x = z.row(start).transpose();

    auto corral_points = [&]() {
        colmat_t pts(n, static_cast<Eigen::Index>(corral.size()));
        for (std::size_t i = 0; i < corral.size(); ++i) pts.col(i) = z.row(corral[i]).transpose();
        return pts;
    };

    MaxStability result;
    double gap = 0.0;
    int iter = 0;
    for (;; ++iter) {
        if (iter >= options.max_iterations) {
            std::ostringstream os;
            os << "max_stability: iteration budget exhausted with duality gap " << gap;
            throw convergence_error(os.str(), gap);
        }
        const vec_t dots = z * x;
        Eigen::Index j;
        const double min_dot = dots.minCoeff(&j);
        gap = (x.squaredNorm() - min_dot) / scale;
        if (gap <= options.gap_tolerance) break;
        if (std::find(corral.begin(), corral.end(), j) != corral.end()) break;
        corral.push_back(j);
        lambda.conservativeResize(lambda.size() + 1);
        lambda[lambda.size() - 1] = 0.0;

        for (int minor = 0;; ++minor) {
            const colmat_t pts = corral_points();
            const vec_t mu = affine_min_norm(pts);
            if ((mu.array() > weight_floor).all()) {
                lambda = mu;
                break;
            }
            double theta = 1.0;
            for (Eigen::Index i = 0; i < mu.size(); ++i) {
                if (mu[i] <= weight_floor && lambda[i] - mu[i] > 0.0) {
                    theta = std::min(theta, lambda[i] / (lambda[i] - mu[i]));
                }
            }
            lambda = (1.0 - theta) * lambda + theta * mu;
            // drop vanished vertices
            std::vector<Eigen::Index> kept;
            std::vector<double> kept_w;
            for (Eigen::Index i = 0; i < lambda.size(); ++i) {
                if (lambda[i] > weight_floor) {
                    kept.push_back(corral[i]);
                    kept_w.push_back(lambda[i]);
                }
            }
            if (kept.size() == corral.size()) {
                // guard against stalling: remove the smallest weight
                const auto it = std::min_element(kept_w.begin(), kept_w.end());
                const auto pos = it - kept_w.begin();
                kept.erase(kept.begin() + pos);
                kept_w.erase(kept_w.begin() + pos);
            }
            corral = kept;
            lambda = Eigen::Map<vec_t>(kept_w.data(), static_cast<Eigen::Index>(kept_w.size()));
            lambda /= lambda.sum();
            if (corral.size() == 1 || minor > 10 * n + 100) break;
        }
        x = corral_points() * lambda;
    }

    result.iterations = iter;
    result.gap = gap;
    result.hull_weights = vec_t::Zero(p);
    for (std::size_t i = 0; i < corral.size(); ++i) result.hull_weights[corral[i]] = lambda[i];
    const double xnorm = x.norm();
    const double certified = xnorm > 0.0 ? (z * x).minCoeff() / xnorm : 0.0;
    result.separable = certified > 0.0;
    if (result.separable) {
        result.w = WeightVector(x);
        result.kappa_max = stabilities(result.w, ps).minCoeff();
    } else {
        result.kappa_max = certified;
        result.w = xnorm > 0.0 ? WeightVector(x) : WeightVector(vec_t(z.row(0).transpose()));
    }
    return result;
}

MaxStability max_stability(const PatternSet& ps, const SolverOptions& options)
{
    MaxStability result = min_norm_separability(ps, options);
    if (result.separable) return result;
    const rowmat_t z = ps.signed_patterns();
    auto [u, value] = maxmin_ascent(z, result.w.values(), options, ps.seed);
    result.w = WeightVector(u);
    result.kappa_max = stabilities(result.w, ps).minCoeff();
    result.approximate = true;
    return result;
}

bool is_satisfiable(const PatternSet& ps, double kappa, double tol, const SolverOptions& options)
{
    if (!(tol > 0.0)) throw domain_error("is_satisfiable: tol must be positive");
    const MaxStability sep = min_norm_separability(ps, options);
    if (sep.separable) return sep.kappa_max >= kappa - tol;
    // origin in the hull: every w has some Delta^mu <= 0
    if (kappa - tol > 0.0) return false;
    return max_stability(ps, options).kappa_max >= kappa - tol;
}

double reliability(double delta, double kappa, double sigma)
{
    if (!(sigma > 0.0)) throw domain_error("reliability: sigma must be positive");
    return specfun::std_normal_cdf((delta - kappa) / sigma);
}

bool quantum_feasible(const PatternSet& ps, const WeightVector& w, const capacity::TheoryParams& params)
{
    params.validate();
    if (!(params.sigma > 0.0)) throw domain_error("quantum_feasible: sigma must be positive");
    const vec_t deltas = stabilities(w, ps);
    const double target = 1.0 - params.epsilon;
    for (Eigen::Index mu = 0; mu < deltas.size(); ++mu) {
        if (reliability(deltas[mu], params.kappa, params.sigma) < target) return false;
    }
    return true;
}

bool classical_feasible(const PatternSet& ps, const WeightVector& w, double threshold)
{
    const vec_t deltas = stabilities(w, ps);
    return (deltas.array() >= threshold - tie_tolerance).all();
}

std::pair<double, double> fit_logistic(const std::vector<double>& alpha, const std::vector<double>& p_sat,
                                       const std::vector<double>& weights)
{
    const std::size_t m = alpha.size();
    if (m < 2) throw numerical_failure("fit_logistic: need at least two probes");
    // start from the linear interpolation of the 1/2 crossing
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return alpha[a] < alpha[b]; });
    double mid = 0.5 * (alpha[order.front()] + alpha[order.back()]);
    for (std::size_t k = 0; k + 1 < m; ++k) {
        const auto a = order[k];
        const auto b = order[k + 1];
        if (p_sat[a] >= 0.5 && p_sat[b] < 0.5) {
            const double t = (p_sat[a] - 0.5) / (p_sat[a] - p_sat[b]);
            mid = alpha[a] + t * (alpha[b] - alpha[a]);
            break;
        }
    }
    double log_width = std::log(0.1 * std::max(mid, 0.1));

    auto sse = [&](double c, double lw) {
        const double s = std::exp(lw);
        double total = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double r = p_sat[i] - 1.0 / (1.0 + std::exp((alpha[i] - c) / s));
            total += weights[i] * r * r;
        }
        return total;
    };

    // Levenberg-Marquardt in (mid, log width)
    double damping = 1e-3;
    double current = sse(mid, log_width);
    for (int it = 0; it < 200; ++it) {
        const double s = std::exp(log_width);
        Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
        Eigen::Vector2d jtr = Eigen::Vector2d::Zero();
        for (std::size_t i = 0; i < m; ++i) {
            const double zeta = (alpha[i] - mid) / s;
            const double f = 1.0 / (1.0 + std::exp(zeta));
            const double df = -f * (1.0 - f);
            // d f / d mid and d f / d log_width
            const Eigen::Vector2d grad(-df / s, -df * zeta);
            const double r = p_sat[i] - f;
            jtj += weights[i] * grad * grad.transpose();
            jtr += weights[i] * grad * r;
        }
        Eigen::Matrix2d lhs = jtj;
        lhs.diagonal() *= 1.0 + damping;
        lhs.diagonal().array() += 1e-15;
        const Eigen::Vector2d step = lhs.fullPivLu().solve(jtr);
        const double cand = sse(mid + step[0], log_width + step[1]);
        if (cand < current) {
            mid += step[0];
            log_width += step[1];
            const bool done = current - cand <= 1e-15 * std::max(current, 1e-300);
            current = cand;
            damping = std::max(damping / 10.0, 1e-12);
            if (done) break;
        } else {
            damping *= 10.0;
            if (damping > 1e12) break;
        }
    }
    return {mid, std::exp(log_width)};
}

EmpiricalCapacity empirical_capacity(int n, const capacity::TheoryParams& params, bool quantum, int trials,
                                     std::uint64_t seed, const EmpiricalOptions& options)
{
    if (n < 10) throw domain_error("empirical_capacity: n must be >= 10");
    if (trials < 50) throw domain_error("empirical_capacity: trials must be >= 50");
    params.validate();
    const double threshold = quantum ? capacity::effective_stability(params) : params.kappa;

    std::map<int, Probe> probes;
    auto probe = [&](double alpha) -> const Probe& {
        const int p = std::max(1, static_cast<int>(std::lround(alpha * n)));
        if (auto it = probes.find(p); it != probes.end()) return it->second;
        std::vector<signed char> sat(trials, 0);
        std::vector<signed char> failed(trials, 0);
        parallel_for(static_cast<std::size_t>(trials), options.threads, [&](std::size_t t) {
            const auto ps = generate_patterns(n, p, options.distribution, derive_key(seed, p, t));
            try {
                sat[t] = is_satisfiable(ps, threshold, tie_tolerance, options.solver) ? 1 : 0;
            } catch (const convergence_error&) {
                failed[t] = 1;
            }
        });
        Probe pr;
        pr.p = p;
        pr.alpha = static_cast<double>(p) / n;
        pr.trials = trials;
        for (int t = 0; t < trials; ++t) {
            pr.sat_count += sat[t];
            pr.failures += failed[t];
        }
        return probes.emplace(p, pr).first->second;
    };

    double lo = options.alpha_min;
    double hi = options.alpha_max;
    while (std::lround(hi * n) - std::lround(lo * n) > 1) {
        const double mid = 0.5 * (lo + hi);
        if (probe(mid).p_sat() >= 0.5) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // symmetric stencil around the bracket so the fit sees the whole transition
    const double centre = 0.5 * (lo + hi);
    const double step = 0.5 * centre / std::sqrt(static_cast<double>(n));
    for (int k : {-2, -1, 1, 2}) {
        const double a = centre + k * step;
        if (a >= options.alpha_min && a <= options.alpha_max) probe(a);
    }

    EmpiricalCapacity out;
    for (const auto& [p, pr] : probes) out.probes.push_back(pr);

    // monotonicity within sampling noise
    for (std::size_t i = 0; i < out.probes.size(); ++i) {
        for (std::size_t j = i + 1; j < out.probes.size(); ++j) {
            const auto& a = out.probes[i];
            const auto& b = out.probes[j];
            const double pa = a.p_sat();
            const double pb = b.p_sat();
            const double na = std::max(1, a.trials - a.failures);
            const double nb = std::max(1, b.trials - b.failures);
            const double se = std::sqrt(std::max(pa * (1 - pa), 0.25 / na) / na + std::max(pb * (1 - pb), 0.25 / nb) / nb);
            if (pb - pa > 3.0 * se) {
                std::ostringstream os;
                os << "empirical_capacity: P_SAT not monotone in alpha (" << a.alpha << ": " << pa << ", "
                   << b.alpha << ": " << pb << ")";
                throw numerical_failure(os.str());
            }
        }
    }

    std::vector<double> alphas;
    std::vector<double> ps;
    std::vector<double> ws;
    for (const auto& pr : out.probes) {
        alphas.push_back(pr.alpha);
        ps.push_back(pr.p_sat());
        ws.push_back(static_cast<double>(pr.trials - pr.failures));
    }
    const auto [mid, width] = fit_logistic(alphas, ps, ws);
    out.alpha_hat = mid;
    out.width = width;

    // parametric bootstrap over the per-probe binomial counts
    std::vector<double> boot;
    boot.reserve(options.bootstrap);
    for (int b = 0; b < options.bootstrap; ++b) {
        auto rng = counter_rng::stream(seed, 3, b);
        std::vector<double> resampled(ps.size());
        for (std::size_t i = 0; i < ps.size(); ++i) {
            const int m = static_cast<int>(ws[i]);
            int hits = 0;
            for (int k = 0; k < m; ++k) hits += rng.uniform() < ps[i] ? 1 : 0;
            resampled[i] = m > 0 ? static_cast<double>(hits) / m : 0.0;
        }
        boot.push_back(fit_logistic(alphas, resampled, ws).first);
    }
    if (!boot.empty()) {
        std::sort(boot.begin(), boot.end());
        const auto at = [&](double f) {
            const double pos = f * (boot.size() - 1);
            const std::size_t i = static_cast<std::size_t>(pos);
            const double frac = pos - i;
            return i + 1 < boot.size() ? boot[i] * (1 - frac) + boot[i + 1] * frac : boot[i];
        };
        out.ci_halfwidth = 0.5 * (at(0.975) - at(0.025));
    }
    return out;
}

} // namespace percep
} // namespace gardner
