#pragma once
#include <gardner/capacity.hpp>
#include <gardner/errors.hpp>
#include <gardner/rng.hpp>
#include <gardner/specfun.hpp>
#include <gardner/types.hpp>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace gardner {
namespace percep {

enum class Distribution
{
    binary,
    gaussian
};

std::string to_string(Distribution dist);
Distribution distribution_from_string(const std::string& name);

/// p labelled patterns in N dimensions. Row mu of `patterns` is x^mu;
/// labels hold +-1 as reals so that they broadcast in Eigen expressions.
template <class Scalar>
struct PatternSetBase
{
    rowmat_type<Scalar> patterns;
    vec_type<Scalar> labels;
    Distribution distribution = Distribution::gaussian;
    std::uint64_t seed = 0;

    Eigen::Index n_features() const { return patterns.cols(); }
    Eigen::Index n_patterns() const { return patterns.rows(); }

    /// Rows xi^mu x^mu.
    rowmat_type<Scalar> signed_patterns() const { return labels.asDiagonal() * patterns; }
};

using PatternSet = PatternSetBase<double>;

/// Weights on the sphere |w|^2 = N.
template <class Scalar>
class WeightVectorBase
{
public:
    WeightVectorBase() = default;

    /// Rescales `w` onto the sphere. Throws domain_error for a zero vector.
    template <class Derived>
    explicit WeightVectorBase(const Eigen::MatrixBase<Derived>& w) : _w(w)
    {
        const Scalar norm = _w.norm();
        if (!(norm > 0)) throw domain_error("WeightVector: zero weight vector");
        _w *= std::sqrt(static_cast<Scalar>(_w.size())) / norm;
    }

    const vec_type<Scalar>& values() const { return _w; }
    Eigen::Index n() const { return _w.size(); }

private:
    vec_type<Scalar> _w;
};

using WeightVector = WeightVectorBase<double>;

PatternSet generate_patterns(int n, int p, Distribution dist, std::uint64_t seed);

/// Delta^mu = xi^mu (w . x^mu) / |w|.
template <class Derived>
vec_t stabilities(const Eigen::MatrixBase<Derived>& w, const PatternSet& ps)
{
    if (w.size() != ps.n_features()) throw domain_error("stabilities: dimension mismatch");
    const double norm = w.norm();
    if (!(norm > 0.0)) throw domain_error("stabilities: zero weight vector");
    return ps.labels.cwiseProduct(ps.patterns * w) / norm;
}

inline vec_t stabilities(const WeightVector& w, const PatternSet& ps)
{
    return stabilities(w.values(), ps);
}

/// sgn(w . x^mu) with sgn(0) = +1.
template <class Derived>
Eigen::VectorXi classify_classical(const Eigen::MatrixBase<Derived>& w, const PatternSet& ps)
{
    if (w.size() != ps.n_features()) throw domain_error("classify_classical: dimension mismatch");
    const vec_t fields = ps.patterns * w;
    return fields.unaryExpr([](double h) { return h >= 0.0 ? 1 : -1; });
}

inline Eigen::VectorXi classify_classical(const WeightVector& w, const PatternSet& ps)
{
    return classify_classical(w.values(), ps);
}

struct SolverOptions
{
    /// Relative duality gap |v|^2 - min_mu v.z_mu, in units of max_mu |z_mu|^2.
    double gap_tolerance = 1e-12;
    int max_iterations = 100000;
    /// Restarts and steps of the max-min ascent used when the instance is not separable.
    int ascent_restarts = 20;
    int ascent_steps = 300;
};

struct MaxStability
{
    WeightVector w;
    double kappa_max = 0.0;
    bool separable = false;
    /// true when kappa_max comes from the max-min ascent (non-separable instances)
    bool approximate = false;
    double gap = 0.0;
    int iterations = 0;
    /// Convex weights (length p) of the minimum-norm hull point. For a
    /// non-separable instance sum_mu lambda_mu xi^mu x^mu ~ 0 certifies that
    /// no w has all Delta^mu > 0.
    vec_t hull_weights;
};

/// Weights on the sphere maximising min_mu Delta^mu.
///
/// The hard-margin dual is solved as the minimum-norm point v of the convex
/// hull of {xi^mu x^mu} (Wolfe's algorithm). If v != 0 the instance is
/// separable, w = sqrt(N) v / |v| and kappa_max = |v| up to the gap. If the
/// origin lies in the hull no w has all Delta^mu > 0; kappa_max is then the
/// best value found by projected subgradient ascent on the sphere and is
/// flagged approximate. Throws convergence_error when the iteration budget
/// runs out.
MaxStability max_stability(const PatternSet& ps, const SolverOptions& options = {});

/// Minimum-norm point of the hull only; no ascent for non-separable inputs.
MaxStability min_norm_separability(const PatternSet& ps, const SolverOptions& options = {});

/// kappa_max >= kappa - tol.
bool is_satisfiable(const PatternSet& ps, double kappa, double tol, const SolverOptions& options = {});

/// Phi((delta - kappa) / sigma).
double reliability(double delta, double kappa, double sigma);

enum class Outcome
{
    correct,
    incorrect,
    abstain
};

/// One homodyne measurement of the output mode, s ~ N(w.x, |w|^2 sigma^2).
/// Class +1 if s >= kappa |w|, -1 if s <= -kappa |w|, no decision in between.
template <class DerivedW, class DerivedX>
Outcome classify_quantum(const Eigen::MatrixBase<DerivedW>& w, const Eigen::MatrixBase<DerivedX>& x, int xi,
                         double kappa, double sigma, counter_rng& rng)
{
    if (!(sigma > 0.0)) throw domain_error("classify_quantum: sigma must be positive");
    if (w.size() != x.size()) throw domain_error("classify_quantum: dimension mismatch");
    const double norm = w.norm();
    const double s = w.dot(x) + norm * sigma * rng.normal();
    const double band = kappa * norm;
    int assigned = 0;
    if (s >= band) {
        assigned = 1;
    } else if (s <= -band) {
        assigned = -1;
    }
    if (assigned == 0) return Outcome::abstain;
    return assigned == xi ? Outcome::correct : Outcome::incorrect;
}

/// Absolute tie tolerance on Delta - kappa_tilde; ties count as satisfied.
inline constexpr double tie_tolerance = 1e-12;

/// All R^mu >= 1 - epsilon, evaluated in reliability space.
bool quantum_feasible(const PatternSet& ps, const WeightVector& w, const capacity::TheoryParams& params);

/// All Delta^mu >= threshold (with tie tolerance).
bool classical_feasible(const PatternSet& ps, const WeightVector& w, double threshold);

struct Probe
{
    double alpha = 0.0;
    int p = 0;
    int sat_count = 0;
    int trials = 0;
    int failures = 0;

    double p_sat() const { return trials > failures ? static_cast<double>(sat_count) / (trials - failures) : 0.0; }
};

struct EmpiricalCapacity
{
    double alpha_hat = 0.0;
    double ci_halfwidth = 0.0;
    /// logistic width parameter of the fit
    double width = 0.0;
    std::vector<Probe> probes;
};

struct EmpiricalOptions
{
    Distribution distribution = Distribution::gaussian;
    int threads = 1;
    int bootstrap = 200;
    double alpha_min = 0.1;
    double alpha_max = 10.0;
    SolverOptions solver;
};

/// Bisection on alpha for the P_SAT = 1/2 crossing, followed by a
/// logistic least-squares fit over every probe. Classical runs use
/// threshold kappa, quantum runs kappa_tilde. Instance streams depend only on
/// (seed, p, trial), so results do not depend on the thread count.
EmpiricalCapacity empirical_capacity(int n, const capacity::TheoryParams& params, bool quantum, int trials,
                                     std::uint64_t seed, const EmpiricalOptions& options = {});

/// Least-squares logistic P(alpha) = 1 / (1 + exp((alpha - mid) / width)).
/// Returns {mid, width}.
std::pair<double, double> fit_logistic(const std::vector<double>& alpha, const std::vector<double>& p_sat,
                                       const std::vector<double>& weights);

} // namespace percep
} // namespace gardner
