#pragma once
#include <gardner/capacity.hpp>
#include <gardner/percep.hpp>
#include <gardner/rng.hpp>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace gardner {
namespace volume {

enum class Method
{
    hit_or_miss,
    sequential
};

std::string to_string(Method method);
Method method_from_string(const std::string& name);

/// Estimate of (1/N) ln V, V the fraction of the sphere |w|^2 = N on which
/// every constraint holds.
struct VolumeEstimate
{
    double log_v_over_n = 0.0;
    double std_error = 0.0;
    Method method = Method::hit_or_miss;
    long long samples_used = 0;
    int n = 0;
    int constraints = 0;
    /// Zero hits: log_v_over_n is the upper bound ln(3 / samples) / N.
    bool bound_only = false;
};

/// Uniform point on the radius-sqrt(N) sphere.
percep::WeightVector sample_sphere(int n, counter_rng& rng);

/// Fraction of uniform sphere samples with min_mu Delta^mu >= threshold.
VolumeEstimate hit_or_miss(const percep::PatternSet& ps, double threshold, int samples, counter_rng& rng);

/// Same, with acceptance decided per sample by R^mu >= 1 - epsilon.
VolumeEstimate hit_or_miss(const percep::PatternSet& ps, const capacity::TheoryParams& params, int samples,
                           counter_rng& rng);

struct SequentialOptions
{
    int burn_in = 50;
    int thinning = 10;
    /// Doublings of the stage sample size before a zero-acceptance stage fails.
    int retry_budget = 4;
    /// Batches for the batch-means variance of each stage.
    int batches = 20;
    /// Called with every point the chain visits.
    std::function<void(const vec_t&)> visit;
};

/// Product of conditional acceptance probabilities, constraints added in a
/// seeded random order. Each stage is sampled by hit-and-run on great circles
/// inside the current feasible region; the variance of each stage ratio comes
/// from batch means and the total error from the delta method.
VolumeEstimate sequential_volume(const percep::PatternSet& ps, double threshold, int samples_per_stage,
                                 counter_rng& rng, const SequentialOptions& options = {});

/// Sequential estimate with the reliability indicator deciding acceptance;
/// the chain geometry uses kappa_tilde.
VolumeEstimate sequential_volume(const percep::PatternSet& ps, const capacity::TheoryParams& params,
                                 int samples_per_stage, counter_rng& rng, const SequentialOptions& options = {});

struct SelfAveragingRow
{
    int n = 0;
    int draws = 0;
    double mean = 0.0;
    /// empty when fewer than two successful draws
    std::optional<double> std;
    int failures = 0;
};

struct SelfAveragingOptions
{
    int samples_per_stage = 1000;
    percep::Distribution distribution = percep::Distribution::gaussian;
    int threads = 1;
    SequentialOptions sequential;
};

/// Disorder mean and spread of (1/N) ln V across `draws` pattern sets per N.
/// Draw d at size N uses patterns and chain streams derived from (seed, N, d).
std::vector<SelfAveragingRow> self_averaging_probe(const std::vector<int>& n_list, double alpha, double kappa,
                                                   int draws, std::uint64_t seed,
                                                   const SelfAveragingOptions& options = {});

/// ln C_N = (N/2) ln pi + (N/2 - 1) ln N - ln Gamma(N/2).
double log_c_n(int n);

} // namespace volume
} // namespace gardner
