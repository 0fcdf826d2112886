#pragma once
#include <gardner/errors.hpp>
#include <gardner/rng.hpp>
#include <gardner/types.hpp>
#include <optional>
#include <vector>

namespace gardner {
namespace qsim {

// Quadratures are interleaved (q1, p1, q2, p2, ...), hbar = 1, [q, p] = i.
// Omega is block diagonal with blocks [[0, 1], [-1, 0]].

template <class Scalar>
struct GaussianStateBase
{
    vec_type<Scalar> mean;
    colmat_type<Scalar> cov;

    Eigen::Index n_modes() const { return mean.size() / 2; }
    static Eigen::Index q_index(Eigen::Index mode) { return 2 * mode; }
    static Eigen::Index p_index(Eigen::Index mode) { return 2 * mode + 1; }
};

using GaussianState = GaussianStateBase<double>;

enum class GateKind
{
    squeeze,
    phase_flip,
    cx
};

struct GateSpec
{
    GateKind kind = GateKind::squeeze;
    int target = 0;
    std::optional<int> control;
    /// squeezing parameter r, q -> e^{-2r} q  (unused otherwise)
    double parameter = 0.0;

    static GateSpec squeeze(int mode, double r) { return {GateKind::squeeze, mode, std::nullopt, r}; }
    static GateSpec phase_flip(int mode) { return {GateKind::phase_flip, mode, std::nullopt, 0.0}; }
    static GateSpec cx(int control, int target) { return {GateKind::cx, target, control, 0.0}; }
};

colmat_t omega(Eigen::Index n_modes);

/// The 2N x 2N symplectic matrix realised by a gate.
colmat_t symplectic_matrix(const GateSpec& gate, Eigen::Index n_modes);

/// Product of Gaussian wave packets centred at x_j with Var(q_j) = sigma_j^2.
GaussianState encode(const vec_t& x, const vec_t& sigmas);

/// mean -> S mean, cov -> S cov S^T.
GaussianState apply(const GaussianState& state, const GateSpec& gate);

/// q_j -> w q_j, p_j -> p_j / w; negative w composes |w| squeezing with the
/// quadrature reflection. Throws degenerate_weight_error for w = 0.
GaussianState apply_squeeze(const GaussianState& state, int mode, double w);

/// q_target -> q_control + q_target, p_control -> p_control - p_target.
GaussianState apply_cx(const GaussianState& state, int control, int target);

/// Gate sequence of the perceptron circuit: squeeze every mode by w_j, then
/// the CX chain 1 -> 2 -> ... -> N accumulating sum_j w_j q_j in the last mode.
std::vector<GateSpec> perceptron_gates(const vec_t& w);

struct CircuitOutput
{
    double mean_out = 0.0;
    double var_out = 0.0;
    GaussianState state;
};

CircuitOutput run_perceptron_circuit(const vec_t& x, const vec_t& w, const vec_t& sigmas);

/// Independent draws of the q quadrature of `mode`.
std::vector<double> homodyne_sample(const GaussianState& state, int mode, counter_rng& rng, int shots);

/// Symplectic eigenvalues (one per mode, ascending).
vec_t symplectic_eigenvalues(const GaussianState& state);

/// Symmetric, PSD and uncertainty-respecting within tolerance.
bool is_physical(const GaussianState& state, double tol = 1e-9);

/// Two-sided Kolmogorov-Smirnov statistic of samples against N(mean, var).
double ks_statistic(std::vector<double> samples, double mean, double var);

} // namespace qsim
} // namespace gardner
