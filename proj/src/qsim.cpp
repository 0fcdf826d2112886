#include <gardner/qsim.hpp>
#include <gardner/specfun.hpp>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <string>

namespace gardner {
namespace qsim {
namespace {

void check_mode(Eigen::Index mode, Eigen::Index n_modes)
{
    if (mode < 0 || mode >= n_modes) {
        throw domain_error("qsim: mode index " + std::to_string(mode) + " out of range");
    }
}

} // namespace

colmat_t omega(Eigen::Index n_modes)
{
    colmat_t om = colmat_t::Zero(2 * n_modes, 2 * n_modes);
    for (Eigen::Index k = 0; k < n_modes; ++k) {
        om(2 * k, 2 * k + 1) = 1.0;
        om(2 * k + 1, 2 * k) = -1.0;
    }
    return om;
}

colmat_t symplectic_matrix(const GateSpec& gate, Eigen::Index n_modes)
{
    check_mode(gate.target, n_modes);
    colmat_t s = colmat_t::Identity(2 * n_modes, 2 * n_modes);
    const auto qt = GaussianState::q_index(gate.target);
    const auto pt = GaussianState::p_index(gate.target);
    switch (gate.kind) {
    case GateKind::squeeze: {
        const double w = std::exp(-2.0 * gate.parameter);
        s(qt, qt) = w;
        s(pt, pt) = 1.0 / w;
        break;
    }
    case GateKind::phase_flip:
        s(qt, qt) = -1.0;
        s(pt, pt) = -1.0;
        break;
    case GateKind::cx: {
        if (!gate.control) throw domain_error("qsim: cx gate needs a control mode");
        const int c = *gate.control;
        check_mode(c, n_modes);
        if (c == gate.target) throw domain_error("qsim: cx control and target must differ");
        s(qt, GaussianState::q_index(c)) = 1.0;
        s(GaussianState::p_index(c), pt) = -1.0;
        break;
    }
    }
    return s;
}

GaussianState encode(const vec_t& x, const vec_t& sigmas)
{
    if (x.size() != sigmas.size() || x.size() == 0) throw domain_error("encode: size mismatch");
    if (!(sigmas.array() > 0.0).all()) throw domain_error("encode: widths must be positive");
    const Eigen::Index n = x.size();
    GaussianState st;
    st.mean = vec_t::Zero(2 * n);
    st.cov = colmat_t::Zero(2 * n, 2 * n);
    for (Eigen::Index j = 0; j < n; ++j) {
        st.mean[2 * j] = x[j];
        st.cov(2 * j, 2 * j) = sigmas[j] * sigmas[j];
        st.cov(2 * j + 1, 2 * j + 1) = 1.0 / (4.0 * sigmas[j] * sigmas[j]);
    }
    return st;
}

GaussianState apply(const GaussianState& state, const GateSpec& gate)
{
    const colmat_t s = symplectic_matrix(gate, state.n_modes());
    GaussianState out;
    out.mean = s * state.mean;
    out.cov = s * state.cov * s.transpose();
    // keep exact symmetry
    out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
    return out;
}

GaussianState apply_squeeze(const GaussianState& state, int mode, double w)
{
    if (w == 0.0 || !std::isfinite(w)) {
        throw degenerate_weight_error("apply_squeeze: w = 0 would need infinite squeezing");
    }
    GaussianState out = apply(state, GateSpec::squeeze(mode, -0.5 * std::log(std::abs(w))));
    if (w < 0.0) out = apply(out, GateSpec::phase_flip(mode));
    return out;
}

GaussianState apply_cx(const GaussianState& state, int control, int target)
{
    return apply(state, GateSpec::cx(control, target));
}

std::vector<GateSpec> perceptron_gates(const vec_t& w)
{
    std::vector<GateSpec> gates;
    for (Eigen::Index j = 0; j < w.size(); ++j) {
        if (w[j] == 0.0 || !std::isfinite(w[j])) {
            throw degenerate_weight_error("perceptron circuit: weight " + std::to_string(j) + " is zero");
        }
        gates.push_back(GateSpec::squeeze(static_cast<int>(j), -0.5 * std::log(std::abs(w[j]))));
        if (w[j] < 0.0) gates.push_back(GateSpec::phase_flip(static_cast<int>(j)));
    }
    for (Eigen::Index j = 0; j + 1 < w.size(); ++j) {
        gates.push_back(GateSpec::cx(static_cast<int>(j), static_cast<int>(j + 1)));
    }
    return gates;
}

CircuitOutput run_perceptron_circuit(const vec_t& x, const vec_t& w, const vec_t& sigmas)
{
    if (w.size() != x.size()) throw domain_error("run_perceptron_circuit: size mismatch");
    const auto gates = perceptron_gates(w);
    CircuitOutput out;
    out.state = encode(x, sigmas);
    for (const auto& g : gates) out.state = apply(out.state, g);
    const auto last = GaussianState::q_index(out.state.n_modes() - 1);
    out.mean_out = out.state.mean[last];
    out.var_out = out.state.cov(last, last);
    return out;
}

std::vector<double> homodyne_sample(const GaussianState& state, int mode, counter_rng& rng, int shots)
{
    check_mode(mode, state.n_modes());
    if (shots < 1) throw domain_error("homodyne_sample: shots must be >= 1");
    const double mu = state.mean[GaussianState::q_index(mode)];
    const double var = state.cov(GaussianState::q_index(mode), GaussianState::q_index(mode));
    if (!(var > 0.0)) throw domain_error("homodyne_sample: quadrature variance must be positive");
    const double sd = std::sqrt(var);
    std::vector<double> out(shots);
    for (auto& s : out) s = mu + sd * rng.normal();
    return out;
}

vec_t symplectic_eigenvalues(const GaussianState& state)
{
    const colmat_t m = omega(state.n_modes()) * state.cov;
    Eigen::EigenSolver<colmat_t> solver(m, false);
    std::vector<double> nu;
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) nu.push_back(std::abs(solver.eigenvalues()[i].imag()));
    std::sort(nu.begin(), nu.end());
    vec_t out(state.n_modes());
    // eigenvalues come in pairs +-i nu
    for (Eigen::Index k = 0; k < out.size(); ++k) out[k] = 0.5 * (nu[2 * k] + nu[2 * k + 1]);
    return out;
}

bool is_physical(const GaussianState& state, double tol)
{
    if ((state.cov - state.cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, state.cov.cwiseAbs().maxCoeff())) {
        return false;
    }
    Eigen::SelfAdjointEigenSolver<colmat_t> eig(state.cov, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -tol) return false;
    return symplectic_eigenvalues(state).minCoeff() >= 0.5 - tol;
}

double ks_statistic(std::vector<double> samples, double mean, double var)
{
    std::sort(samples.begin(), samples.end());
    const double sd = std::sqrt(var);
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = specfun::std_normal_cdf((samples[i] - mean) / sd);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    return d;
}

} // namespace qsim
} // namespace gardner
