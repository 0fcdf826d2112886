#pragma once
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace gardner {
namespace specfun {

inline constexpr double inv_sqrt_2pi = 0.3989422804014326779399460599343818684758586311649;

inline double std_normal_pdf(double x) noexcept
{
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

/// Phi(x). Absolute error below 1e-15 on |x| <= 8.
double std_normal_cdf(double x);

/// 1 - Phi(x) without cancellation in the upper tail.
double std_normal_sf(double x);

/// ln(1 - Phi(x)); finite for every finite x.
double log_std_normal_sf(double x);

/// Phi^{-1}(p) for p in (0, 1).
double std_normal_quantile(double p);

/// phi(u) / (1 - Phi(u)), evaluated without cancellation for large u.
double inverse_mills(double u);

/// Gauss rule for the standard-normal measure exp(-t^2/2)/sqrt(2 pi) dt.
struct QuadratureRule
{
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
    int order = 0;

    /// Gauss-Hermite rule (probabilists' weight) built by Golub-Welsch.
    static QuadratureRule gauss_hermite(int order = 200);
};

/// Process-wide default order-200 rule.
const QuadratureRule& default_rule();

/// Gauss-Legendre nodes/weights on [-1, 1].
struct LegendreRule
{
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;

    static LegendreRule make(int order);
};

const LegendreRule& default_legendre();

template <class F>
double gauss_integral(F&& f, const QuadratureRule& rule)
{
    double sum = 0.0;
    double comp = 0.0;
    for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
        const double w = rule.weights[i];
        if (w == 0.0) continue;
        // Kahan summation
        const double y = w * f(rule.nodes[i]) - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

namespace detail {

/// Half-width of the integration window; phi(14) ~ 1e-43.
inline constexpr double window = 14.0;

std::vector<double> panel_edges(std::span<const double> kinks, double half_width);

} // namespace detail

/// Integral of f against the standard-normal measure for integrands with
/// kinks (or sharp but smooth transitions) at the given abscissas.
/// The line is split at every kink and integrated piecewise with composite
/// Gauss-Legendre panels graded geometrically towards each kink.
template <class F>
double gauss_integral(F&& f, const QuadratureRule& /*rule*/, std::span<const double> kinks)
{
    const auto& gl = default_legendre();
    const auto edges = detail::panel_edges(kinks, detail::window);
    double sum = 0.0;
    double comp = 0.0;
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
        const double a = edges[k];
        const double b = edges[k + 1];
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (a + b);
        double panel = 0.0;
        for (Eigen::Index i = 0; i < gl.nodes.size(); ++i) {
            const double t = mid + half * gl.nodes[i];
            panel += gl.weights[i] * std_normal_pdf(t) * f(t);
        }
        const double y = half * panel - comp;
        const double s = sum + y;
        comp = (s - sum) - y;
        sum = s;
    }
    return sum;
}

} // namespace specfun
} // namespace gardner
