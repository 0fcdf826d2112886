#include <gardner/specfun.hpp>
#include <gardner/errors.hpp>
#include <Eigen/Eigenvalues>
#include <array>
#include <string>

namespace gardner {
namespace specfun {
namespace {

constexpr double inv_sqrt2 = 0.7071067811865475244008443621048490392848359376885;

void require_finite(double x, const char* what)
{
    if (!std::isfinite(x)) {
        throw domain_error(std::string(what) + ": non-finite argument");
    }
}

// Mills ratio (1 - Phi(u)) / phi(u) by its continued fraction
//   1 / (u + 1/(u + 2/(u + 3/(u + ...)))), evaluated with modified Lentz.
// Converges in a handful of terms for u >= 20.
double mills_ratio_cf(double u)
{
    constexpr double tiny = 1e-300;
    double f = u;
    double c = u;
    double d = 0.0;
    for (int k = 1; k < 500; ++k) {
        d = u + k * d;
        if (d == 0.0) d = tiny;
        c = u + k / c;
        if (c == 0.0) c = tiny;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return 1.0 / f;
}

// Above this the continued fraction is used; erfc(x/sqrt2) underflows near 37.5.
constexpr double cf_threshold = 26.0;

// Acklam's rational approximation to the normal quantile (relative error ~1e-9).
double quantile_initial(double p)
{
    static constexpr std::array<double, 6> a{-3.969683028665376e+01, 2.209460984245205e+02,
                                             -2.759285104469687e+02, 1.383577518672690e+02,
                                             -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr std::array<double, 5> b{-5.447609879822406e+01, 1.615858368580409e+02,
                                             -1.556989798598866e+02, 6.680131188771972e+01,
                                             -1.328068155288572e+01};
    static constexpr std::array<double, 6> c{-7.784894002430293e-03, -3.223964580411365e-01,
                                             -2.400758277161838e+00, -2.549732539343734e+00,
                                             4.374664141464968e+00, 2.938163982698783e+00};
    static constexpr std::array<double, 4> d{7.784695709041462e-03, 3.224671290700398e-01,
                                             2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - p_low) {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

} // namespace

double std_normal_cdf(double x)
{
    require_finite(x, "std_normal_cdf");
    return 0.5 * std::erfc(-x * inv_sqrt2);
}

double std_normal_sf(double x)
{
    require_finite(x, "std_normal_sf");
    return 0.5 * std::erfc(x * inv_sqrt2);
}

double log_std_normal_sf(double x)
{
    require_finite(x, "log_std_normal_sf");
    if (x < cf_threshold) {
        return std::log(0.5 * std::erfc(x * inv_sqrt2));
    }
    return -0.5 * x * x + std::log(inv_sqrt_2pi * mills_ratio_cf(x));
}

double std_normal_quantile(double p)
{
    if (!(p > 0.0 && p < 1.0)) {
        throw domain_error("std_normal_quantile: probability must lie in (0, 1)");
    }
    if (p == 0.5) return 0.0;
    double x = quantile_initial(p);
    // Newton on the tail that does not lose precision.
    for (int it = 0; it < 2; ++it) {
        const double dens = std_normal_pdf(x);
        if (dens == 0.0) break;
        if (p < 0.5) {
            x -= (std_normal_cdf(x) - p) / dens;
        } else {
            x += (std_normal_sf(x) - (1.0 - p)) / dens;
        }
    }
    return x;
}

double inverse_mills(double u)
{
    require_finite(u, "inverse_mills");
    if (u < cf_threshold) {
        return std_normal_pdf(u) / std_normal_sf(u);
    }
    return 1.0 / mills_ratio_cf(u);
}

QuadratureRule QuadratureRule::gauss_hermite(int order)
{
    if (order < 1) throw domain_error("gauss_hermite: order must be positive");
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
    Eigen::VectorXd sub(std::max(order - 1, 0));
    for (int k = 1; k < order; ++k) sub[k - 1] = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    QuadratureRule rule;
    rule.order = order;
    rule.nodes = solver.eigenvalues();
    rule.weights = solver.eigenvectors().row(0).transpose().array().square();
    rule.weights /= rule.weights.sum();
    // exact symmetry of the rule
    for (int i = 0; i < order / 2; ++i) {
        const int j = order - 1 - i;
        const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.nodes[i] = -x;
        rule.nodes[j] = x;
        rule.weights[i] = rule.weights[j] = w;
    }
    if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
    return rule;
}

const QuadratureRule& default_rule()
{
    static const QuadratureRule rule = QuadratureRule::gauss_hermite(200);
    return rule;
}

LegendreRule LegendreRule::make(int order)
{
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
    Eigen::VectorXd sub(std::max(order - 1, 0));
    for (int k = 1; k < order; ++k) {
        sub[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    LegendreRule rule;
    rule.nodes = solver.eigenvalues();
    rule.weights = 2.0 * solver.eigenvectors().row(0).transpose().array().square();
    return rule;
}

const LegendreRule& default_legendre()
{
    static const LegendreRule rule = LegendreRule::make(20);
    return rule;
}

namespace detail {

std::vector<double> panel_edges(std::span<const double> kinks, double half_width)
{
    constexpr double coarse = 0.5;
    constexpr double finest = 1e-7;

    std::vector<double> cuts{-half_width, half_width};
    for (double k : kinks) {
        if (std::isfinite(k) && k > -half_width && k < half_width) cuts.push_back(k);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::vector<double> edges;
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
        const double a = cuts[s];
        const double b = cuts[s + 1];
        const bool grade_left = s > 0;
        const bool grade_right = s + 2 < cuts.size();
        // geometric grading from an interior kink, then uniform coarse panels
        std::vector<double> left{a};
        if (grade_left) {
            for (double h = finest; a + 2.0 * h < b && h < coarse; h *= 2.0) left.push_back(a + h);
        }
        std::vector<double> right{b};
        if (grade_right) {
            for (double h = finest; b - 2.0 * h > a && h < coarse; h *= 2.0) right.push_back(b - h);
        }
        const double lo = left.back();
        double hi = right.back();
        if (hi < lo) hi = lo;
        const int n_mid = std::max(1, static_cast<int>(std::ceil((hi - lo) / coarse)));
        for (double e : left) edges.push_back(e);
        for (int i = 1; i < n_mid; ++i) edges.push_back(lo + (hi - lo) * i / n_mid);
        for (auto it = right.rbegin(); it != right.rend(); ++it) edges.push_back(*it);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

} // namespace detail

} // namespace specfun
} // namespace gardner
