#include <gardner/capacity.hpp>
#include <gardner/errors.hpp>
#include <gardner/specfun.hpp>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

namespace gardner {
namespace capacity {
namespace {

using specfun::default_rule;
using specfun::gauss_integral;

constexpr double q_search_max = 1.0 - 1e-6;
constexpr double q_root_min = 1e-12;
constexpr double q_root_max = 1.0 - 1e-9;

void require_finite(double x, const char* what)
{
    if (!std::isfinite(x)) throw domain_error(std::string(what) + ": non-finite argument");
}

// Location of the (smoothed) kink of the integrands at u = 0.
double kink(double q, double kappa_eff)
{
    return q > 0.0 ? -kappa_eff / std::sqrt(q) : 0.0;
}

void check_alpha(double alpha, double kappa_eff, const char* what)
{
    require_finite(kappa_eff, what);
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw domain_error(std::string(what) + ": alpha must be positive");
    }
    const double alpha_c = critical_capacity(kappa_eff);
    if (alpha >= alpha_c * (1.0 - 1e-6)) {
        std::ostringstream os;
        os << what << ": alpha=" << alpha << " is at or above alpha_c(" << kappa_eff << ")=" << alpha_c
           << "; the log-volume per dimension diverges";
        throw diverged_error(os.str());
    }
}

} // namespace

void TheoryParams::validate() const
{
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw domain_error("kappa must be finite and >= 0");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw domain_error("sigma must be finite and >= 0");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw domain_error("epsilon must lie in (0, 1)");
}

double inverse_capacity_closed_form(double kappa)
{
    require_finite(kappa, "inverse_capacity_closed_form");
    return (1.0 + kappa * kappa) * specfun::std_normal_cdf(kappa) + kappa * specfun::std_normal_pdf(kappa);
}

double inverse_capacity_quadrature(double kappa)
{
    require_finite(kappa, "inverse_capacity_quadrature");
    const std::array<double, 1> kinks{-kappa};
    return gauss_integral(
        [kappa](double t) {
            const double s = t + kappa;
            return s > 0.0 ? s * s : 0.0;
        },
        default_rule(), kinks);
}

double critical_capacity(double kappa_eff)
{
    const double closed = inverse_capacity_closed_form(kappa_eff);
    const double quad = inverse_capacity_quadrature(kappa_eff);
    if (std::abs(closed - quad) > 1e-8 * std::max(1.0, closed)) {
        std::ostringstream os;
        os << "critical_capacity: closed form " << closed << " and quadrature " << quad << " disagree at kappa="
           << kappa_eff;
        throw numerical_failure(os.str());
    }
    return 1.0 / closed;
}

double classical_capacity(double kappa)
{
    require_finite(kappa, "classical_capacity");
    if (kappa < 0.0) throw domain_error("classical_capacity: kappa must be >= 0");
    return critical_capacity(kappa);
}

double effective_stability(const TheoryParams& params)
{
    params.validate();
    if (params.sigma == 0.0) return params.kappa;
    return params.kappa + params.sigma * specfun::std_normal_quantile(1.0 - params.epsilon);
}

double quantum_capacity(const TheoryParams& params)
{
    params.validate();
    if (params.epsilon > 0.5) {
        throw domain_error("quantum_capacity: epsilon must not exceed 1/2");
    }
    return critical_capacity(effective_stability(params));
}

double rs_bracket(double q, double alpha, double kappa_eff)
{
    if (!(q >= 0.0 && q < 1.0)) throw domain_error("rs_bracket: q must lie in [0, 1)");
    const double sq = std::sqrt(q);
    const double s1q = std::sqrt(1.0 - q);
    const std::array<double, 1> kinks{kink(q, kappa_eff)};
    const double energetic = gauss_integral(
        [&](double t) { return specfun::log_std_normal_sf((t * sq + kappa_eff) / s1q); }, default_rule(), kinks);
    return alpha * energetic + q / (2.0 * (1.0 - q)) + 0.5 * std::log1p(-q);
}

double conjugate_F(double q)
{
    return -q / ((1.0 - q) * (1.0 - q));
}

double conjugate_E(double q)
{
    return -(1.0 - 2.0 * q) / ((1.0 - q) * (1.0 - q));
}

double conjugate_bracket(double q, double conj_F, double conj_E, double alpha, double kappa_eff)
{
    const double sum = conj_F + conj_E;
    if (!(sum < 0.0)) throw domain_error("conjugate_bracket: conj_F + conj_E must be negative");
    const double entropic =
        0.5 * (std::log(2.0 * std::numbers::pi) - std::log(-sum) + conj_F / sum - conj_E - q * conj_F);
    const double base = rs_bracket(q, alpha, kappa_eff) - q / (2.0 * (1.0 - q)) - 0.5 * std::log1p(-q);
    return base + entropic;
}

double saddle_residual(double q, double alpha, double kappa_eff)
{
    if (!(q > 0.0 && q < 1.0)) throw domain_error("saddle_residual: q must lie in (0, 1)");
    const double sq = std::sqrt(q);
    const double s1q = std::sqrt(1.0 - q);
    const double scale = s1q / sq;
    const std::array<double, 1> kinks{kink(q, kappa_eff)};
    const double integral = gauss_integral(
        [&](double t) {
            const double u = (kappa_eff + t * sq) / s1q;
            return specfun::inverse_mills(u) * (t + kappa_eff * sq) * scale;
        },
        default_rule(), kinks);
    return alpha * integral - q;
}

double saddle_capacity_integral(double q, double kappa_eff)
{
    if (!(q > 0.0 && q < 1.0)) throw domain_error("saddle_capacity_integral: q must lie in (0, 1)");
    const double sq = std::sqrt(q);
    const double s1q = std::sqrt(1.0 - q);
    const double scale = s1q / (q * sq);
    const std::array<double, 1> kinks{kink(q, kappa_eff)};
    return gauss_integral(
        [&](double t) {
            const double u = (kappa_eff + t * sq) / s1q;
            return specfun::inverse_mills(u) * (t + kappa_eff * sq) * scale;
        },
        default_rule(), kinks);
}

double saddle_overlap(double alpha, double kappa_eff)
{
    check_alpha(alpha, kappa_eff, "saddle_overlap");
    double lo = q_root_min;
    double hi = q_root_max;
    double r_lo = saddle_residual(lo, alpha, kappa_eff);
    double r_hi = saddle_residual(hi, alpha, kappa_eff);
    if (!(r_lo > 0.0 && r_hi < 0.0)) {
        std::ostringstream os;
        os << "saddle_overlap: no sign change of the residual on [" << lo << ", " << hi << "] (alpha=" << alpha
           << ", kappa=" << kappa_eff << ", residuals " << r_lo << ", " << r_hi << ")";
        throw numerical_failure(os.str());
    }
    // Bisection down to adjacent doubles; the residual is monotone through the root.
    while (true) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double r = saddle_residual(mid, alpha, kappa_eff);
        if (r == 0.0) return mid;
        if (r > 0.0) {
            lo = mid;
            r_lo = r;
        } else {
            hi = mid;
            r_hi = r;
        }
    }
    return std::abs(r_lo) <= std::abs(r_hi) ? lo : hi;
}

SaddlePoint free_energy(double alpha, double kappa_eff)
{
    check_alpha(alpha, kappa_eff, "free_energy");
    auto g = [&](double q) { return rs_bracket(q, alpha, kappa_eff); };

    // golden-section search on the clipped domain
    constexpr double inv_phi = 0.6180339887498948482;
    double a = 0.0;
    double b = q_search_max;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double gc = g(c);
    double gd = g(d);
    while (b - a > 1e-9) {
        if (gc < gd) {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    double q = 0.5 * (a + b);

    // Newton refinement on the stationarity residual
    for (int it = 0; it < 3; ++it) {
        const double h = 1e-6 * std::min(q, 1.0 - q);
        const double r = saddle_residual(q, alpha, kappa_eff);
        const double dr = (saddle_residual(q + h, alpha, kappa_eff) - saddle_residual(q - h, alpha, kappa_eff)) /
                          (2.0 * h);
        if (!(dr < 0.0)) break;
        const double next = q - r / dr;
        if (!(next > 0.0 && next < q_root_max)) break;
        q = next;
    }

    SaddlePoint sp;
    sp.q = q;
    sp.free_energy = g(q);
    sp.conj_F = conjugate_F(q);
    sp.conj_E = conjugate_E(q);
    return sp;
}

double capacity_from_saddle(double kappa_eff)
{
    require_finite(kappa_eff, "capacity_from_saddle");
    // the q -> 1 limit of the integrand is (t + kappa)^2 theta(t + kappa)
    const std::array<double, 1> kinks{-kappa_eff};
    const double inverse = gauss_integral(
        [kappa_eff](double t) {
            const double s = t + kappa_eff;
            return s >= 0.0 ? s * s : 0.0;
        },
        default_rule(), kinks);
    return 1.0 / inverse;
}

} // namespace capacity
} // namespace gardner
