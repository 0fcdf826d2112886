#include <doctest.h>
#include <gardner/capacity.hpp>
#include <gardner/errors.hpp>
#include <gardner/specfun.hpp>
#include "oracles.hpp"
#include <cmath>
#include <vector>

using namespace gardner;
using namespace gardner::capacity;

namespace {

// Independent long-double evaluation of the saddle residual (scaled form)
// by composite Simpson on [-12, 12], using erfcl directly.
long double residual_simpson(long double q, long double alpha, long double kappa)
{
    const int n = 40000;
    const long double a = -12.0L;
    const long double h = 24.0L / n;
    const long double sq = std::sqrt(q);
    const long double s1q = std::sqrt(1.0L - q);
    auto f = [&](long double t) {
        const long double u = (kappa + t * sq) / s1q;
        const long double pdf = std::exp(-0.5L * t * t) / std::sqrt(2.0L * 3.14159265358979323846L);
        const long double sf = 0.5L * std::erfc(u / std::sqrt(2.0L));
        long double mills;
        if (sf > 1e-4000L) {
            mills = std::exp(-0.5L * u * u) / std::sqrt(2.0L * 3.14159265358979323846L) / sf;
        } else {
            mills = u;
        }
        return pdf * mills * (t + kappa * sq) * s1q / sq;
    };
    long double sum = f(a) + f(a + n * h);
    for (int i = 1; i < n; ++i) sum += (i % 2 ? 4.0L : 2.0L) * f(a + i * h);
    return alpha * sum * h / 3.0L - q;
}

double bisect_residual(double alpha, double kappa)
{
    long double lo = 1e-10L;
    long double hi = 1.0L - 1e-7L;
    for (int it = 0; it < 60; ++it) {
        const long double mid = 0.5L * (lo + hi);
        (residual_simpson(mid, alpha, kappa) > 0 ? lo : hi) = mid;
    }
    return static_cast<double>(0.5L * (lo + hi));
}

// Golden-section minimization of the bracket by an independent Simpson rule.
double bracket_simpson(double q, double alpha, double kappa)
{
    const int n = 40000;
    const double a = -12.0;
    const double h = 24.0 / n;
    auto f = [&](double t) {
        const double u = (t * std::sqrt(q) + kappa) / std::sqrt(1.0 - q);
        const long double sf = 0.5L * std::erfc(static_cast<long double>(u) / std::sqrt(2.0L));
        return specfun::std_normal_pdf(t) * static_cast<double>(std::log(sf));
    };
    double sum = f(a) + f(a + n * h);
    for (int i = 1; i < n; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return alpha * sum * h / 3.0 + q / (2.0 * (1.0 - q)) + 0.5 * std::log(1.0 - q);
}

double golden_oracle(double alpha, double kappa)
{
    double a = 0.0;
    double b = 1.0 - 1e-6;
    const double r = 0.6180339887498949;
    for (int it = 0; it < 80; ++it) {
        const double c = b - r * (b - a);
        const double d = a + r * (b - a);
        if (bracket_simpson(c, alpha, kappa) < bracket_simpson(d, alpha, kappa)) {
            b = d;
        } else {
            a = c;
        }
    }
    return 0.5 * (a + b);
}

double closed_capacity_mp(double kappa)
{
    const auto inv = (1 + oracle::mp50(kappa) * kappa) * oracle::normal_cdf_mp(kappa) +
                     kappa * oracle::normal_pdf_mp(kappa);
    return static_cast<double>(1 / inv);
}

} // namespace

TEST_CASE("classical_capacity reference values")
{
    CHECK(std::abs(classical_capacity(0.0) - 2.0) <= 1e-9);
    CHECK(std::abs(classical_capacity(1.0) - 0.519572) <= 1e-5);
    CHECK(std::abs(classical_capacity(1.0) - closed_capacity_mp(1.0)) <= 1e-13);
    CHECK(classical_capacity(5.0) < classical_capacity(1.0));
    CHECK(classical_capacity(1.0) < classical_capacity(0.0));
    CHECK_THROWS_AS(classical_capacity(-0.1), domain_error);
    CHECK_THROWS_AS(classical_capacity(std::nan("")), domain_error);
}

TEST_CASE("closed form and split quadrature agree")
{
    for (double kappa : {0.0, 0.5, 1.0, 2.0, -1.5, 4.0}) {
        CHECK(std::abs(inverse_capacity_closed_form(kappa) - inverse_capacity_quadrature(kappa)) <= 1e-8);
    }
}

TEST_CASE("alpha_c strictly decreasing in kappa")
{
    double prev = classical_capacity(0.0);
    for (int i = 1; i <= 60; ++i) {
        const double a = classical_capacity(3.0 * i / 60.0);
        CHECK(a < prev);
        prev = a;
    }
}

TEST_CASE("effective_stability")
{
    CHECK(effective_stability({0.3, 0.5, 2.0}) == doctest::Approx(0.3).epsilon(1e-15));
    for (double eps : {0.01, 0.2, 0.5, 0.9}) CHECK(effective_stability({0.3, eps, 0.0}) == 0.3);
    const auto cdf = [](double x) { return specfun::std_normal_cdf(x); };
    const double oracle_kt = 0.5 * oracle::bisection_quantile(cdf, 0.9);
    CHECK(std::abs(oracle_kt - 0.6407758) <= 1e-6);
    CHECK(std::abs(effective_stability({0.0, 0.1, 0.5}) - 0.6407758) <= 1e-6);
    // epsilon above 1/2 is legal here and lowers the threshold
    CHECK(effective_stability({0.0, 0.9, 0.5}) < 0.0);
    CHECK_THROWS_AS(effective_stability({-0.1, 0.1, 0.5}), domain_error);
    CHECK_THROWS_AS(effective_stability({0.0, 0.0, 0.5}), domain_error);
    CHECK_THROWS_AS(effective_stability({0.0, 0.1, -1.0}), domain_error);
}

TEST_CASE("quantum_capacity")
{
    CHECK(std::abs(quantum_capacity({0.0, 0.5, 1.0}) - 2.0) <= 1e-9);
    // oracle: 50-digit closed form at the bisection-quantile kappa_tilde
    const auto cdf = [](double x) { return specfun::std_normal_cdf(x); };
    const double kt = 0.5 * oracle::bisection_quantile(cdf, 0.9);
    const double expected = closed_capacity_mp(kt);
    CHECK(std::abs(expected - 0.7994556) <= 1e-6);
    CHECK(std::abs(quantum_capacity({0.0, 0.1, 0.5}) - 0.799) <= 1e-3);
    CHECK(std::abs(quantum_capacity({0.0, 0.1, 0.5}) - expected) <= 1e-10);
    CHECK(quantum_capacity({0.5, 0.25, 0.8}) < classical_capacity(0.5));
    CHECK_THROWS_AS(quantum_capacity({0.0, 0.7, 0.5}), domain_error);
}

TEST_CASE("quantum capacity monotone in epsilon and sigma")
{
    for (double kappa : {0.0, 0.7}) {
        double prev = 0.0;
        for (int i = 1; i <= 20; ++i) {
            const double eps = 0.5 * i / 21.0;
            const double a = quantum_capacity({kappa, eps, 0.6});
            CHECK(a > prev);
            CHECK(a < classical_capacity(kappa));
            prev = a;
        }
        prev = classical_capacity(kappa);
        for (int i = 1; i <= 20; ++i) {
            const double a = quantum_capacity({kappa, 0.2, 0.1 * i});
            CHECK(a < prev);
            prev = a;
        }
        CHECK(std::abs(quantum_capacity({kappa, 0.2, 0.0}) - classical_capacity(kappa)) <= 1e-9);
    }
}

TEST_CASE("saddle_overlap matches an independent bisection oracle")
{
    const double oracle_q = bisect_residual(0.5, 0.0);
    const double q = saddle_overlap(0.5, 0.0);
    CHECK(std::abs(q - oracle_q) <= 1e-6);
    CHECK(std::abs(free_energy(0.5, 0.0).q - oracle_q) <= 1e-6);
    CHECK(std::abs(saddle_residual(q, 0.5, 0.0)) <= 1e-10);

    const double oracle_q2 = bisect_residual(0.5, 0.3);
    CHECK(std::abs(saddle_overlap(0.5, 0.3) - oracle_q2) <= 1e-6);
}

TEST_CASE("saddle_overlap small and large alpha")
{
    const double q_small = saddle_overlap(1e-3, 0.0);
    CHECK(q_small < 0.01);
    CHECK(std::abs(q_small - golden_oracle(1e-3, 0.0)) <= 1e-5);
    const double q_big = saddle_overlap(0.9 * classical_capacity(0.0), 0.0);
    CHECK(q_big > 0.5);
    CHECK(q_big < 1.0);
    CHECK(std::abs(q_big - golden_oracle(0.9 * 2.0, 0.0)) <= 1e-5);

    double prev = 0.0;
    for (double alpha : {0.2, 0.6, 1.0, 1.4, 1.8}) {
        const double q = saddle_overlap(alpha, 0.0);
        CHECK(q > prev);
        prev = q;
    }
}

TEST_CASE("free_energy")
{
    const auto tiny = free_energy(1e-4, 0.0);
    CHECK(tiny.q < 1e-3);
    CHECK(tiny.free_energy <= 0.0);
    CHECK(tiny.free_energy > -1e-3);

    const auto high = free_energy(1.9, 0.0);
    CHECK(high.q > 0.8);
    CHECK(std::abs(high.q - saddle_overlap(1.9, 0.0)) <= 1e-6);

    // scipy bounded minimization + adaptive quadrature gave -0.5674794
    const auto mid = free_energy(0.5, 0.3);
    CHECK(std::abs(mid.free_energy - (-0.5674794)) <= 1e-6);
    CHECK(std::abs(mid.free_energy - bracket_simpson(mid.q, 0.5, 0.3)) <= 1e-9);

    CHECK(mid.conj_F == doctest::Approx(-mid.q / ((1 - mid.q) * (1 - mid.q))));
    CHECK(mid.conj_E == doctest::Approx(-(1 - 2 * mid.q) / ((1 - mid.q) * (1 - mid.q))));

    CHECK_THROWS_AS(free_energy(0.0, 0.0), domain_error);
    CHECK_THROWS_AS(free_energy(-1.0, 0.0), domain_error);
    CHECK_THROWS_AS(free_energy(2.0, 0.0), diverged_error);
    CHECK_THROWS_AS(free_energy(2.0 * (1 - 1e-7), 0.0), diverged_error);
    CHECK_THROWS_AS(saddle_overlap(3.0, 0.0), diverged_error);
}

TEST_CASE("free energy decreasing in alpha, overlap increasing")
{
    for (double kappa : {0.0, 0.3}) {
        const double ac = classical_capacity(kappa);
        double prev_f = 0.0;
        double prev_q = 0.0;
        for (int i = 1; i <= 12; ++i) {
            const double alpha = ac * i / 13.0;
            const auto sp = free_energy(alpha, kappa);
            CHECK(sp.free_energy < prev_f);
            CHECK(sp.q > prev_q);
            CHECK(std::abs(sp.q - saddle_overlap(alpha, kappa)) <= 1e-6);
            prev_f = sp.free_energy;
            prev_q = sp.q;
        }
    }
}

TEST_CASE("conjugate parameters are stationary points of the bracket")
{
    for (double alpha : {0.3, 1.2}) {
        const double kappa = 0.2;
        const auto sp = free_energy(alpha, kappa);
        const double h = 1e-6;
        const double dF = (conjugate_bracket(sp.q, sp.conj_F + h, sp.conj_E, alpha, kappa) -
                           conjugate_bracket(sp.q, sp.conj_F - h, sp.conj_E, alpha, kappa)) /
                          (2 * h);
        const double dE = (conjugate_bracket(sp.q, sp.conj_F, sp.conj_E + h, alpha, kappa) -
                           conjugate_bracket(sp.q, sp.conj_F, sp.conj_E - h, alpha, kappa)) /
                          (2 * h);
        CHECK(std::abs(dF) <= 1e-4);
        CHECK(std::abs(dE) <= 1e-4);
        // substituting the conjugates recovers the bracket plus ln(2 pi)/2 + 1/2
        const double reduced = conjugate_bracket(sp.q, sp.conj_F, sp.conj_E, alpha, kappa);
        CHECK(reduced == doctest::Approx(sp.free_energy + 0.5 * std::log(2 * std::numbers::pi) + 0.5).epsilon(1e-12));
    }
}

TEST_CASE("capacity_from_saddle agrees with the classical route")
{
    CHECK(std::abs(capacity_from_saddle(0.0) - 2.0) <= 1e-8);
    CHECK(std::abs(capacity_from_saddle(1.0) - classical_capacity(1.0)) <= 1e-8);
    CHECK(std::abs(capacity_from_saddle(0.6407758) - quantum_capacity({0.0, 0.1, 0.5})) <= 1e-6);
    CHECK(std::abs(capacity_from_saddle(effective_stability({0.0, 0.1, 0.5})) - quantum_capacity({0.0, 0.1, 0.5})) <=
          1e-8);
}

TEST_CASE("finite-q saddle integral approaches the inverse capacity")
{
    for (double kappa : {0.0, 0.6}) {
        const double target = 1.0 / classical_capacity(kappa);
        double prev_err = 1e300;
        for (double gap : {1e-2, 1e-4, 1e-6, 1e-8}) {
            const double err = std::abs(saddle_capacity_integral(1.0 - gap, kappa) - target);
            CHECK(err < prev_err);
            prev_err = err;
        }
        CHECK(prev_err <= 1e-3);
    }
}
