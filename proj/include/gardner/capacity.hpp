#pragma once

namespace gardner {
namespace capacity {

/// Stability threshold, per-pattern error tolerance and encoding width of
/// the continuous-variable perceptron.
struct TheoryParams
{
    double kappa = 0.0;
    double epsilon = 0.5;
    double sigma = 0.0;

    /// Throws domain_error unless kappa >= 0, sigma >= 0, 0 < epsilon < 1.
    void validate() const;
};

struct SaddlePoint
{
    double q = 0.0;
    double free_energy = 0.0;
    /// F_S = i * conj_F and E_S = i * conj_E at the saddle.
    double conj_F = 0.0;
    double conj_E = 0.0;
};

/// 1/alpha_c(kappa) = (1 + kappa^2) Phi(kappa) + kappa phi(kappa).
/// Valid for any finite kappa.
double inverse_capacity_closed_form(double kappa);

/// 1/alpha_c(kappa) as the split quadrature of (t + kappa)^2 over t > -kappa.
double inverse_capacity_quadrature(double kappa);

/// Critical capacity for any finite effective stability. Both routes are
/// evaluated; numerical_failure if they disagree by more than 1e-8.
double critical_capacity(double kappa_eff);

/// Critical capacity of the classical perceptron; kappa must be >= 0.
double classical_capacity(double kappa);

/// kappa + sigma * Phi^{-1}(1 - epsilon).
double effective_stability(const TheoryParams& params);

/// alpha_c(kappa_tilde). Requires epsilon <= 1/2.
double quantum_capacity(const TheoryParams& params);

/// Replica-symmetric bracket minimized over q:
///   alpha * E_t ln[1 - Phi((t sqrt(q) + kappa) / sqrt(1 - q))] + q / (2 (1 - q)) + ln(1 - q) / 2.
double rs_bracket(double q, double alpha, double kappa_eff);

/// Bracket with the conjugate parameters left free, F = i*conj_F, E = i*conj_E
/// (constant ln(2 pi)/2 included). Stationary in (conj_F, conj_E) at the
/// closed-form conjugates.
double conjugate_bracket(double q, double conj_F, double conj_E, double alpha, double kappa_eff);

/// Closed-form conjugates at overlap q: {conj_F, conj_E}.
double conjugate_F(double q);
double conjugate_E(double q);

/// Stationarity residual in q, multiplied by 2 (1 - q)^2:
///   alpha * E_t[ A(u) (t + kappa sqrt q) sqrt(1 - q) / sqrt(q) ] - q,
///   u = (kappa + t sqrt q) / sqrt(1 - q).
/// Positive below the saddle overlap, negative above.
double saddle_residual(double q, double alpha, double kappa_eff);

/// q -> 1 limit of the saddle equation written as an integral at finite q:
///   E_t[ A(u) (t + kappa sqrt q) sqrt(1 - q) / q^{3/2} ].
/// Tends to 1/alpha_c(kappa) as q -> 1.
double saddle_capacity_integral(double q, double kappa_eff);

/// Minimizer of rs_bracket over q with the value and conjugates there.
SaddlePoint free_energy(double alpha, double kappa_eff);

/// Root of the saddle-point equation in (0, 1 - 1e-9).
double saddle_overlap(double alpha, double kappa_eff);

/// Critical capacity from the q -> 1 limit of the saddle-point equation.
double capacity_from_saddle(double kappa_eff);

} // namespace capacity
} // namespace gardner
