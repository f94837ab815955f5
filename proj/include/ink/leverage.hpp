#pragma once

#include <cstddef>
#include <map>

#include "ink/numerics.hpp"

namespace ink {

/// Exact ridge leverage scores of a Gram matrix, their sum and the induced distribution.
struct LeverageProfile {
  Vector tau;
  double deff = 0.0;
  Vector probabilities;
};

using ProbabilityMap = std::map<std::size_t, double>;

/// Estimated scores carried by a sketching run. Keys are 1-based column indices.
struct EstimatedProfile {
  ProbabilityMap tau_tilde;
  double deff_tilde = 0.0;
  ProbabilityMap p_tilde;
};

/// Counters for values the estimators had to clamp because a precondition failed.
struct EstimatorDiagnostics {
  std::size_t rls_clamped_low = 0;
  std::size_t rls_clamped_high = 0;
};

/// Approximation factors tied to the accuracy parameter ε.
struct ApproximationFactors {
  double alpha = 1.0;
  double beta = 1.0;
  double rho = 0.0;
};

double rls_alpha(double epsilon);  // (2 - ε)/(1 - ε)
// β = α²(1 + ρ) with ρ = λ_max/γ. Pass a lower-bound proxy for λ_max when the true one is unknown.
ApproximationFactors approximation_factors(double epsilon, double gamma, double lambda_max);

// Coefficient on the second-order term of the effective-dimension increment, (1-ε)²/4.
double deff_second_order_coefficient(double epsilon);

LeverageProfile exact_rls(const Matrix& K, double gamma);

// τ̃ = (1/(αγ))·(diag - columnᵀ(K_bar + αγI)⁻¹column), clamped to [0, 1].
double estimate_rls(const Matrix& K_bar, const Vector& column, double diag, double gamma,
                    double epsilon, EstimatorDiagnostics* diagnostics = nullptr);
// Same estimator for every column of `columns` with one factorization of K_bar + αγI.
Vector estimate_rls_batch(const Matrix& K_bar, const Matrix& columns, const Vector& diags,
                          double gamma, double epsilon,
                          EstimatorDiagnostics* diagnostics = nullptr);

struct DeffIncrement {
  double delta = 0.0;
  double xi = 0.0;  // Schur complement k + γ - k̄ᵀ(K + γI)⁻¹k̄
};

DeffIncrement deff_increment_exact(const Matrix& K_t, const Vector& k_bar, double k_self,
                                   double gamma);

double estimate_deff_increment(const Matrix& K_tilde, const Vector& k_bar, double k_self,
                               double gamma, double epsilon);

double update_deff(double deff_tilde, double delta_tilde, double epsilon);

// Exact effective dimension of a single column, used to seed the running estimate.
double initial_deff(double k_self, double gamma);

// Elementwise minimum over the keys of p_new; keys missing from p_old pass through unchanged.
ProbabilityMap clamp_probabilities(const ProbabilityMap& p_new, const ProbabilityMap& p_old);

}  // namespace ink
