#include "ink/leverage.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ink/errors.hpp"

namespace ink {

namespace {

void require_epsilon(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw InputError("epsilon must lie in [0, 1)");
}

void require_gamma(double gamma) {
  if (!(gamma > 0.0)) throw InputError("gamma must be positive");
}

Eigen::LLT<Matrix> shifted_cholesky(const Matrix& A, double shift) {
  Matrix shifted = symmetrized(A);
  shifted.diagonal().array() += shift;
  Eigen::LLT<Matrix> llt(shifted);
  if (llt.info() != Eigen::Success)
    throw NumericalError("shifted matrix is not positive definite");
  return llt;
}

double clamp_unit(double value, EstimatorDiagnostics* diagnostics) {
  if (value < 0.0) {
    if (diagnostics) ++diagnostics->rls_clamped_low;
    return 0.0;
  }
  if (value > 1.0) {
    if (diagnostics) ++diagnostics->rls_clamped_high;
    return 1.0;
  }
  return value;
}

}  // namespace

double rls_alpha(double epsilon) {
  require_epsilon(epsilon);
  return (2.0 - epsilon) / (1.0 - epsilon);
}

ApproximationFactors approximation_factors(double epsilon, double gamma, double lambda_max) {
  require_gamma(gamma);
  const double alpha = rls_alpha(epsilon);
  const double rho = std::max(0.0, lambda_max) / gamma;
  return {alpha, alpha * alpha * (1.0 + rho), rho};
}

double deff_second_order_coefficient(double epsilon) {
  require_epsilon(epsilon);
  return (1.0 - epsilon) * (1.0 - epsilon) / 4.0;
}

LeverageProfile exact_rls(const Matrix& K, double gamma) {
  require_gamma(gamma);
  const Matrix S = symmetrized(K);
  const auto n = S.rows();
  if (n == 0) throw InputError("exact_rls: empty matrix");
  const Vector ev = symmetric_eigenvalues(S);
  if (ev[n - 1] < -kDefaultPsdTolerance * std::max(1.0, std::abs(ev[0]))) {
    std::ostringstream msg;
    msg << "exact_rls: matrix is not PSD (smallest eigenvalue " << ev[n - 1] << ")";
    throw InputError(msg.str());
  }
  const Matrix hat = shifted_cholesky(S, gamma).solve(S);  // (K + γI)⁻¹K
  LeverageProfile out;
  out.tau = hat.diagonal();
  out.deff = out.tau.sum();
  out.probabilities = out.tau / out.deff;
  return out;
}

double estimate_rls(const Matrix& K_bar, const Vector& column, double diag, double gamma,
                    double epsilon, EstimatorDiagnostics* diagnostics) {
  Vector diags(1);
  diags[0] = diag;
  return estimate_rls_batch(K_bar, Matrix(column), diags, gamma, epsilon, diagnostics)[0];
}

Vector estimate_rls_batch(const Matrix& K_bar, const Matrix& columns, const Vector& diags,
                          double gamma, double epsilon, EstimatorDiagnostics* diagnostics) {
  require_gamma(gamma);
  const double alpha = rls_alpha(epsilon);
  if (columns.rows() != K_bar.rows() || columns.cols() != diags.size())
    throw InputError("estimate_rls: column shapes do not match the bordered matrix");
  const double ridge = alpha * gamma;
  Vector out(columns.cols());
  if (K_bar.rows() == 0) {
    for (Eigen::Index j = 0; j < out.size(); ++j)
      out[j] = clamp_unit(diags[j] / ridge, diagnostics);
    return out;
  }
  const Matrix solved = shifted_cholesky(K_bar, ridge).solve(columns);
  for (Eigen::Index j = 0; j < out.size(); ++j) {
    const double quad = columns.col(j).dot(solved.col(j));
    out[j] = clamp_unit((diags[j] - quad) / ridge, diagnostics);
  }
  return out;
}

DeffIncrement deff_increment_exact(const Matrix& K_t, const Vector& k_bar, double k_self,
                                   double gamma) {
  require_gamma(gamma);
  if (K_t.rows() != k_bar.size()) throw InputError("deff_increment_exact: shape mismatch");
  double first = 0.0;
  double second = 0.0;
  if (k_bar.size() > 0) {
    const Vector v = shifted_cholesky(K_t, gamma).solve(k_bar);  // (K + γI)⁻¹k̄
    first = k_bar.dot(v);
    second = v.squaredNorm();  // k̄ᵀ(K + γI)⁻²k̄
  }
  DeffIncrement out;
  out.xi = k_self + gamma - first;
  if (out.xi < gamma - 1e-8 * std::max(1.0, std::abs(k_self))) {
    std::ostringstream msg;
    msg << "deff_increment_exact: Schur complement " << out.xi << " below gamma " << gamma
        << "; the bordered matrix is not PSD";
    throw InputError(msg.str());
  }
  out.delta = (k_self - first - gamma * second) / out.xi;
  return out;
}

double estimate_deff_increment(const Matrix& K_tilde, const Vector& k_bar, double k_self,
                               double gamma, double epsilon) {
  require_gamma(gamma);
  const double alpha = rls_alpha(epsilon);
  if (K_tilde.rows() != k_bar.size()) throw InputError("estimate_deff_increment: shape mismatch");
  double first = 0.0;
  double second = 0.0;
  if (k_bar.size() > 0) {
    first = k_bar.dot(shifted_cholesky(K_tilde, alpha * gamma).solve(k_bar));
    second = shifted_cholesky(K_tilde, gamma).solve(k_bar).squaredNorm();
  }
  const double denominator = k_self + gamma - first;
  if (!(denominator > 0.0))
    throw NumericalError("estimate_deff_increment: nonpositive denominator; sketch violates its precondition");
  const double numerator =
      k_self - first - deff_second_order_coefficient(epsilon) * gamma * second;
  return numerator / denominator;
}

double update_deff(double deff_tilde, double delta_tilde, double epsilon) {
  if (!(deff_tilde > 0.0)) throw InputError("update_deff: running estimate must be positive");
  if (delta_tilde < -1e-10) {
    std::ostringstream msg;
    msg << "update_deff: negative increment " << delta_tilde;
    throw InvariantViolation(msg.str());
  }
  return deff_tilde + rls_alpha(epsilon) * std::max(0.0, delta_tilde);
}

double initial_deff(double k_self, double gamma) {
  require_gamma(gamma);
  return k_self / (k_self + gamma);
}

ProbabilityMap clamp_probabilities(const ProbabilityMap& p_new, const ProbabilityMap& p_old) {
  ProbabilityMap out;
  for (const auto& [index, p] : p_new) {
    const auto it = p_old.find(index);
    out.emplace_hint(out.end(), index, it == p_old.end() ? p : std::min(p, it->second));
  }
  return out;
}

}  // namespace ink
