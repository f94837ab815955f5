#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ink/kernel.hpp"
#include "ink/nystrom.hpp"
#include "ink/pipeline.hpp"
#include "ink/sampler.hpp"

namespace ink {

/// Fixed-design regression instance: risk is measured at the training inputs.
struct FixedDesignProblem {
  Dataset dataset;
  Vector f_star;
  double noise_std = 0.0;
  double mu = 1.0;
};

struct ConditionReport {
  std::size_t step = 0;
  bool lower_psd_ok = false;  // 0 ⪯ K - K̃
  bool upper_psd_ok = false;  // K - K̃ ⪯ γ/(1-ε)·K(K + γI)⁻¹
  double spectral_gap = 0.0;  // ‖K - K̃‖₂
  std::optional<double> psi_gap;
  bool holds() const { return lower_psd_ok && upper_psd_ok; }
};

inline constexpr double kConditionTolerance = 1e-7;

// γ/(1-ε)·K(K + γI)⁻¹ for ε in [0, 1).
Matrix condition_upper_bound(const Matrix& K, double gamma, double epsilon);
ConditionReport check_condition(const Matrix& K, const Matrix& K_tilde, double gamma,
                                double epsilon);
// Same check against a precomputed upper bound.
ConditionReport check_condition_with_bound(const Matrix& K, const Matrix& K_tilde,
                                           const Matrix& upper);

// λ_max(Ψ(I - SSᵀ)Ψᵀ) with Ψ = Λ^{1/2}(Λ + γI)^{-1/2}Uᵀ. A value ≤ ε certifies the condition.
double psi_gap(const Matrix& K, const Selection& selection, double gamma);
double psi_gap(const EigPair& eig, const Selection& selection, double gamma);

// μ²‖(K + μI)⁻¹f*‖² + σ²·tr(K²(K + μI)⁻²), using the first rows(K) targets.
double fixed_design_risk(const Matrix& K_effective, const FixedDesignProblem& problem);
double fixed_design_risk(const EigPair& eig, const Vector& f_star, double noise_std, double mu);
double risk_ratio_bound(double gamma, double mu, double epsilon);

enum class TargetFunction { kSine, kQuadratic, kBump };
TargetFunction parse_target(const std::string& name);
std::string target_name(TargetFunction target);

struct SyntheticSpec {
  std::size_t n = 200;
  std::size_t d = 2;
  std::size_t n_clusters = 4;
  double cluster_std = 0.5;
  double center_spread = 4.0;
  TargetFunction target = TargetFunction::kSine;
  double sigma = 0.1;
  double mu = 1.0;
};

// Clustered gaussian inputs with geometrically shrinking cluster sizes; labels f* + N(0, σ²).
FixedDesignProblem generate_synthetic(const SyntheticSpec& spec, const RngHandle& rng);

struct MonotonicityViolation {
  std::string kind;  // tau, p, deff, xi, increment, psd
  std::size_t t = 0;
  std::size_t i = 0;  // 0 when the check is not per column
  double magnitude = 0.0;
};

struct MonotonicityReport {
  std::size_t steps_checked = 0;
  std::vector<MonotonicityViolation> violations;
  bool ok() const { return violations.empty(); }
};

MonotonicityReport monotonicity_audit(const Matrix& K, double gamma, std::size_t t_max);
MonotonicityReport monotonicity_audit(const Dataset& data, const KernelSpec& spec, double gamma,
                                      std::size_t t_max);

/// One metrics row per checkpoint.
struct MetricsRow {
  bool evaluated = true;  // false: single-pass run without the exact second pass
  std::size_t t = 0;
  std::size_t q = 0;
  double deff_exact = 0.0;
  double deff_tilde = 0.0;
  double spectral_gap = 0.0;
  double psi_gap = 0.0;
  bool lower_ok = false;
  bool upper_ok = false;
  std::optional<double> risk_exact;
  std::optional<double> risk_approx;
  double risk_ratio_bound = 0.0;
};

/// Second-pass checkpoint evaluation against the exact Gram matrix. Spectral data of each
/// prefix is cached, so one evaluator can score many runs over the same dataset.
class CheckpointEvaluator {
 public:
  CheckpointEvaluator(Matrix K, double gamma, double epsilon,
                      std::optional<FixedDesignProblem> problem = std::nullopt);

  struct Prefix {
    EigPair eig;
    Matrix upper;  // condition upper bound
    double deff = 0.0;
    std::optional<double> risk_exact;
  };
  const Prefix& prefix(std::size_t t);

  ConditionReport condition(const Selection& selection);
  MetricsRow evaluate(const RunCheckpoint& checkpoint, ConditionReport* report = nullptr);
  const Matrix& gram() const { return K_; }

 private:
  Matrix K_;
  double gamma_;
  double epsilon_;
  std::optional<FixedDesignProblem> problem_;
  std::map<std::size_t, Prefix> cache_;
};

}  // namespace ink
