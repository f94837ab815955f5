#include "ink/evaluation.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "ink/errors.hpp"
#include "ink/leverage.hpp"

namespace ink {

namespace {

enum SyntheticKey : std::uint64_t { kClusterCenter = 1, kAssignment = 2, kOffset = 3, kNoise = 4 };

double standard_normal(const RngHandle& rng, std::uint64_t key, std::uint64_t a, std::uint64_t b) {
  const auto stream = static_cast<std::uint64_t>(RngStream::kSynthetic);
  const double u1 = 1.0 - rng.uniform(stream, key, a, 2 * b);  // (0, 1]
  const double u2 = rng.uniform(stream, key, a, 2 * b + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double target_value(TargetFunction target, const Point& x, double spread) {
  switch (target) {
    case TargetFunction::kSine:
      return std::sin(x.sum());
    case TargetFunction::kQuadratic:
      return x.squaredNorm() / static_cast<double>(x.size());
    case TargetFunction::kBump:
      return std::exp(-x.squaredNorm() / (2.0 * spread * spread));
  }
  return 0.0;
}

void require_square(const Matrix& A, const char* what) {
  if (A.rows() != A.cols()) throw InputError(std::string(what) + ": matrix is not square");
}

}  // namespace

Matrix condition_upper_bound(const Matrix& K, double gamma, double epsilon) {
  require_square(K, "condition_upper_bound");
  if (!(gamma > 0.0)) throw InputError("gamma must be positive");
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw InputError("epsilon must lie in [0, 1)");
  const EigPair eig = symmetric_eig(K);
  Vector scale(eig.eigenvalues.size());
  for (Eigen::Index j = 0; j < scale.size(); ++j) {
    const double l = std::max(eig.eigenvalues[j], 0.0);
    scale[j] = gamma / (1.0 - epsilon) * l / (l + gamma);
  }
  return eig.eigenvectors * scale.asDiagonal() * eig.eigenvectors.transpose();
}

ConditionReport check_condition_with_bound(const Matrix& K, const Matrix& K_tilde,
                                           const Matrix& upper) {
  if (K.rows() != K_tilde.rows() || K.cols() != K_tilde.cols() || K.rows() != upper.rows() ||
      K.cols() != upper.cols()) {
    std::ostringstream msg;
    msg << "check_condition: shape mismatch (" << K.rows() << "x" << K.cols() << " vs "
        << K_tilde.rows() << "x" << K_tilde.cols() << ")";
    throw InputError(msg.str());
  }
  ConditionReport r;
  r.step = static_cast<std::size_t>(K.rows());
  const Matrix gap = symmetrized(K - K_tilde);
  r.lower_psd_ok = psd_order_check(Matrix::Zero(K.rows(), K.cols()), gap, kConditionTolerance);
  r.upper_psd_ok = psd_order_check(gap, upper, kConditionTolerance);
  r.spectral_gap = K.rows() == 0 ? 0.0 : spectral_norm(gap);
  return r;
}

ConditionReport check_condition(const Matrix& K, const Matrix& K_tilde, double gamma,
                                double epsilon) {
  return check_condition_with_bound(K, K_tilde, condition_upper_bound(K, gamma, epsilon));
}

double psi_gap(const EigPair& eig, const Selection& selection, double gamma) {
  const auto t = eig.eigenvalues.size();
  if (static_cast<std::size_t>(t) != selection.t)
    throw InputError("psi_gap: selection size does not match the Gram matrix");
  if (t == 0) return 0.0;
  Vector scale(t);
  for (Eigen::Index j = 0; j < t; ++j) {
    const double l = std::max(eig.eigenvalues[j], 0.0);
    scale[j] = std::sqrt(l / (l + gamma));
  }
  const Matrix psi = scale.asDiagonal() * eig.eigenvectors.transpose();
  const Vector residual = Vector::Ones(t) - selection.squared_weight_mass();
  const Matrix M = psi * residual.asDiagonal() * psi.transpose();
  return symmetric_eigenvalues(symmetrized(M))[0];
}

double psi_gap(const Matrix& K, const Selection& selection, double gamma) {
  require_square(K, "psi_gap");
  return psi_gap(symmetric_eig(K), selection, gamma);
}

double fixed_design_risk(const EigPair& eig, const Vector& f_star, double noise_std, double mu) {
  if (!(mu > 0.0)) throw InputError("risk: mu must be positive");
  if (noise_std < 0.0) throw InputError("risk: noise_std must be nonnegative");
  if (f_star.size() != eig.eigenvalues.size())
    throw InputError("risk: target length does not match the Gram matrix");
  const Vector coords = eig.eigenvectors.transpose() * f_star;
  double bias = 0.0;
  double variance = 0.0;
  for (Eigen::Index j = 0; j < coords.size(); ++j) {
    const double l = eig.eigenvalues[j];
    const double shrink = mu / (l + mu);
    bias += shrink * shrink * coords[j] * coords[j];
    const double pass = l / (l + mu);
    variance += pass * pass;
  }
  return bias + noise_std * noise_std * variance;
}

double fixed_design_risk(const Matrix& K_effective, const FixedDesignProblem& problem) {
  require_square(K_effective, "risk");
  const auto t = K_effective.rows();
  if (problem.f_star.size() < t) throw InputError("risk: fewer targets than Gram rows");
  return fixed_design_risk(symmetric_eig(K_effective), problem.f_star.head(t), problem.noise_std,
                           problem.mu);
}

double risk_ratio_bound(double gamma, double mu, double epsilon) {
  const double f = 1.0 + (gamma / mu) / (1.0 - epsilon);
  return f * f;
}

TargetFunction parse_target(const std::string& name) {
  if (name == "sine") return TargetFunction::kSine;
  if (name == "quadratic") return TargetFunction::kQuadratic;
  if (name == "bump") return TargetFunction::kBump;
  throw InputError("unknown target function '" + name + "' (expected sine, quadratic or bump)");
}

std::string target_name(TargetFunction target) {
  switch (target) {
    case TargetFunction::kSine:
      return "sine";
    case TargetFunction::kQuadratic:
      return "quadratic";
    case TargetFunction::kBump:
      return "bump";
  }
  return "unknown";
}

FixedDesignProblem generate_synthetic(const SyntheticSpec& spec, const RngHandle& rng) {
  if (spec.n < 1) throw InputError("synthetic: n must be at least 1");
  if (spec.d < 1) throw InputError("synthetic: d must be at least 1");
  if (spec.n_clusters < 1) throw InputError("synthetic: need at least one cluster");
  if (spec.cluster_std < 0.0 || spec.sigma < 0.0) throw InputError("synthetic: negative std");
  if (!(spec.mu > 0.0)) throw InputError("synthetic: mu must be positive");
  const auto stream = static_cast<std::uint64_t>(RngStream::kSynthetic);
  const auto d = static_cast<Eigen::Index>(spec.d);

  std::vector<Point> centers(spec.n_clusters, Point(d));
  for (std::size_t c = 0; c < spec.n_clusters; ++c)
    for (Eigen::Index j = 0; j < d; ++j)
      centers[c][j] = spec.center_spread * (2.0 * rng.uniform(stream, kClusterCenter, c, static_cast<std::uint64_t>(j)) - 1.0);

  // Cluster c receives mass proportional to 2^-c.
  std::vector<double> cdf(spec.n_clusters);
  double acc = 0.0;
  for (std::size_t c = 0; c < spec.n_clusters; ++c) {
    acc += std::ldexp(1.0, -static_cast<int>(std::min<std::size_t>(c, 1000)));
    cdf[c] = acc;
  }

  std::vector<Point> points;
  std::vector<double> labels;
  points.reserve(spec.n);
  labels.reserve(spec.n);
  Vector f_star(static_cast<Eigen::Index>(spec.n));
  for (std::size_t i = 0; i < spec.n; ++i) {
    const double u = rng.uniform(stream, kAssignment, i) * acc;
    auto c = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    c = std::min(c, spec.n_clusters - 1);
    Point x = centers[c];
    for (Eigen::Index j = 0; j < d; ++j)
      x[j] += spec.cluster_std * standard_normal(rng, kOffset, i, static_cast<std::uint64_t>(j));
    const double f = target_value(spec.target, x, spec.center_spread);
    f_star[static_cast<Eigen::Index>(i)] = f;
    labels.push_back(spec.sigma == 0.0 ? f : f + spec.sigma * standard_normal(rng, kNoise, i, 0));
    points.push_back(std::move(x));
  }
  return FixedDesignProblem{Dataset(std::move(points), std::move(labels)), std::move(f_star),
                            spec.sigma, spec.mu};
}

MonotonicityReport monotonicity_audit(const Matrix& K, double gamma, std::size_t t_max) {
  require_square(K, "monotonicity_audit");
  if (t_max > static_cast<std::size_t>(K.rows()))
    throw InputError("monotonicity_audit: t_max exceeds the Gram size");
  constexpr double kOrderTol = 1e-9;
  constexpr double kIdentityTol = 1e-8;
  MonotonicityReport report;
  if (t_max < 2) return report;

  if (K(0, 0) < 0.0) {
    report.violations.push_back({"psd", 1, 0, -K(0, 0)});
    return report;
  }
  LeverageProfile prev = exact_rls(K.topLeftCorner(1, 1), gamma);
  for (std::size_t t = 1; t < t_max; ++t) {
    const auto n = static_cast<Eigen::Index>(t);
    LeverageProfile next;
    try {
      next = exact_rls(K.topLeftCorner(n + 1, n + 1), gamma);
    } catch (const InputError&) {
      report.violations.push_back({"psd", t + 1, 0, -min_eigenvalue(K.topLeftCorner(n + 1, n + 1))});
      break;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto idx = static_cast<std::size_t>(i + 1);
      const double dtau = next.tau[i] - prev.tau[i];
      if (dtau > kOrderTol) report.violations.push_back({"tau", t, idx, dtau});
      const double dp = next.probabilities[i] - prev.probabilities[i];
      if (dp > kOrderTol) report.violations.push_back({"p", t, idx, dp});
    }
    const double ddeff = next.deff - prev.deff;
    if (ddeff < -kOrderTol) report.violations.push_back({"deff", t, 0, -ddeff});

    const Vector k_bar = K.block(0, n, n, 1);
    const double k_self = K(n, n);
    try {
      const DeffIncrement inc = deff_increment_exact(K.topLeftCorner(n, n), k_bar, k_self, gamma);
      if (inc.xi < gamma - kOrderTol) report.violations.push_back({"xi", t, 0, gamma - inc.xi});
      const double mismatch = std::abs(ddeff - inc.delta);
      if (mismatch > kIdentityTol) report.violations.push_back({"increment", t, 0, mismatch});
    } catch (const InputError&) {
      report.violations.push_back({"xi", t, 0, std::numeric_limits<double>::infinity()});
    }
    prev = next;
    ++report.steps_checked;
  }
  return report;
}

MonotonicityReport monotonicity_audit(const Dataset& data, const KernelSpec& spec, double gamma,
                                      std::size_t t_max) {
  if (t_max > data.size()) throw InputError("monotonicity_audit: t_max exceeds the dataset");
  if (t_max > kDeskScaleCap) throw InputError("monotonicity_audit: above the desk-scale cap");
  return monotonicity_audit(gram(data, spec, t_max), gamma, t_max);
}

CheckpointEvaluator::CheckpointEvaluator(Matrix K, double gamma, double epsilon,
                                         std::optional<FixedDesignProblem> problem)
    : K_(std::move(K)), gamma_(gamma), epsilon_(epsilon), problem_(std::move(problem)) {
  require_square(K_, "CheckpointEvaluator");
  if (!(gamma_ > 0.0)) throw InputError("gamma must be positive");
  if (!(epsilon_ >= 0.0 && epsilon_ < 1.0)) throw InputError("epsilon must lie in [0, 1)");
  if (static_cast<std::size_t>(K_.rows()) > kDeskScaleCap)
    throw InputError("verification refused: dataset exceeds the desk-scale cap");
  if (problem_ && problem_->f_star.size() != K_.rows())
    throw InputError("CheckpointEvaluator: target length does not match the Gram matrix");
}

const CheckpointEvaluator::Prefix& CheckpointEvaluator::prefix(std::size_t t) {
  if (t < 1 || t > static_cast<std::size_t>(K_.rows()))
    throw InputError("checkpoint step outside the dataset");
  auto it = cache_.find(t);
  if (it != cache_.end()) return it->second;
  const auto n = static_cast<Eigen::Index>(t);
  Prefix p;
  p.eig = symmetric_eig(K_.topLeftCorner(n, n));
  Vector scale(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double l = std::max(p.eig.eigenvalues[j], 0.0);
    scale[j] = l / (l + gamma_);
    p.deff += scale[j];
  }
  p.upper = p.eig.eigenvectors * (gamma_ / (1.0 - epsilon_) * scale).asDiagonal() *
            p.eig.eigenvectors.transpose();
  if (problem_)
    p.risk_exact = fixed_design_risk(p.eig, problem_->f_star.head(n), problem_->noise_std, problem_->mu);
  return cache_.emplace(t, std::move(p)).first->second;
}

ConditionReport CheckpointEvaluator::condition(const Selection& selection) {
  const Prefix& p = prefix(selection.t);
  const auto n = static_cast<Eigen::Index>(selection.t);
  const Matrix K_t = K_.topLeftCorner(n, n);
  const Matrix K_tilde = materialize(nystrom_approx(K_t, selection, gamma_));
  ConditionReport r = check_condition_with_bound(K_t, K_tilde, p.upper);
  r.step = selection.t;
  r.psi_gap = psi_gap(p.eig, selection, gamma_);
  return r;
}

MetricsRow CheckpointEvaluator::evaluate(const RunCheckpoint& checkpoint, ConditionReport* report) {
  const Selection selection = checkpoint.selection();
  const Prefix& p = prefix(checkpoint.t);
  const auto n = static_cast<Eigen::Index>(checkpoint.t);
  const Matrix K_t = K_.topLeftCorner(n, n);
  const Matrix K_tilde = checkpoint.k_tilde ? *checkpoint.k_tilde
                                            : materialize(nystrom_approx(K_t, selection, gamma_));
  ConditionReport cond = check_condition_with_bound(K_t, K_tilde, p.upper);
  cond.step = checkpoint.t;
  cond.psi_gap = psi_gap(p.eig, selection, gamma_);

  MetricsRow row;
  row.t = checkpoint.t;
  row.q = checkpoint.q;
  row.deff_exact = p.deff;
  row.deff_tilde = checkpoint.deff_tilde;
  row.spectral_gap = cond.spectral_gap;
  row.psi_gap = *cond.psi_gap;
  row.lower_ok = cond.lower_psd_ok;
  row.upper_ok = cond.upper_psd_ok;
  if (problem_) {
    row.risk_exact = p.risk_exact;
    row.risk_approx = fixed_design_risk(symmetric_eig(K_tilde), problem_->f_star.head(n),
                                        problem_->noise_std, problem_->mu);
    row.risk_ratio_bound = risk_ratio_bound(gamma_, problem_->mu, epsilon_);
  } else {
    row.risk_ratio_bound = std::numeric_limits<double>::quiet_NaN();
  }
  if (report) *report = cond;
  return row;
}

}  // namespace ink
