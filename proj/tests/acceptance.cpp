// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "cli.hpp"
#include "ink/evaluation.hpp"
#include "ink/kernel.hpp"
#include "ink/leverage.hpp"
#include "ink/nystrom.hpp"
#include "ink/pipeline.hpp"
#include "ink/sampler.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace ink;

namespace {

constexpr double kGamma = 2.0;
constexpr double kBandwidth = 1.0;
constexpr double kEpsilon = 0.5;
constexpr double kDelta = 0.1;
constexpr std::uint64_t kDataSeed = 42;

// 1 - δ minus a 3σ binomial margin, rounded down to the stated 88%.
constexpr double kSuccessFloor = 0.88;

struct Outcome {
  bool pass = false;
  std::string detail;
};

const FixedDesignProblem& clustered() {
  static const FixedDesignProblem prob = generate_synthetic(SyntheticSpec{}, RngHandle(kDataSeed));
  return prob;
}

const KernelSpec& kernel() {
  static const KernelSpec spec = KernelSpec::gaussian(kBandwidth);
  return spec;
}

ExactOracle& shared_oracle() {
  static ExactOracle oracle(clustered().dataset, kernel(), kGamma);
  return oracle;
}

CheckpointEvaluator& shared_evaluator() {
  static CheckpointEvaluator ev(shared_oracle().full_gram(), kGamma, kEpsilon, clustered());
  return ev;
}

std::size_t n_points() { return clustered().dataset.size(); }

double full_deff() { return shared_oracle().profile(n_points()).deff; }

std::uint64_t sequential_q_bar() { return sequential_budget(full_deff(), kEpsilon, kDelta, n_points()); }

std::string frac(std::size_t k, std::size_t n) { return std::to_string(k) + "/" + std::to_string(n); }

// K S (SᵀKS + γI)⁻¹ SᵀK with an explicit t×Q selection matrix.
Matrix dense_nystrom(const Matrix& K, const Selection& sel, double gamma) {
  Matrix S = Matrix::Zero(K.rows(), static_cast<Eigen::Index>(sel.size()));
  for (std::size_t j = 0; j < sel.size(); ++j)
    S(static_cast<Eigen::Index>(sel.columns[j].index - 1), static_cast<Eigen::Index>(j)) = sel.columns[j].weight;
  const Matrix KS = K * S;
  const Matrix inner = S.transpose() * KS + gamma * Matrix::Identity(S.cols(), S.cols());
  return KS * test::explicit_inverse(inner) * KS.transpose();
}

Selection random_selection(std::size_t t, std::mt19937_64& gen) {
  std::uniform_int_distribution<std::size_t> pick(1, t);
  std::uniform_real_distribution<double> w(0.2, 3.0);
  const std::size_t q = pick(gen);
  Selection sel;
  sel.t = t;
  for (std::size_t j = 0; j < q; ++j) sel.columns.push_back({pick(gen), w(gen)});
  return sel;
}

Outcome psd_sandwich() {
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<std::size_t> size(1, 100);
  std::uniform_int_distribution<int> dim(1, 4);
  std::uniform_real_distribution<double> gamma(0.05, 5.0);
  std::uniform_real_distribution<double> scale(0.3, 3.0);
  std::size_t ok = 0;
  const std::size_t trials = 200;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const std::size_t t = size(gen);
    const Dataset data = test::random_dataset(t, dim(gen), gen, scale(gen));
    const KernelSpec spec = trial % 3 == 0 ? KernelSpec::polynomial(2, 1.0) : KernelSpec::gaussian(scale(gen));
    const Matrix K = gram(data, spec, t);
    const Selection sel = random_selection(t, gen);
    const Matrix Kt = materialize(nystrom_approx(K, sel, gamma(gen)));
    const double scale_tol = 1e-7 * std::max(1.0, K.diagonal().maxCoeff());
    if (psd_order_check(Matrix::Zero(t, t), Kt, scale_tol) && psd_order_check(Kt, K, scale_tol)) ++ok;
  }
  return {ok == trials, frac(ok, trials) + " instances with 0 <= K~ <= K"};
}

Outcome exact_formulas() {
  std::mt19937_64 gen(2);
  std::size_t rls_ok = 0;
  std::size_t inc_ok = 0;
  std::size_t inc_total = 0;
  const std::size_t streams = 50;
  const std::size_t length = 50;
  for (std::size_t s = 0; s < streams; ++s) {
    const Dataset data = test::random_dataset(length, 1 + static_cast<int>(s % 3), gen, 1.0 + 0.1 * static_cast<double>(s % 7));
    const double gamma = 0.25 + 0.25 * static_cast<double>(s % 8);
    const Matrix K = gram(data, kernel(), length);

    Eigen::SelfAdjointEigenSolver<Matrix> es(K);
    const Vector lam = es.eigenvalues().cwiseMax(0.0);
    const Matrix& U = es.eigenvectors();
    const Vector spectral = U.cwiseAbs2() * lam.cwiseQuotient((lam.array() + gamma).matrix());
    if ((exact_rls(K, gamma).tau - spectral).cwiseAbs().maxCoeff() <= 1e-10) ++rls_ok;

    std::vector<double> deff(length + 1, 0.0);
    for (std::size_t t = 1; t <= length; ++t) {
      Eigen::SelfAdjointEigenSolver<Matrix> et(K.topLeftCorner(t, t), Eigen::EigenvaluesOnly);
      const Vector l = et.eigenvalues().cwiseMax(0.0);
      deff[t] = l.cwiseQuotient((l.array() + gamma).matrix()).sum();
    }
    bool stream_ok = true;
    for (std::size_t t = 1; t < length; ++t) {
      const auto ti = static_cast<Eigen::Index>(t);
      const DeffIncrement inc = deff_increment_exact(K.topLeftCorner(ti, ti), K.block(0, ti, ti, 1), K(ti, ti), gamma);
      if (std::abs(inc.delta - (deff[t + 1] - deff[t])) > 1e-8) stream_ok = false;
    }
    inc_ok += stream_ok;
    ++inc_total;
  }
  return {rls_ok == streams && inc_ok == inc_total,
          "spectral form " + frac(rls_ok, streams) + ", increments " + frac(inc_ok, inc_total) + " streams"};
}

Outcome monotonicity() {
  std::size_t clean = 0;
  std::size_t violations = 0;
  const std::size_t streams = 50;
  for (std::uint64_t seed = 0; seed < streams; ++seed) {
    SyntheticSpec spec;
    spec.n = 100;
    const FixedDesignProblem prob = generate_synthetic(spec, RngHandle(1000 + seed));
    const double gamma = 0.5 + 0.5 * static_cast<double>(seed % 4);
    const MonotonicityReport r = monotonicity_audit(prob.dataset, kernel(), gamma, spec.n);
    clean += r.ok();
    violations += r.violations.size();
  }
  return {clean == streams, frac(clean, streams) + " streams clean, " + std::to_string(violations) + " violations"};
}

Outcome estimator_sandwiches() {
  std::mt19937_64 gen(4);
  std::size_t ok = 0;
  const std::size_t trials = 100;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const std::size_t t = 5 + trial % 40;
    const Dataset data = test::random_dataset(t + 1, 1 + static_cast<int>(trial % 3), gen, 1.5);
    const double gamma = 0.2 + 0.3 * static_cast<double>(trial % 6);
    const Matrix Kb = gram(data, kernel(), t + 1);
    const auto ti = static_cast<Eigen::Index>(t);
    const Matrix K = Kb.topLeftCorner(ti, ti);
    const Vector k_bar = Kb.block(0, ti, ti, 1);
    const double k_self = Kb(ti, ti);
    bool good = true;

    const Vector tau = exact_rls(Kb, gamma).tau;
    const Vector est = estimate_rls_batch(Kb, Kb, Kb.diagonal(), gamma, 0.0);
    for (Eigen::Index i = 0; i <= ti; ++i)
      if (est[i] < tau[i] / 2 - 1e-12 || est[i] > tau[i] + 1e-12) good = false;

    const double delta = deff_increment_exact(K, k_bar, k_self, gamma).delta;
    const double delta_tilde = estimate_deff_increment(K, k_bar, k_self, gamma, 0.0);
    const double rho = symmetric_eigenvalues(Kb)[0] / gamma;
    if (delta_tilde < delta - 1e-10 || delta_tilde > 4 * (1 + rho) * delta + 1e-10) good = false;
    ok += good;
  }
  return {ok == trials, frac(ok, trials) + " instances"};
}

Outcome shrink_expand_martingale() {
  const std::size_t trials = 100000;
  std::size_t checks = 0;
  std::size_t ok = 0;
  std::ostringstream worst;
  const RngHandle root(500);
  for (const std::uint64_t l : {1u, 2u, 4u}) {
    for (const std::uint64_t target : {2u, 5u, 10u}) {
      // With q̄ = 1 and p̃ = 1/(l' - 1/2) the chain fires below l' and stops at l'.
      const double p = 1.0 / (static_cast<double>(target) - 0.5);
      const RngHandle rng = root.split(10 * l + target);
      double sum = 0.0;
      double sum2 = 0.0;
      for (std::size_t s = 0; s < trials; ++s) {
        const double b = static_cast<double>(run_weight_chain(l, p, 1, 1, s, rng));
        sum += b;
        sum2 += b * b;
      }
      const double mean = sum / trials;
      const double sigma = std::sqrt(std::max(0.0, sum2 / trials - mean * mean) / trials);
      ++checks;
      if (std::abs(mean - static_cast<double>(l)) <= 3 * sigma) ++ok;
    }
  }
  for (const std::uint64_t M : {2u, 5u, 10u}) {
    const double p = 1.0 / (static_cast<double>(M) - 0.5);
    const RngHandle rng = root.split(100 + M);
    std::size_t survived = 0;
    for (std::size_t s = 0; s < trials; ++s) survived += run_weight_chain(1, p, 1, 1, s, rng) != 0;
    const double q = 1.0 / static_cast<double>(M);
    const double freq = static_cast<double>(survived) / trials;
    ++checks;
    if (std::abs(freq - q) <= 3 * std::sqrt(q * (1 - q) / trials)) ++ok;
    worst << " 1->" << M << ":" << freq;
  }
  return {ok == checks, frac(ok, checks) + " checks within 3 sigma; survival" + worst.str()};
}

Outcome batch_reconstruction() {
  const std::size_t n = n_points();
  const LeverageProfile& profile = shared_oracle().profile(n);
  const std::size_t m = batch_budget(profile.deff, kEpsilon, kDelta, n);
  const std::size_t trials = 200;
  std::size_t ok = 0;
  const RngHandle base(600);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const BatchResult r = batch_exact(shared_oracle().full_gram(), profile, kGamma, m, base.split(trial));
    ok += shared_evaluator().condition(r.selection).holds();
  }
  const double rate = static_cast<double>(ok) / trials;
  return {rate >= kSuccessFloor, frac(ok, trials) + " trials hold the condition, m=" + std::to_string(m)};
}

Outcome oracle_runs() {
  const std::uint64_t q_bar = sequential_q_bar();
  const std::size_t cap = 8 * q_bar;
  const std::size_t trials = 100;
  std::size_t ok = 0;
  std::size_t within_cap = 0;
  RunOptions opt;
  opt.checkpoint_every = 25;
  opt.cap_safety_factor = 2.0;  // let an overflow show up as a failed trial instead of an abort
  const RngHandle base(700);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const RunResult r = ink_oracle_run(clustered().dataset, kernel(), kGamma, q_bar, shared_oracle(), opt, base.split(trial));
    bool all = true;
    for (const RunCheckpoint& cp : r.checkpoints) all = all && shared_evaluator().condition(cp.selection()).holds();
    ok += all;
    within_cap += r.max_q <= cap;
  }
  const double rate = static_cast<double>(ok) / trials;
  return {rate >= kSuccessFloor && within_cap == trials,
          frac(ok, trials) + " trials hold at every checkpoint, " + frac(within_cap, trials) +
              " within Q<=8q (q=" + std::to_string(q_bar) + ")"};
}

Outcome estimate_runs() {
  const std::size_t n = n_points();
  const std::uint64_t q_bar = sequential_q_bar();
  const std::size_t cap = 8 * q_bar;
  const std::size_t trials = 100;
  const double gap_bound = kGamma / (1 - kEpsilon);
  std::vector<double> exact_deff(n + 1, 0.0);
  for (std::size_t t = 1; t <= n; ++t) exact_deff[t] = shared_oracle().profile(t).deff;

  std::size_t deff_ok = 0;
  std::size_t within_cap = 0;
  std::size_t gap_ok = 0;
  RunOptions opt;
  opt.checkpoint_every = 25;
  opt.cap_safety_factor = 2.0;
  const RngHandle base(800);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const RunResult r = ink_estimate_run(clustered().dataset, kernel(), kGamma, q_bar, kEpsilon, opt, base.split(trial));
    bool dominates = true;
    for (const RunCheckpoint& cp : r.checkpoints) dominates = dominates && cp.deff_tilde >= exact_deff[cp.t] - 1e-9;
    deff_ok += dominates;
    within_cap += r.max_q <= cap;
    gap_ok += shared_evaluator().condition(r.checkpoints.back().selection()).spectral_gap <= gap_bound;
  }
  const double rate = static_cast<double>(gap_ok) / trials;
  return {deff_ok == trials && within_cap == trials && rate >= kSuccessFloor,
          "deff~ >= deff " + frac(deff_ok, trials) + ", Q<=8q " + frac(within_cap, trials) + ", final gap " +
              frac(gap_ok, trials)};
}

Outcome risk_ratio() {
  const std::size_t problems = 20;
  std::size_t confirmed = 0;
  std::size_t ok = 0;
  const TargetFunction targets[] = {TargetFunction::kSine, TargetFunction::kQuadratic, TargetFunction::kBump};
  for (std::size_t k = 0; k < problems; ++k) {
    SyntheticSpec spec;
    spec.n = 120;
    spec.target = targets[k % 3];
    spec.sigma = 0.05 + 0.05 * static_cast<double>(k % 4);
    spec.mu = 0.5 + 0.5 * static_cast<double>(k % 3);
    const FixedDesignProblem prob = generate_synthetic(spec, RngHandle(2000 + k));
    ExactOracle oracle(prob.dataset, kernel(), kGamma);
    const std::uint64_t q_bar = sequential_budget(oracle.profile(spec.n).deff, kEpsilon, kDelta, spec.n);
    CheckpointEvaluator ev(oracle.full_gram(), kGamma, kEpsilon, prob);
    RunOptions opt;
    opt.checkpoint_every = 40;
    const RunResult r = ink_oracle_run(prob.dataset, kernel(), kGamma, q_bar, oracle, opt, RngHandle(3000 + k));
    for (const RunCheckpoint& cp : r.checkpoints) {
      ConditionReport rep;
      const MetricsRow row = ev.evaluate(cp, &rep);
      if (!rep.holds()) continue;
      ++confirmed;
      if (*row.risk_approx <= row.risk_ratio_bound * *row.risk_exact + 1e-8) ++ok;
    }
  }
  return {confirmed > 0 && ok == confirmed, frac(ok, confirmed) + " confirmed checkpoints within the bound"};
}

Outcome solver_equivalence() {
  std::mt19937_64 gen(10);
  std::normal_distribution<double> nd;
  std::size_t ok = 0;
  const std::size_t trials = 100;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const std::size_t t = 3 + trial % 60;
    const Dataset data = test::random_dataset(t, 2, gen, 1.5);
    const Matrix K = gram(data, kernel(), t);
    const Selection sel = random_selection(t, gen);
    const double gamma = 0.1 + 0.2 * static_cast<double>(trial % 5);
    const double mu = 0.05 + 0.3 * static_cast<double>(trial % 4);
    Vector y(static_cast<Eigen::Index>(t));
    for (auto& v : y) v = nd(gen);
    const Matrix A = dense_nystrom(K, sel, gamma) + mu * Matrix::Identity(K.rows(), K.cols());
    const Vector dense = test::explicit_inverse(A) * y;
    if ((krr_approx(nystrom_approx(K, sel, gamma), mu, y) - dense).norm() <= 1e-8 * dense.norm()) ++ok;
  }
  const Matrix K = gram(clustered().dataset, kernel(), 30);
  const Vector y = clustered().f_star.head(30);
  Selection empty;
  empty.t = 30;
  const Vector out = krr_approx(nystrom_approx(K, empty, kGamma), 0.7, y);
  const bool exact_empty = (out.array() == (y / 0.7).array()).all();
  return {ok == trials && exact_empty,
          frac(ok, trials) + " instances agree, empty dictionary " + (exact_empty ? "exact" : "inexact")};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome single_pass_and_determinism() {
  const std::size_t n = n_points();
  std::vector<int> consumed(n + 1, 0);
  std::set<std::size_t> evicted;
  std::size_t bad_queries = 0;
  std::size_t out_of_order = 0;
  std::size_t last = 0;
  RunObserver obs;
  obs.on_consume = [&](std::size_t i) {
    ++consumed[i];
    out_of_order += i != last + 1;
    last = i;
  };
  obs.on_kernel_query = [&](std::size_t arriving, std::size_t stored) {
    bad_queries += evicted.count(stored) > 0 || stored >= arriving;
  };
  obs.on_evict = [&](std::size_t, std::size_t i) { evicted.insert(i); };
  RunOptions opt;
  opt.observer = &obs;
  // A tight budget so that evictions actually happen.
  ink_estimate_run(clustered().dataset, kernel(), kGamma, 20, kEpsilon, opt, RngHandle(11));
  std::size_t once = 0;
  for (std::size_t i = 1; i <= n; ++i) once += consumed[i] == 1;

  const fs::path root = fs::temp_directory_path() / ("inksketch-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string data = (root / "data.csv").string();
  std::ostringstream sink;
  bool identical = ink::cli::run_cli({"generate", "--seed", std::to_string(kDataSeed), "--output", data}, sink, sink) == 0;
  const std::vector<std::string> files = {"checkpoints.json", "metrics.csv", "metrics.json", "conditions.json"};
  for (const std::string& algorithm : {"ink-estimate", "ink-oracle", "batch-exact"}) {
    std::vector<std::string> outputs;
    for (int rep = 0; rep < 2; ++rep) {
      const std::string out = (root / (algorithm + "-" + std::to_string(rep))).string();
      const int code = ink::cli::run_cli({"run", "--algorithm", algorithm, "--input", data, "--gamma", "2", "--budget",
                                          algorithm == "batch-exact" ? "200" : "60", "--seed", "5",
                                          "--checkpoint-every", "50", "--verify", "--output", out},
                                         sink, sink);
      identical = identical && (code == ink::cli::kOk || code == ink::cli::kConditionFailed);
      std::string all;
      for (const auto& f : files) all += slurp(fs::path(out) / f) + '\0';
      outputs.push_back(all);
    }
    identical = identical && outputs[0] == outputs[1] && outputs[0].size() > files.size();
  }
  fs::remove_all(root);

  return {once == n && out_of_order == 0 && bad_queries == 0 && !evicted.empty() && identical,
          "consumed once " + frac(once, n) + ", " + std::to_string(evicted.size()) + " evictions, " +
              std::to_string(bad_queries) + " queries against evicted or future indices, outputs " +
              (identical ? "byte-identical" : "differ")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"deterministic PSD sandwich", psd_sandwich},
      {"exact-formula oracles", exact_formulas},
      {"monotonicity audit", monotonicity},
      {"estimator sandwiches", estimator_sandwiches},
      {"shrink-expand martingale", shrink_expand_martingale},
      {"batch-exact reconstruction", batch_reconstruction},
      {"ink-oracle with exact oracle", oracle_runs},
      {"ink-estimate end to end", estimate_runs},
      {"risk ratio", risk_ratio},
      {"solver equivalence", solver_equivalence},
      {"single pass and determinism", single_pass_and_determinism},
  };
  std::printf("dataset: clustered gaussian n=%zu seed=%llu, gamma=%g, bandwidth=%g, deff=%.4f\n", n_points(),
              static_cast<unsigned long long>(kDataSeed), kGamma, kBandwidth, full_deff());
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %zu: %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
