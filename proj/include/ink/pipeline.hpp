#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "ink/kernel.hpp"
#include "ink/leverage.hpp"
#include "ink/nystrom.hpp"
#include "ink/sampler.hpp"

namespace ink {

/// Everything a sketching run carries between steps. Only dictionary members are stored:
/// their raw points, the exact kernel block among them and the streaming Nyström factor.
struct SketchState {
  std::size_t step = 0;  // number of points consumed so far
  double gamma = 1.0;
  Dictionary dictionary;
  std::vector<Point> points;  // aligned with dictionary.entries()
  Matrix kernel_block;        // K restricted to dictionary rows and columns
  NystromFactor factor;       // dictionary-row factor built with weights √b
  EstimatedProfile profile;
  RngHandle rng;
  EstimatorDiagnostics diagnostics;

  static SketchState initial(double gamma, std::uint64_t q_bar, RngHandle rng);
  Selection selection() const;
};

/// A newly streamed point together with its kernel column against the current dictionary.
struct Arrival {
  std::size_t index = 0;
  Point point;
  KernelColumn column;
};

struct OracleAnswer {
  ProbabilityMap tau;  // covers the dictionary plus the arriving index
  double deff = 0.0;
};

/// Source of α-approximate leverage scores and β-approximate effective dimension.
class RlsOracle {
 public:
  virtual ~RlsOracle() = default;
  virtual OracleAnswer query(const SketchState& state, const Arrival& arrival) = 0;
  virtual ApproximationFactors factors() const = 0;
};

/// α = β = 1 oracle answering from the exact Gram prefix. Desk scale; keeps its own copy of
/// the full Gram matrix and caches one profile per step, so one instance can serve many runs
/// over the same dataset.
class ExactOracle final : public RlsOracle {
 public:
  ExactOracle(const Dataset& data, const KernelSpec& spec, double gamma);

  OracleAnswer query(const SketchState& state, const Arrival& arrival) override;
  ApproximationFactors factors() const override { return {1.0, 1.0, 0.0}; }

  const LeverageProfile& profile(std::size_t t);
  const Matrix& full_gram() const { return gram_; }

 private:
  Matrix gram_;
  double gamma_;
  std::vector<std::optional<LeverageProfile>> cache_;
};

/// Incremental estimators fed with the weighted-dictionary view of the sketch: the estimators
/// see S K_DD S in place of the past Gram, S K̃_t[D,D] S in place of K̃_t and S k̄_D in place of k̄.
class EstimatorOracle final : public RlsOracle {
 public:
  EstimatorOracle(double gamma, double epsilon);

  OracleAnswer query(const SketchState& state, const Arrival& arrival) override;
  // β uses the sketch's largest eigenvalue, a lower bound on λ_max(K_t).
  ApproximationFactors factors() const override;

  const EstimatorDiagnostics& diagnostics() const { return diagnostics_; }

 private:
  double gamma_;
  double epsilon_;
  double sketch_lambda_max_ = 0.0;
  EstimatorDiagnostics diagnostics_;
};

/// Optional hooks for instrumented runs.
struct RunObserver {
  std::function<void(std::size_t index)> on_consume;
  std::function<void(std::size_t arriving, std::size_t stored)> on_kernel_query;
  std::function<void(std::size_t step, std::size_t index)> on_evict;
};

struct RunCheckpoint {
  std::size_t t = 0;
  std::size_t q = 0;
  double deff_tilde = 0.0;
  std::vector<std::size_t> indices;      // 1-based; repeated for with-replacement draws
  std::vector<double> weights;           // selection weight per entry of `indices`
  std::vector<std::uint64_t> b;          // integer weights (sequential runs only)
  double elapsed_seconds = 0.0;
  std::optional<Matrix> k_tilde;         // dense K̃_t when materialization was requested

  Selection selection() const;
};

struct RunOptions {
  std::size_t checkpoint_every = 0;  // 0: final checkpoint only
  double cap_safety_factor = 1.0;    // abort once Q_t > 8·q̄·factor
  bool materialize_checkpoints = false;
  RunObserver* observer = nullptr;
};

struct StepReport {
  std::size_t evicted = 0;
  bool new_index_kept = false;
  std::size_t bernoulli_draws = 0;
};

struct RunResult {
  NystromFactor factor;  // dictionary-row factor of the final step
  Selection selection;
  std::vector<RunCheckpoint> checkpoints;
  std::vector<std::size_t> q_trace;   // Q_t after every step
  std::vector<double> deff_trace;     // d̃eff_t after every step
  EstimatorDiagnostics diagnostics;
  std::size_t max_q = 0;
  std::uint64_t q_bar = 0;
};

// Dictionary hard cap floor(8·q̄·safety).
std::size_t dictionary_hard_cap(std::uint64_t q_bar, double safety_factor);

// Builds the arriving column from the stored dictionary points only.
Arrival make_arrival(const SketchState& state, const KernelSpec& spec, std::size_t index,
                     Point point, RunObserver* observer = nullptr);

SketchState ink_step(SketchState state, const Arrival& arrival, RlsOracle& oracle,
                     const RunOptions& options = {}, StepReport* report = nullptr);

RunResult ink_oracle_run(const Dataset& data, const KernelSpec& spec, double gamma,
                         std::uint64_t q_bar, RlsOracle& oracle, const RunOptions& options,
                         RngHandle rng);

RunResult ink_estimate_run(const Dataset& data, const KernelSpec& spec, double gamma,
                           std::uint64_t q_bar, double epsilon, const RunOptions& options,
                           RngHandle rng);

struct BatchResult {
  NystromFactor factor;  // all rows of K_n
  Selection selection;
  LeverageProfile profile;
  std::vector<std::size_t> draws;
  RunCheckpoint checkpoint;
};

BatchResult batch_exact(const Dataset& data, const KernelSpec& spec, double gamma,
                        std::size_t m, const RngHandle& rng);
// Same, reusing a Gram matrix and its exact profile (Monte Carlo loops).
BatchResult batch_exact(const Matrix& K, const LeverageProfile& profile, double gamma,
                        std::size_t m, const RngHandle& rng);

// Evaluation-only second pass: Nyström factor over rows 1..t for a stored selection.
NystromFactor nystrom_from_dataset(const Dataset& data, const KernelSpec& spec,
                                   const Selection& selection, double gamma);

// Budget helpers: q̄ = ceil(28αβ·deff/ε²·log(4n/δ)) and m = ceil(2·deff/ε²·log(n/δ)).
std::uint64_t sequential_budget(double deff, double epsilon, double delta, std::size_t n,
                                double alpha = 1.0, double beta = 1.0);
std::size_t batch_budget(double deff, double epsilon, double delta, std::size_t n);

}  // namespace ink
