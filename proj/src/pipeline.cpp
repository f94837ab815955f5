#include "ink/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "ink/errors.hpp"

namespace ink {

namespace {

using Clock = std::chrono::steady_clock;

Vector sqrt_weights(const Dictionary& dict) {
  Vector w(static_cast<Eigen::Index>(dict.size()));
  for (std::size_t j = 0; j < dict.size(); ++j)
    w[static_cast<Eigen::Index>(j)] = std::sqrt(static_cast<double>(dict.entries()[j].weight));
  return w;
}

RunCheckpoint checkpoint_of(const SketchState& state, Clock::time_point start) {
  RunCheckpoint cp;
  cp.t = state.step;
  cp.q = state.dictionary.size();
  cp.deff_tilde = state.profile.deff_tilde;
  for (const auto& e : state.dictionary.entries()) {
    cp.indices.push_back(e.index);
    cp.b.push_back(e.weight);
    cp.weights.push_back(std::sqrt(static_cast<double>(e.weight)));
  }
  cp.elapsed_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return cp;
}

RunResult run_sequential(const Dataset& data, const KernelSpec& spec, double gamma,
                         std::uint64_t q_bar, RlsOracle& oracle, const RunOptions& options,
                         RngHandle rng) {
  const auto start = Clock::now();
  SketchState state = SketchState::initial(gamma, q_bar, rng);
  RunResult result;
  result.q_bar = q_bar;
  result.q_trace.reserve(data.size());
  result.deff_trace.reserve(data.size());

  // Points are read once, in order; nothing but the dictionary is kept between steps.
  for (std::size_t index = 1; index <= data.size(); ++index) {
    if (options.observer && options.observer->on_consume) options.observer->on_consume(index);
    Arrival arrival = make_arrival(state, spec, index, data.point(index), options.observer);
    state = ink_step(std::move(state), arrival, oracle, options);

    result.q_trace.push_back(state.dictionary.size());
    result.deff_trace.push_back(state.profile.deff_tilde);
    result.max_q = std::max(result.max_q, state.dictionary.size());

    const bool at_checkpoint = index == data.size() ||
                               (options.checkpoint_every > 0 && index % options.checkpoint_every == 0);
    if (at_checkpoint) {
      RunCheckpoint cp = checkpoint_of(state, start);
      if (options.materialize_checkpoints)
        cp.k_tilde = materialize(nystrom_from_dataset(data, spec, cp.selection(), gamma));
      result.checkpoints.push_back(std::move(cp));
    }
  }
  result.factor = state.factor;
  result.selection = state.selection();
  result.diagnostics = state.diagnostics;
  return result;
}

}  // namespace

SketchState SketchState::initial(double gamma, std::uint64_t q_bar, RngHandle rng) {
  if (!(gamma > 0.0)) throw InputError("gamma must be positive");
  SketchState s;
  s.gamma = gamma;
  s.dictionary = Dictionary(q_bar);
  s.kernel_block = Matrix(0, 0);
  s.factor.gamma = gamma;
  s.rng = rng;
  return s;
}

Selection SketchState::selection() const {
  Selection sel;
  sel.t = step;
  for (const auto& e : dictionary.entries())
    sel.columns.push_back({e.index, std::sqrt(static_cast<double>(e.weight))});
  return sel;
}

Selection RunCheckpoint::selection() const {
  Selection sel;
  sel.t = t;
  for (std::size_t j = 0; j < indices.size(); ++j) sel.columns.push_back({indices[j], weights[j]});
  return sel;
}

ExactOracle::ExactOracle(const Dataset& data, const KernelSpec& spec, double gamma)
    : gram_(gram(data, spec, data.size())), gamma_(gamma), cache_(data.size() + 1) {
  if (!(gamma > 0.0)) throw InputError("gamma must be positive");
}

const LeverageProfile& ExactOracle::profile(std::size_t t) {
  if (t < 1 || t >= cache_.size()) throw InputError("exact oracle queried beyond its dataset");
  auto& slot = cache_[t];
  if (!slot) {
    const auto n = static_cast<Eigen::Index>(t);
    slot = exact_rls(gram_.topLeftCorner(n, n), gamma_);
  }
  return *slot;
}

OracleAnswer ExactOracle::query(const SketchState& state, const Arrival& arrival) {
  const LeverageProfile& prof = profile(arrival.index);
  OracleAnswer answer;
  answer.deff = prof.deff;
  for (const auto& e : state.dictionary.entries())
    answer.tau.emplace_hint(answer.tau.end(), e.index, prof.tau[static_cast<Eigen::Index>(e.index - 1)]);
  answer.tau.emplace_hint(answer.tau.end(), arrival.index,
                          prof.tau[static_cast<Eigen::Index>(arrival.index - 1)]);
  return answer;
}

EstimatorOracle::EstimatorOracle(double gamma, double epsilon) : gamma_(gamma), epsilon_(epsilon) {
  if (!(gamma > 0.0)) throw InputError("gamma must be positive");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InputError("epsilon must lie in (0, 1)");
}

ApproximationFactors EstimatorOracle::factors() const {
  return approximation_factors(epsilon_, gamma_, sketch_lambda_max_);
}

OracleAnswer EstimatorOracle::query(const SketchState& state, const Arrival& arrival) {
  const auto q = static_cast<Eigen::Index>(state.dictionary.size());
  const Vector w = sqrt_weights(state.dictionary);
  const double k_self = arrival.column.self_term;

  // Weighted dictionary coordinates: surrogate past Gram S K_DD S and sketch S K̃_D S.
  Matrix sketch(q, q);
  if (q > 0) {
    const Matrix weighted_embedding = w.asDiagonal() * state.factor.embedding();
    sketch = weighted_embedding * weighted_embedding.transpose();
    sketch_lambda_max_ = std::max(sketch_lambda_max_, symmetric_eigenvalues(sketch)[0]);
  }
  const Vector k_bar = w.asDiagonal() * arrival.column.cross;

  Matrix bordered(q + 1, q + 1);
  bordered.topLeftCorner(q, q) = sketch;
  bordered.topRightCorner(q, 1) = k_bar;
  bordered.bottomLeftCorner(1, q) = k_bar.transpose();
  bordered(q, q) = k_self;

  Matrix columns(q + 1, q + 1);
  Vector diags(q + 1);
  if (q > 0) {
    columns.topLeftCorner(q, q) = w.asDiagonal() * state.kernel_block;
    columns.bottomLeftCorner(1, q) = arrival.column.cross.transpose();
    diags.head(q) = state.kernel_block.diagonal();
  }
  columns.topRightCorner(q, 1) = k_bar;
  columns(q, q) = k_self;
  diags[q] = k_self;

  const Vector tau = estimate_rls_batch(bordered, columns, diags, gamma_, epsilon_, &diagnostics_);

  OracleAnswer answer;
  for (Eigen::Index j = 0; j < q; ++j)
    answer.tau.emplace_hint(answer.tau.end(), state.dictionary.entries()[static_cast<std::size_t>(j)].index, tau[j]);
  answer.tau.emplace_hint(answer.tau.end(), arrival.index, tau[q]);

  if (state.step == 0 || !(state.profile.deff_tilde > 0.0)) {
    answer.deff = initial_deff(k_self, gamma_);
  } else {
    const double delta = estimate_deff_increment(sketch, k_bar, k_self, gamma_, epsilon_);
    answer.deff = update_deff(state.profile.deff_tilde, delta, epsilon_);
  }
  return answer;
}

std::size_t dictionary_hard_cap(std::uint64_t q_bar, double safety_factor) {
  if (!(safety_factor > 0.0)) throw InputError("cap safety factor must be positive");
  return static_cast<std::size_t>(std::floor(8.0 * static_cast<double>(q_bar) * safety_factor));
}

Arrival make_arrival(const SketchState& state, const KernelSpec& spec, std::size_t index,
                     Point point, RunObserver* observer) {
  Arrival a;
  a.index = index;
  a.column.index = index;
  a.column.restrict_to = state.dictionary.indices();
  a.column.cross.resize(static_cast<Eigen::Index>(state.points.size()));
  for (std::size_t j = 0; j < state.points.size(); ++j) {
    if (observer && observer->on_kernel_query)
      observer->on_kernel_query(index, state.dictionary.entries()[j].index);
    a.column.cross[static_cast<Eigen::Index>(j)] = evaluate(spec, point, state.points[j]);
  }
  a.column.self_term = evaluate(spec, point, point);
  a.point = std::move(point);
  return a;
}

SketchState ink_step(SketchState state, const Arrival& arrival, RlsOracle& oracle,
                     const RunOptions& options, StepReport* report) {
  const std::size_t next = state.step + 1;
  if (arrival.index != next) {
    std::ostringstream msg;
    msg << "ink_step: expected index " << next << ", got " << arrival.index;
    throw InputError(msg.str());
  }
  if (arrival.column.restrict_to != state.dictionary.indices())
    throw InputError("ink_step: column is not restricted to the current dictionary");

  const OracleAnswer answer = oracle.query(state, arrival);
  if (!(answer.deff >= 0.0)) throw NumericalError("oracle returned a negative effective dimension");

  ProbabilityMap proposed;
  for (const auto& [index, tau] : answer.tau) proposed[index] = answer.deff > 0.0 ? tau / answer.deff : 0.0;
  ProbabilityMap p_tilde = clamp_probabilities(proposed, state.dictionary.probabilities());
  // The arriving index has no history; it is only held to the initial value p̃ = 1.
  p_tilde[next] = std::min(p_tilde.at(next), 1.0);

  // A column with zero estimated leverage cannot survive its chain; drop it up front.
  Dictionary live(state.dictionary.q_bar());
  std::vector<std::size_t> dropped;
  for (const auto& e : state.dictionary.entries()) {
    if (p_tilde.at(e.index) > 0.0) {
      live.insert(e);
    } else {
      dropped.push_back(e.index);
    }
  }
  const bool new_is_null = !(p_tilde.at(next) > 0.0);
  if (new_is_null) p_tilde[next] = 1.0;  // placeholder; discarded below

  ShrinkExpandStats stats;
  Dictionary updated = shrink_expand(live, p_tilde, next, next, state.rng, &stats);
  if (new_is_null && updated.contains(next)) {
    Dictionary pruned(updated.q_bar());
    for (const auto& e : updated.entries())
      if (e.index != next) pruned.insert(e);
    updated = std::move(pruned);
    stats.new_index_kept = false;
  }
  stats.evicted.insert(stats.evicted.end(), dropped.begin(), dropped.end());

  const std::size_t cap = dictionary_hard_cap(updated.q_bar(), options.cap_safety_factor);
  if (updated.size() > cap) {
    std::ostringstream msg;
    msg << "dictionary size " << updated.size() << " exceeds hard cap " << cap << " at step " << next;
    throw InvariantViolation(msg.str());
  }

  // Carry over stored points and kernel entries for survivors; append the new column if kept.
  const auto& old_entries = state.dictionary.entries();
  std::vector<Eigen::Index> keep;
  for (std::size_t j = 0; j < old_entries.size(); ++j)
    if (updated.contains(old_entries[j].index)) keep.push_back(static_cast<Eigen::Index>(j));
  const bool kept_new = updated.contains(next);
  const auto q_new = static_cast<Eigen::Index>(keep.size() + (kept_new ? 1 : 0));

  Matrix block(q_new, q_new);
  std::vector<Point> points;
  points.reserve(static_cast<std::size_t>(q_new));
  for (std::size_t a = 0; a < keep.size(); ++a) {
    points.push_back(std::move(state.points[static_cast<std::size_t>(keep[a])]));
    for (std::size_t c = 0; c < keep.size(); ++c)
      block(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) = state.kernel_block(keep[a], keep[c]);
  }
  if (kept_new) {
    const Eigen::Index last = q_new - 1;
    for (std::size_t a = 0; a < keep.size(); ++a) {
      const double v = arrival.column.cross[keep[a]];
      block(static_cast<Eigen::Index>(a), last) = v;
      block(last, static_cast<Eigen::Index>(a)) = v;
    }
    block(last, last) = arrival.column.self_term;
    points.push_back(arrival.point);
  }

  if (options.observer && options.observer->on_evict) {
    for (const auto i : stats.evicted) options.observer->on_evict(next, i);
  }
  if (report) {
    report->evicted = stats.evicted.size();
    report->new_index_kept = kept_new;
    report->bernoulli_draws = stats.bernoulli_draws;
  }

  state.step = next;
  state.dictionary = std::move(updated);
  state.points = std::move(points);
  state.kernel_block = std::move(block);
  state.factor = nystrom_from_blocks(state.kernel_block, state.kernel_block, state.selection(),
                                     state.dictionary.indices(), state.gamma);
  state.profile.tau_tilde = answer.tau;
  state.profile.deff_tilde = answer.deff;
  state.profile.p_tilde = state.dictionary.probabilities();
  return state;
}

RunResult ink_oracle_run(const Dataset& data, const KernelSpec& spec, double gamma,
                         std::uint64_t q_bar, RlsOracle& oracle, const RunOptions& options,
                         RngHandle rng) {
  return run_sequential(data, spec, gamma, q_bar, oracle, options, rng);
}

RunResult ink_estimate_run(const Dataset& data, const KernelSpec& spec, double gamma,
                           std::uint64_t q_bar, double epsilon, const RunOptions& options,
                           RngHandle rng) {
  EstimatorOracle oracle(gamma, epsilon);
  RunResult result = run_sequential(data, spec, gamma, q_bar, oracle, options, rng);
  result.diagnostics.rls_clamped_low += oracle.diagnostics().rls_clamped_low;
  result.diagnostics.rls_clamped_high += oracle.diagnostics().rls_clamped_high;
  return result;
}

BatchResult batch_exact(const Matrix& K, const LeverageProfile& profile, double gamma,
                        std::size_t m, const RngHandle& rng) {
  if (m < 1) throw InputError("batch_exact: m must be at least 1");
  BatchResult out;
  out.profile = profile;
  out.draws = direct_sample(profile.probabilities, m, rng);
  const auto weights = batch_sampling_weights(out.draws, profile.probabilities);
  const auto t = static_cast<std::size_t>(K.rows());
  out.selection = build_selection(out.draws, weights, t, SelectionKind::kMultiset);
  out.factor = nystrom_approx(K, out.selection, gamma);

  out.checkpoint.t = t;
  out.checkpoint.q = out.selection.size();
  out.checkpoint.deff_tilde = profile.deff;
  for (const auto& c : out.selection.columns) {
    out.checkpoint.indices.push_back(c.index);
    out.checkpoint.weights.push_back(c.weight);
  }
  return out;
}

BatchResult batch_exact(const Dataset& data, const KernelSpec& spec, double gamma,
                        std::size_t m, const RngHandle& rng) {
  const auto start = Clock::now();
  const Matrix K = gram(data, spec, data.size());
  BatchResult out = batch_exact(K, exact_rls(K, gamma), gamma, m, rng);
  out.checkpoint.elapsed_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return out;
}

NystromFactor nystrom_from_dataset(const Dataset& data, const KernelSpec& spec,
                                   const Selection& selection, double gamma) {
  const std::size_t t = selection.t;
  if (t < 1 || t > data.size()) throw InputError("selection prefix exceeds the dataset");
  const auto q = static_cast<Eigen::Index>(selection.size());
  Matrix columns(static_cast<Eigen::Index>(t), q);
  for (std::size_t r = 1; r <= t; ++r) {
    const Point& x = data.point(r);
    for (Eigen::Index j = 0; j < q; ++j)
      columns(static_cast<Eigen::Index>(r - 1), j) =
          evaluate(spec, x, data.point(selection.columns[static_cast<std::size_t>(j)].index));
  }
  Matrix sampled(q, q);
  for (Eigen::Index j = 0; j < q; ++j)
    for (Eigen::Index l = 0; l < q; ++l)
      sampled(j, l) = columns(static_cast<Eigen::Index>(selection.columns[static_cast<std::size_t>(j)].index - 1), l);
  std::vector<std::size_t> rows(t);
  for (std::size_t r = 0; r < t; ++r) rows[r] = r + 1;
  return nystrom_from_blocks(columns, sampled, selection, std::move(rows), gamma);
}

std::uint64_t sequential_budget(double deff, double epsilon, double delta, std::size_t n,
                                double alpha, double beta) {
  if (!(deff > 0.0) || !(epsilon > 0.0 && epsilon <= 1.0) || !(delta > 0.0 && delta < 1.0) || n < 1)
    throw InputError("sequential_budget: invalid arguments");
  const double q = 28.0 * alpha * beta * deff / (epsilon * epsilon) *
                   std::log(4.0 * static_cast<double>(n) / delta);
  return static_cast<std::uint64_t>(std::max(1.0, std::ceil(q)));
}

std::size_t batch_budget(double deff, double epsilon, double delta, std::size_t n) {
  if (!(deff > 0.0) || !(epsilon > 0.0 && epsilon <= 1.0) || !(delta > 0.0 && delta < 1.0) || n < 1)
    throw InputError("batch_budget: invalid arguments");
  const double m = 2.0 * deff / (epsilon * epsilon) * std::log(static_cast<double>(n) / delta);
  return static_cast<std::size_t>(std::max(1.0, std::ceil(m)));
}

}  // namespace ink
