#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include "ink/leverage.hpp"

namespace ink {

/// Counter-based generator: every draw is a pure function of (seed, stream, a, b, c), so a run
/// is reproducible no matter how many draws other indices consumed.
class RngHandle {
 public:
  explicit RngHandle(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t bits(std::uint64_t stream, std::uint64_t a, std::uint64_t b = 0,
                     std::uint64_t c = 0) const;
  // Uniform on [0, 1) with 53 random bits.
  double uniform(std::uint64_t stream, std::uint64_t a, std::uint64_t b = 0,
                 std::uint64_t c = 0) const;
  // Independent child generator, e.g. one per Monte Carlo trial.
  RngHandle split(std::uint64_t key) const;

 private:
  std::uint64_t seed_;
};

// Stream tags keep the draw families of different procedures disjoint.
enum class RngStream : std::uint64_t {
  kDirectSample = 1,
  kShrinkExpand = 2,
  kSynthetic = 3,
};

struct DictionaryEntry {
  std::size_t index = 0;  // 1-based column index
  std::uint64_t weight = 0;  // b_i ≥ 1 while retained
  double p_tilde = 1.0;
};

/// Retained columns with their integer weights and latest clamped probabilities, kept in
/// ascending index order.
class Dictionary {
 public:
  explicit Dictionary(std::uint64_t q_bar = 1);

  std::uint64_t q_bar() const { return q_bar_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<DictionaryEntry>& entries() const { return entries_; }
  std::vector<std::size_t> indices() const;
  bool contains(std::size_t index) const;
  const DictionaryEntry& at(std::size_t index) const;
  ProbabilityMap probabilities() const;

  // Appends an entry; index must exceed every retained index and weight must be positive.
  void insert(DictionaryEntry entry);

 private:
  std::uint64_t q_bar_;
  std::vector<DictionaryEntry> entries_;
};

// m i.i.d. multinomial draws (1-based indices) in draw order.
std::vector<std::size_t> direct_sample(const Vector& p, std::size_t m, const RngHandle& rng);

struct ShrinkExpandStats {
  std::size_t bernoulli_draws = 0;
  std::vector<std::size_t> evicted;  // previously retained indices dropped this step
  bool new_index_kept = false;
};

// One Shrink-Expand pass at `step`: p_tilde must cover every retained index plus new_index.
Dictionary shrink_expand(const Dictionary& dict, const ProbabilityMap& p_tilde,
                         std::size_t new_index, std::uint64_t step, const RngHandle& rng,
                         ShrinkExpandStats* stats = nullptr);

// Runs one weight chain from `weight` against probability p; returns the final weight (0 = dropped).
std::uint64_t run_weight_chain(std::uint64_t weight, double p_tilde, std::uint64_t q_bar,
                               std::size_t index, std::uint64_t step, const RngHandle& rng,
                               std::size_t* draws = nullptr);

// √b for every retained index.
std::map<std::size_t, double> selection_weights(const Dictionary& dict);

}  // namespace ink
