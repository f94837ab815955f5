#include "ink/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ink/errors.hpp"

namespace ink {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t RngHandle::bits(std::uint64_t stream, std::uint64_t a, std::uint64_t b,
                              std::uint64_t c) const {
  std::uint64_t h = splitmix64(seed_ ^ splitmix64(stream));
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ splitmix64(b + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ splitmix64(c + 0x8cb92ba72f3d8dd7ULL));
  return h;
}

double RngHandle::uniform(std::uint64_t stream, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) const {
  return static_cast<double>(bits(stream, a, b, c) >> 11) * 0x1.0p-53;
}

RngHandle RngHandle::split(std::uint64_t key) const {
  return RngHandle(splitmix64(seed_ ^ splitmix64(~key)));
}

Dictionary::Dictionary(std::uint64_t q_bar) : q_bar_(q_bar) {
  if (q_bar_ < 1) throw InputError("q_bar must be a positive integer");
}

std::vector<std::size_t> Dictionary::indices() const {
  std::vector<std::size_t> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.index);
  return out;
}

bool Dictionary::contains(std::size_t index) const {
  const auto it = std::lower_bound(entries_.begin(), entries_.end(), index,
                                   [](const DictionaryEntry& e, std::size_t i) { return e.index < i; });
  return it != entries_.end() && it->index == index;
}

const DictionaryEntry& Dictionary::at(std::size_t index) const {
  const auto it = std::lower_bound(entries_.begin(), entries_.end(), index,
                                   [](const DictionaryEntry& e, std::size_t i) { return e.index < i; });
  if (it == entries_.end() || it->index != index)
    throw InputError("index " + std::to_string(index) + " is not in the dictionary");
  return *it;
}

ProbabilityMap Dictionary::probabilities() const {
  ProbabilityMap out;
  for (const auto& e : entries_) out.emplace_hint(out.end(), e.index, e.p_tilde);
  return out;
}

void Dictionary::insert(DictionaryEntry entry) {
  if (entry.weight == 0) throw InputError("dictionary weights must be positive");
  if (!entries_.empty() && entry.index <= entries_.back().index)
    throw InputError("dictionary indices must be inserted in ascending order");
  entries_.push_back(entry);
}

std::vector<std::size_t> direct_sample(const Vector& p, std::size_t m, const RngHandle& rng) {
  if (p.size() == 0) throw InputError("direct_sample: empty distribution");
  if ((p.array() < 0.0).any()) throw InputError("direct_sample: negative probability");
  const double total = p.sum();
  if (std::abs(total - 1.0) > 1e-6) {
    std::ostringstream msg;
    msg << "direct_sample: probabilities sum to " << total;
    throw InputError(msg.str());
  }
  std::vector<double> cdf(static_cast<std::size_t>(p.size()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    acc += p[i];
    cdf[static_cast<std::size_t>(i)] = acc;
  }
  std::vector<std::size_t> draws;
  draws.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double u = rng.uniform(static_cast<std::uint64_t>(RngStream::kDirectSample), j) * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    // Never land on a zero-probability slot through a flat CDF segment.
    auto pos = static_cast<std::size_t>(it - cdf.begin());
    while (p[static_cast<Eigen::Index>(pos)] == 0.0 && pos > 0) --pos;
    draws.push_back(pos + 1);
  }
  return draws;
}

std::uint64_t run_weight_chain(std::uint64_t weight, double p_tilde, std::uint64_t q_bar,
                               std::size_t index, std::uint64_t step, const RngHandle& rng,
                               std::size_t* draws) {
  if (!(p_tilde > 0.0)) {
    std::ostringstream msg;
    msg << "shrink_expand: nonpositive probability " << p_tilde << " for index " << index;
    throw InputError(msg.str());
  }
  const double threshold = 1.0 / static_cast<double>(q_bar);
  std::uint64_t position = 0;
  while (weight != 0 && static_cast<double>(weight) * p_tilde <= threshold) {
    const double u = rng.uniform(static_cast<std::uint64_t>(RngStream::kShrinkExpand), step, index,
                                 position++);
    const double keep = static_cast<double>(weight) / static_cast<double>(weight + 1);
    weight = u < keep ? weight + 1 : 0;
  }
  if (draws) *draws += position;
  return weight;
}

Dictionary shrink_expand(const Dictionary& dict, const ProbabilityMap& p_tilde,
                         std::size_t new_index, std::uint64_t step, const RngHandle& rng,
                         ShrinkExpandStats* stats) {
  auto lookup = [&](std::size_t index) {
    const auto it = p_tilde.find(index);
    if (it == p_tilde.end())
      throw InputError("shrink_expand: no probability for index " + std::to_string(index));
    if (!(it->second > 0.0 && it->second <= 1.0)) {
      std::ostringstream msg;
      msg << "shrink_expand: probability " << it->second << " for index " << index
          << " outside (0, 1]";
      throw InputError(msg.str());
    }
    return it->second;
  };
  if (!dict.empty() && new_index <= dict.entries().back().index)
    throw InputError("shrink_expand: new index must follow every retained index");

  std::size_t draws = 0;
  Dictionary out(dict.q_bar());
  for (const auto& e : dict.entries()) {
    const double p = lookup(e.index);
    const auto b = run_weight_chain(e.weight, p, dict.q_bar(), e.index, step, rng, &draws);
    if (b != 0) {
      out.insert({e.index, b, p});
    } else if (stats) {
      stats->evicted.push_back(e.index);
    }
  }
  const double p_new = lookup(new_index);
  const auto b_new = run_weight_chain(1, p_new, dict.q_bar(), new_index, step, rng, &draws);
  if (b_new != 0) out.insert({new_index, b_new, p_new});
  if (stats) {
    stats->bernoulli_draws += draws;
    stats->new_index_kept = b_new != 0;
  }
  return out;
}

std::map<std::size_t, double> selection_weights(const Dictionary& dict) {
  std::map<std::size_t, double> out;
  for (const auto& e : dict.entries())
    out.emplace_hint(out.end(), e.index, std::sqrt(static_cast<double>(e.weight)));
  return out;
}

}  // namespace ink
