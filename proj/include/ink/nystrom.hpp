#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "ink/kernel.hpp"
#include "ink/numerics.hpp"

namespace ink {

struct SelectedColumn {
  std::size_t index = 0;  // 1-based
  double weight = 1.0;
};

/// Logical t×Q selection operator stored as (index, weight) pairs, never as a dense matrix.
struct Selection {
  std::size_t t = 0;
  std::vector<SelectedColumn> columns;

  std::size_t size() const { return columns.size(); }
  bool empty() const { return columns.empty(); }
  std::vector<std::size_t> indices() const;
  // Diagonal of S Sᵀ: per-row sum of squared weights (length t).
  Vector squared_weight_mass() const;
};

enum class SelectionKind { kMultiset, kSet };

// Multisets keep repeated indices (with-replacement draws); sets reject duplicates.
Selection build_selection(const std::vector<std::size_t>& indices,
                          const std::map<std::size_t, double>& weights, std::size_t t,
                          SelectionKind kind);

// Weights 1/√(m·p_i) for a batch of m multinomial draws.
std::map<std::size_t, double> batch_sampling_weights(const std::vector<std::size_t>& draws,
                                                     const Vector& p);

/// Factored regularized Nyström approximation K̃ = (KS)(SᵀKS + γI)⁻¹(KS)ᵀ.
/// `rows` lists the rows of K that cross_block covers: every row of the prefix at desk scale,
/// or only the dictionary rows in streaming mode.
struct NystromFactor {
  Selection selection;
  std::vector<std::size_t> rows;
  Matrix sampled_block;  // SᵀKS, Q×Q
  Matrix cross_block;    // (KS) restricted to `rows`
  double gamma = 1.0;
  Matrix w_half;  // any square root of (SᵀKS + γI)⁻¹: w_half·w_halfᵀ = (SᵀKS + γI)⁻¹
  std::size_t clamped_eigenvalues = 0;

  std::size_t rank_bound() const { return selection.size(); }
  // C = (KS)·W^{1/2}, so that K̃ = C Cᵀ on the covered rows.
  Matrix embedding() const { return cross_block * w_half; }
};

// Builds a factor from unweighted kernel blocks: columns[r, j] = K(row r, column j of the
// selection) and sampled[j, l] = K(selected j, selected l). Weights are applied here.
NystromFactor nystrom_from_blocks(const Matrix& columns, const Matrix& sampled,
                                  const Selection& selection, std::vector<std::size_t> rows,
                                  double gamma);

// Desk-scale construction from a dense Gram matrix (rows = all of 1..t).
NystromFactor nystrom_approx(const Matrix& K, const Selection& selection, double gamma);

// Dense K̃ over the covered rows; refuses above `cap` rows.
Matrix materialize(const NystromFactor& factor, std::size_t cap = kDeskScaleCap);

Vector krr_exact(const Matrix& K, double mu, const Vector& y);
// (K̃ + μI)⁻¹y through the Woodbury identity in the Q-dimensional space.
Vector krr_approx(const NystromFactor& factor, double mu, const Vector& y);

}  // namespace ink
