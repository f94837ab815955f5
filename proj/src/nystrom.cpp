#include "ink/nystrom.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "ink/errors.hpp"

namespace ink {

std::vector<std::size_t> Selection::indices() const {
  std::vector<std::size_t> out;
  out.reserve(columns.size());
  for (const auto& c : columns) out.push_back(c.index);
  return out;
}

Vector Selection::squared_weight_mass() const {
  Vector mass = Vector::Zero(static_cast<Eigen::Index>(t));
  for (const auto& c : columns) mass[static_cast<Eigen::Index>(c.index - 1)] += c.weight * c.weight;
  return mass;
}

Selection build_selection(const std::vector<std::size_t>& indices,
                          const std::map<std::size_t, double>& weights, std::size_t t,
                          SelectionKind kind) {
  Selection sel;
  sel.t = t;
  sel.columns.reserve(indices.size());
  std::set<std::size_t> seen;
  for (const auto i : indices) {
    if (i < 1 || i > t) {
      std::ostringstream msg;
      msg << "selection index " << i << " outside [1, " << t << "]";
      throw InputError(msg.str());
    }
    if (kind == SelectionKind::kSet && !seen.insert(i).second)
      throw InputError("duplicate index " + std::to_string(i) + " in a set selection");
    const auto w = weights.find(i);
    if (w == weights.end()) throw InputError("no weight for selected index " + std::to_string(i));
    if (!(w->second > 0.0)) throw InputError("selection weights must be positive");
    sel.columns.push_back({i, w->second});
  }
  return sel;
}

std::map<std::size_t, double> batch_sampling_weights(const std::vector<std::size_t>& draws,
                                                     const Vector& p) {
  std::map<std::size_t, double> out;
  const double m = static_cast<double>(draws.size());
  for (const auto i : draws) {
    const double pi = p[static_cast<Eigen::Index>(i - 1)];
    if (!(pi > 0.0)) throw InputError("drawn index has zero probability");
    out[i] = 1.0 / std::sqrt(m * pi);
  }
  return out;
}

NystromFactor nystrom_from_blocks(const Matrix& columns, const Matrix& sampled,
                                  const Selection& selection, std::vector<std::size_t> rows,
                                  double gamma) {
  if (!(gamma > 0.0)) throw InputError("nystrom: gamma must be positive");
  const auto q = static_cast<Eigen::Index>(selection.size());
  if (columns.cols() != q || sampled.rows() != q || sampled.cols() != q ||
      columns.rows() != static_cast<Eigen::Index>(rows.size()))
    throw InputError("nystrom: block shapes do not match the selection");

  Vector w(q);
  for (Eigen::Index j = 0; j < q; ++j) w[j] = selection.columns[static_cast<std::size_t>(j)].weight;

  NystromFactor f;
  f.selection = selection;
  f.rows = std::move(rows);
  f.gamma = gamma;
  f.cross_block = columns * w.asDiagonal();
  f.sampled_block = symmetrized(w.asDiagonal() * sampled * w.asDiagonal());
  if (q == 0) {
    f.w_half = Matrix(0, 0);
    return f;
  }
  const Matrix shifted = f.sampled_block + gamma * Matrix::Identity(q, q);
  Eigen::LLT<Matrix> llt(shifted);
  if (llt.info() == Eigen::Success) {
    // L⁻ᵀ is a valid square root: L⁻ᵀL⁻¹ = (LLᵀ)⁻¹.
    f.w_half = llt.matrixU().solve(Matrix::Identity(q, q));
    return f;
  }
  const EigPair eig = symmetric_eig(f.sampled_block);
  Vector scale(q);
  for (Eigen::Index j = 0; j < q; ++j) {
    double s = eig.eigenvalues[j];
    if (s < 0.0) {
      ++f.clamped_eigenvalues;
      s = 0.0;
    }
    scale[j] = 1.0 / std::sqrt(s + gamma);
  }
  f.w_half = eig.eigenvectors * scale.asDiagonal() * eig.eigenvectors.transpose();
  return f;
}

NystromFactor nystrom_approx(const Matrix& K, const Selection& selection, double gamma) {
  if (K.rows() != K.cols() || static_cast<std::size_t>(K.rows()) != selection.t)
    throw InputError("nystrom_approx: Gram size does not match selection");
  const auto q = static_cast<Eigen::Index>(selection.size());
  const auto t = K.rows();
  Matrix columns(t, q);
  Matrix sampled(q, q);
  for (Eigen::Index j = 0; j < q; ++j) {
    const auto cj = static_cast<Eigen::Index>(selection.columns[static_cast<std::size_t>(j)].index - 1);
    columns.col(j) = K.col(cj);
    for (Eigen::Index l = 0; l < q; ++l) {
      const auto cl = static_cast<Eigen::Index>(selection.columns[static_cast<std::size_t>(l)].index - 1);
      sampled(j, l) = K(cj, cl);
    }
  }
  std::vector<std::size_t> rows(static_cast<std::size_t>(t));
  for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = r + 1;
  return nystrom_from_blocks(columns, sampled, selection, std::move(rows), gamma);
}

Matrix materialize(const NystromFactor& factor, std::size_t cap) {
  const auto n = static_cast<Eigen::Index>(factor.rows.size());
  if (factor.rows.size() > cap) {
    std::ostringstream msg;
    msg << "materialize: " << factor.rows.size() << " rows exceeds the desk-scale cap " << cap;
    throw InputError(msg.str());
  }
  if (factor.selection.empty()) return Matrix::Zero(n, n);
  const Matrix C = factor.embedding();
  return C * C.transpose();
}

Vector krr_exact(const Matrix& K, double mu, const Vector& y) {
  if (!(mu > 0.0)) throw InputError("krr: mu must be positive");
  return regularized_solve(K, mu, y);
}

Vector krr_approx(const NystromFactor& factor, double mu, const Vector& y) {
  if (!(mu > 0.0)) throw InputError("krr: mu must be positive");
  if (static_cast<std::size_t>(y.size()) != factor.rows.size())
    throw InputError("krr_approx: target length does not match the factor rows");
  if (factor.selection.empty()) return y / mu;
  const Matrix C = factor.embedding();
  const Vector inner = regularized_solve(C.transpose() * C, mu, Vector(C.transpose() * y));
  return (y - C * inner) / mu;
}

}  // namespace ink
