#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "ink/kernel.hpp"
#include "ink/numerics.hpp"

namespace ink::test {

inline Matrix random_psd(int n, int rank, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  Matrix G(n, rank);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < rank; ++j) G(i, j) = nd(gen);
  Matrix A = G * G.transpose();
  return (A + A.transpose()) / 2.0;
}

inline Matrix random_symmetric(int n, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  Matrix G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = nd(gen);
  return (G + G.transpose()) / 2.0;
}

inline Dataset random_dataset(std::size_t n, int d, std::mt19937_64& gen, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  std::vector<Point> pts;
  for (std::size_t i = 0; i < n; ++i) {
    Point p(d);
    for (int j = 0; j < d; ++j) p[j] = nd(gen);
    pts.push_back(p);
  }
  return Dataset(std::move(pts));
}

// Oracles that avoid the library's own factorizations.
inline Matrix explicit_inverse(const Matrix& A) { return A.fullPivLu().inverse(); }

inline double power_iteration_norm(const Matrix& A, int iters = 5000) {
  Vector v = Vector::Ones(A.rows()) / std::sqrt(static_cast<double>(A.rows()));
  v[0] += 0.1;
  double lambda = 0.0;
  // A² is PSD, so power iteration on it converges to the largest |λ|².
  const Matrix A2 = A * A;
  for (int k = 0; k < iters; ++k) {
    Vector w = A2 * v;
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
    lambda = nw;
  }
  return std::sqrt(lambda);
}

inline double min_eig_oracle(const Matrix& A) {
  Eigen::EigenSolver<Matrix> es(A);
  return es.eigenvalues().real().minCoeff();
}

inline Dataset line_points(std::initializer_list<double> xs) {
  std::vector<Point> pts;
  for (double x : xs) {
    Point p(1);
    p[0] = x;
    pts.push_back(p);
  }
  return Dataset(std::move(pts));
}

}  // namespace ink::test
