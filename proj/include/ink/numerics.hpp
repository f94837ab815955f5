#pragma once

#include <Eigen/Dense>

namespace ink {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Symmetric eigendecomposition with eigenvalues sorted in descending order.
struct EigPair {
  Vector eigenvalues;
  Matrix eigenvectors;  // column j pairs with eigenvalues[j]
};

inline constexpr double kSymmetryTolerance = 1e-10;
inline constexpr double kDefaultPsdTolerance = 1e-8;

// Returns (A + Aᵀ)/2 when max|A - Aᵀ| < 1e-10·max(1, max|A|); throws InputError otherwise.
Matrix symmetrized(const Matrix& A);

EigPair symmetric_eig(const Matrix& A);
Vector symmetric_eigenvalues(const Matrix& A);  // descending

// (A + ridge·I)⁻¹ B. Cholesky first, eigendecomposition when the shifted matrix is not
// numerically positive definite.
Matrix regularized_solve(const Matrix& A, double ridge, const Matrix& B);
Vector regularized_solve(const Matrix& A, double ridge, const Vector& b);

// A ⪯ B within tolerance: λ_min(B - A) ≥ -tol·max(1, ‖B - A‖₂).
bool psd_order_check(const Matrix& A, const Matrix& B, double tol = kDefaultPsdTolerance);

// Largest absolute eigenvalue of a symmetric matrix.
double spectral_norm(const Matrix& A);

// Smallest eigenvalue of a symmetric matrix (+inf for an empty one).
double min_eigenvalue(const Matrix& A);

}  // namespace ink
