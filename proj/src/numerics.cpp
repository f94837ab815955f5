#include "ink/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ink/errors.hpp"

namespace ink {

namespace {

void require_square(const Matrix& A, const char* what) {
  if (A.rows() != A.cols()) {
    std::ostringstream msg;
    msg << what << ": matrix is " << A.rows() << "x" << A.cols() << ", expected square";
    throw InputError(msg.str());
  }
}

}  // namespace

Matrix symmetrized(const Matrix& A) {
  require_square(A, "symmetrized");
  if (A.size() == 0) return A;
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  const double asym = (A - A.transpose()).cwiseAbs().maxCoeff();
  if (!(asym < kSymmetryTolerance * scale)) {
    std::ostringstream msg;
    msg << "matrix is not symmetric (max asymmetry " << asym << ")";
    throw InputError(msg.str());
  }
  return 0.5 * (A + A.transpose());
}

EigPair symmetric_eig(const Matrix& A) {
  const Matrix S = symmetrized(A);
  const auto n = S.rows();
  if (n == 0) return {Vector(0), Matrix(0, 0)};
  Eigen::SelfAdjointEigenSolver<Matrix> solver(S);
  if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigensolver did not converge");
  // Eigen returns ascending order.
  return {solver.eigenvalues().reverse(), solver.eigenvectors().rowwise().reverse()};
}

Vector symmetric_eigenvalues(const Matrix& A) {
  const Matrix S = symmetrized(A);
  if (S.rows() == 0) return Vector(0);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(S, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigensolver did not converge");
  return solver.eigenvalues().reverse();
}

Matrix regularized_solve(const Matrix& A, double ridge, const Matrix& B) {
  if (!(ridge > 0.0)) throw InputError("ridge must be positive");
  require_square(A, "regularized_solve");
  if (B.rows() != A.rows()) throw InputError("regularized_solve: right-hand side has wrong row count");
  if (A.rows() == 0) return B;
  Matrix shifted = symmetrized(A);
  shifted.diagonal().array() += ridge;
  Eigen::LLT<Matrix> llt(shifted);
  if (llt.info() == Eigen::Success) return llt.solve(B);

  const EigPair eig = symmetric_eig(shifted);
  if (eig.eigenvalues.minCoeff() <= 0.0)
    throw NumericalError("regularized_solve: A + ridge·I is not positive definite");
  return eig.eigenvectors *
         (eig.eigenvalues.cwiseInverse().asDiagonal() * (eig.eigenvectors.transpose() * B));
}

Vector regularized_solve(const Matrix& A, double ridge, const Vector& b) {
  return regularized_solve(A, ridge, Matrix(b)).col(0);
}

bool psd_order_check(const Matrix& A, const Matrix& B, double tol) {
  if (A.rows() != B.rows() || A.cols() != B.cols())
    throw InputError("psd_order_check: shape mismatch");
  if (A.size() == 0) return true;
  const Vector ev = symmetric_eigenvalues(B - A);
  const double norm = std::max(std::abs(ev[0]), std::abs(ev[ev.size() - 1]));
  return ev[ev.size() - 1] >= -tol * std::max(1.0, norm);
}

double spectral_norm(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  const Vector ev = symmetric_eigenvalues(A);
  return std::max(std::abs(ev[0]), std::abs(ev[ev.size() - 1]));
}

double min_eigenvalue(const Matrix& A) {
  if (A.size() == 0) return std::numeric_limits<double>::infinity();
  const Vector ev = symmetric_eigenvalues(A);
  return ev[ev.size() - 1];
}

}  // namespace ink
