#include <doctest.h>

#include "ink/errors.hpp"
#include "ink/numerics.hpp"
#include "support.hpp"

using namespace ink;

TEST_CASE("regularized_solve trivial cases") {
  const Vector y = Vector::LinSpaced(4, 1, 4);
  CHECK((regularized_solve(Matrix::Zero(4, 4), 2.5, y) - y / 2.5).norm() <= 1e-15);
  CHECK((regularized_solve(Matrix::Identity(4, 4), 1.0, y) - y / 2.0).norm() <= 1e-15);
}

TEST_CASE("regularized_solve matches the explicit inverse") {
  std::mt19937_64 gen(10);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix A = test::random_psd(5, 1 + trial % 5, gen);
    const Matrix B = test::random_symmetric(5, gen).leftCols(3);
    const double r = 0.1 + 0.1 * trial;
    const Matrix X = regularized_solve(A, r, B);
    const Matrix oracle = test::explicit_inverse(A + r * Matrix::Identity(5, 5)) * B;
    CHECK((X - oracle).norm() <= 1e-8 * (1 + oracle.norm()));
    CHECK(((A + r * Matrix::Identity(5, 5)) * X - B).norm() <= 1e-8 * B.norm());
  }
}

TEST_CASE("regularized_solve is linear in the right-hand side") {
  std::mt19937_64 gen(11);
  const Matrix A = test::random_psd(6, 3, gen);
  const Matrix B1 = test::random_symmetric(6, gen);
  const Matrix B2 = test::random_symmetric(6, gen);
  const Matrix lhs = regularized_solve(A, 0.3, Matrix(B1 + B2));
  const Matrix rhs = regularized_solve(A, 0.3, B1) + regularized_solve(A, 0.3, B2);
  CHECK((lhs - rhs).norm() <= 1e-9);
}

TEST_CASE("regularized_solve rejects bad input") {
  Matrix A = Matrix::Identity(3, 3);
  CHECK_THROWS_AS(regularized_solve(A, 0.0, Vector(Vector::Ones(3))), InputError);
  CHECK_THROWS_AS(regularized_solve(A, -1.0, Vector(Vector::Ones(3))), InputError);
  A(0, 1) = 1.0;
  CHECK_THROWS_AS(regularized_solve(A, 1.0, Vector(Vector::Ones(3))), InputError);
}

TEST_CASE("tiny asymmetry is absorbed by symmetrization") {
  Matrix A = Matrix::Identity(2, 2);
  A(0, 1) = 1e-13;
  const Matrix S = symmetrized(A);
  CHECK(S(0, 1) == S(1, 0));
}

TEST_CASE("eigendecomposition contracts") {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix A = test::random_symmetric(7, gen);
    const EigPair e = symmetric_eig(A);
    for (Eigen::Index j = 1; j < e.eigenvalues.size(); ++j) CHECK(e.eigenvalues[j - 1] >= e.eigenvalues[j]);
    const Matrix rec = e.eigenvectors * e.eigenvalues.asDiagonal() * e.eigenvectors.transpose();
    CHECK(test::power_iteration_norm(A - rec) <= 1e-8 * (1 + spectral_norm(A)));
    CHECK((e.eigenvectors.transpose() * e.eigenvectors - Matrix::Identity(7, 7)).norm() <= 1e-10);
  }
}

TEST_CASE("psd_order_check") {
  const Matrix I = Matrix::Identity(3, 3);
  CHECK(psd_order_check(I, I, 0.0));
  CHECK(psd_order_check(I, 2 * I));
  CHECK_FALSE(psd_order_check(2 * I, I, 1e-9));
  CHECK_THROWS_AS(psd_order_check(I, Matrix::Identity(2, 2)), InputError);
}

TEST_CASE("spectral_norm") {
  CHECK(spectral_norm(Matrix::Zero(3, 3)) == 0.0);
  Matrix D = Matrix::Zero(2, 2);
  D(0, 0) = 3;
  D(1, 1) = -5;
  CHECK(spectral_norm(D) == doctest::Approx(5.0));
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix A = test::random_symmetric(6, gen);
    CHECK(std::abs(spectral_norm(A) - test::power_iteration_norm(A)) <= 1e-8);
  }
}

TEST_CASE("the hat operator of a PSD matrix has spectrum in [0, 1)") {
  std::mt19937_64 gen(14);
  const Matrix A = test::random_psd(8, 4, gen);
  const Matrix H = regularized_solve(A, 0.5, A);
  const Vector ev = symmetric_eigenvalues(symmetrized((H + H.transpose()) / 2));
  CHECK(ev.maxCoeff() < 1.0);
  CHECK(ev.minCoeff() >= -1e-12);
}

TEST_CASE("min_eigenvalue") {
  std::mt19937_64 gen(15);
  const Matrix A = test::random_symmetric(5, gen);
  CHECK(min_eigenvalue(A) == doctest::Approx(test::min_eig_oracle(A)).epsilon(1e-10));
}
