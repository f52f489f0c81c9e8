#include <doctest.h>

#include "hamkrylov/dense.hpp"
#include "oracles.hpp"

using namespace hamkrylov;

TEST_CASE("qr_orthonormalize keeps an orthonormal input") {
  const MatrixXd q = qr_orthonormalize(MatrixXd::Identity(3, 3));
  REQUIRE(q.cols() == 3);
  CHECK((q.cwiseAbs() - MatrixXd::Identity(3, 3)).norm() <= 1e-15);
}

TEST_CASE("qr_orthonormalize deflates a dependent column") {
  VectorXd c(4);
  c << 1, -2, 0.5, 3;
  MatrixXd m(4, 2);
  m << c, 2 * c;
  const MatrixXd q = qr_orthonormalize(m);
  REQUIRE(q.cols() == 1);
  const VectorXd unit = c / c.norm();
  CHECK(std::min((q.col(0) - unit).norm(), (q.col(0) + unit).norm()) <= 1e-15);
}

TEST_CASE("qr_orthonormalize on random input") {
  const MatrixXd m = oracle::random_matrix(6, 3, 11);
  const MatrixXd q = qr_orthonormalize(m);
  REQUIRE(q.cols() == 3);
  CHECK((q.transpose() * q - MatrixXd::Identity(3, 3)).norm() <= 1e-12);
  // range(Q) = range(M)
  CHECK((m - q * (q.transpose() * m)).norm() <= 1e-12 * m.norm());
}

TEST_CASE("qr_orthonormalize with badly scaled columns") {
  MatrixXd m = oracle::random_matrix(40, 12, 5);
  for (Index j = 0; j < m.cols(); ++j) m.col(j) *= std::pow(10.0, j % 7);
  const MatrixXd q = qr_orthonormalize(m);
  CHECK(q.cols() == 12);
  CHECK((q.transpose() * q - MatrixXd::Identity(q.cols(), q.cols())).norm() <= 1e-10);
}

TEST_CASE("qr_orthonormalize edge cases") {
  CHECK(qr_orthonormalize(MatrixXd::Zero(5, 3)).cols() == 0);
  CHECK(qr_orthonormalize(MatrixXd::Zero(5, 3)).rows() == 5);
  CHECK(qr_orthonormalize(MatrixXd(4, 0)).cols() == 0);
  CHECK_THROWS_AS(qr_orthonormalize(MatrixXd::Identity(2, 2), 0.0), std::invalid_argument);
}

TEST_CASE("solve_linear examples") {
  VectorXd b(2);
  b << 3, -1;
  CHECK((solve_linear(MatrixXd::Identity(2, 2), b) - b).norm() == 0.0);

  MatrixXd d = MatrixXd::Zero(2, 2);
  d.diagonal() << 2, 4;
  VectorXd rhs(2);
  rhs << 2, 4;
  CHECK((solve_linear(d, rhs) - VectorXd::Ones(2)).norm() <= 1e-15);

  MatrixXd rot(2, 2);
  rot << 0, 1, -1, 0;
  VectorXd e1(2), e2(2);
  e1 << 1, 0;
  e2 << 0, 1;
  CHECK((solve_linear(rot, e1) - e2).norm() <= 1e-15);
}

TEST_CASE("solve_linear round trip on random systems") {
  const MatrixXd a = oracle::random_matrix(30, 30, 3) + 10 * MatrixXd::Identity(30, 30);
  const VectorXd x = oracle::random_vector(30, 4);
  CHECK(oracle::rel(x, solve_linear(a, a * x)) <= 1e-13);
}

TEST_CASE("solve_linear errors") {
  MatrixXd singular(2, 2);
  singular << 1, 2, 2, 4;
  CHECK_THROWS_AS(solve_linear(singular, VectorXd::Ones(2)), SingularMatrixError);
  CHECK_THROWS_AS(solve_linear(MatrixXd::Zero(3, 3), VectorXd::Ones(3)), SingularMatrixError);
  CHECK_THROWS_AS(solve_linear(MatrixXd::Identity(2, 2), VectorXd::Ones(3)), DimensionError);
  CHECK_THROWS_AS(solve_linear(MatrixXd::Identity(2, 3), VectorXd::Ones(2)), DimensionError);
}

TEST_CASE("matvec examples") {
  const VectorXd x = oracle::random_vector(4, 1);
  CHECK((matvec(MatrixXd::Identity(4, 4), x) - x).norm() == 0.0);
  CHECK(matvec(MatrixXd::Zero(3, 4), x).norm() == 0.0);
  MatrixXd a(2, 2);
  a << 1, 2, 3, 4;
  VectorXd expected(2);
  expected << 3, 7;
  CHECK((matvec(a, VectorXd::Ones(2)) - expected).norm() == 0.0);
  CHECK_THROWS_AS(matvec(a, VectorXd::Ones(3)), DimensionError);
}
