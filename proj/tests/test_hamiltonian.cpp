#include <doctest.h>

#include <sstream>
#include <string>

#include "hamkrylov/hamiltonian.hpp"
#include "hamkrylov/krylov.hpp"
#include "hamkrylov/problems.hpp"
#include "oracles.hpp"

using namespace hamkrylov;

namespace {

using Sparse = SparseMatrix<double>;

Sparse sparse(const MatrixXd& m) { return Sparse(m.sparseView()); }

HamiltonianOperator<double> blocks(const MatrixXd& e, const MatrixXd& b, const MatrixXd& c) {
  return HamiltonianOperator<double>(sparse(e), sparse(b), sparse(c));
}

}  // namespace

TEST_CASE("apply_J examples") {
  VectorXd e1 = VectorXd::Unit(4, 0);
  CHECK((apply_J(e1) + VectorXd::Unit(4, 2)).norm() == 0.0);

  VectorXd x(2);
  x << 3, 5;
  VectorXd expected(2);
  expected << 5, -3;
  CHECK((apply_J(x) - expected).norm() == 0.0);

  const VectorXd y = oracle::random_vector(10, 1);
  CHECK((apply_J(VectorXd(apply_J(y))) + y).norm() == 0.0);
  CHECK((apply_J(y) - oracle::J(5) * y).norm() == 0.0);
  CHECK((j_matrix(5) - oracle::J(5)).norm() == 0.0);
  CHECK((JOperator(5).dense<double>() - oracle::J(5)).norm() == 0.0);

  const MatrixXd m = oracle::random_matrix(10, 3, 2);
  CHECK((JOperator(5).apply(m) - oracle::J(5) * m).norm() == 0.0);
}

TEST_CASE("apply_J rejects odd lengths") { CHECK_THROWS_AS(apply_J(VectorXd::Ones(3)), DimensionError); }

TEST_CASE("Hamiltonian matvec") {
  const MatrixXd dense = oracle::random_hamiltonian(7, 4);
  const auto H = HamiltonianOperator<double>::from_dense(dense);
  CHECK(H.apply(VectorXd::Zero(14)).norm() == 0.0);
  const VectorXd x = oracle::random_vector(14, 5);
  CHECK(oracle::rel(dense * x, H.apply(x)) <= 1e-14);
  CHECK((H.dense() - dense).norm() <= 1e-14 * dense.norm());
  CHECK_THROWS_AS(H.apply(VectorXd::Ones(12)), DimensionError);
}

TEST_CASE("Hamiltonian matvec on the linear wave problem") {
  const auto lw = build_lw<double>();
  const Index n = lw.n;
  const VectorXd x = oracle::random_vector(2 * n, 6);
  const VectorXd y = lw.H.apply(x);
  const Sparse lap = laplacian_dirichlet<double>(n, lw.delta_x);
  CHECK((y.head(n) - x.tail(n)).norm() == 0.0);
  CHECK((y.tail(n) - lap * x.head(n)).norm() <= 1e-14 * y.norm());
}

TEST_CASE("blocks B and C are symmetrized") {
  const MatrixXd e = oracle::random_matrix(4, 4, 1);
  const MatrixXd b = oracle::random_matrix(4, 4, 2);
  const MatrixXd c = oracle::random_matrix(4, 4, 3);
  const auto H = blocks(e, b, c);
  CHECK((MatrixXd(H.B()) - MatrixXd(H.B()).transpose()).norm() == 0.0);
  CHECK((MatrixXd(H.C()) - 0.5 * (c + c.transpose())).norm() <= 1e-15);
  CHECK(hamiltonian_residual(H.dense()) == 0.0);
  CHECK(oracle::hamiltonicity_defect(H.dense()) == 0.0);
  CHECK((MatrixXd(H.symmetric_form()) - oracle::J(4) * H.dense()).norm() == 0.0);
}

TEST_CASE("Hamiltonian solve examples") {
  const Index n = 3;
  const MatrixXd I = MatrixXd::Identity(n, n);
  const MatrixXd Z = MatrixXd::Zero(n, n);
  const VectorXd b = oracle::random_vector(2 * n, 7);

  const auto Jop = blocks(Z, I, -I);
  CHECK((Jop.dense() - oracle::J(n)).norm() == 0.0);
  CHECK((Jop.solve(b) + oracle::J(n) * b).norm() <= 1e-15);

  const auto D = blocks(I, Z, Z);
  VectorXd expected(2 * n);
  expected << b.head(n), -b.tail(n);
  CHECK((D.solve(b) - expected).norm() <= 1e-15);
}

TEST_CASE("Hamiltonian solve on the linear wave problem") {
  const auto lw = build_lw<double>();
  const VectorXd b = random_b<double>(lw.H.dim(), 42);
  const VectorXd x = lw.H.solve(b);
  CHECK((lw.H.apply(x) - b).norm() <= 1e-10 * b.norm());
  const VectorXd z = oracle::random_vector(lw.H.dim(), 8);
  CHECK(oracle::rel(z, lw.H.solve(lw.H.apply(z))) <= 1e-8);
}

TEST_CASE("Hamiltonian solve on a random indefinite matrix") {
  const MatrixXd dense = oracle::random_hamiltonian(8, 9);
  const auto H = HamiltonianOperator<double>::from_dense(dense);
  const VectorXd b = oracle::random_vector(16, 10);
  const VectorXd x = H.solve(b);
  CHECK((dense * x - b).norm() <= 1e-10 * b.norm());
}

TEST_CASE("Hamiltonian solve errors") {
  const MatrixXd dense = oracle::random_hamiltonian(3, 11);
  const auto no_solve = HamiltonianOperator<double>::from_dense(dense, false);
  CHECK_FALSE(no_solve.solve_capable());
  CHECK_THROWS_AS(no_solve.solve(VectorXd::Ones(6)), std::logic_error);

  const MatrixXd Z = MatrixXd::Zero(3, 3);
  const auto zero = blocks(Z, Z, Z);
  CHECK_THROWS_AS(zero.solve(VectorXd::Ones(6)), SingularMatrixError);
}

TEST_CASE("structure report on canonical columns") {
  const Index n = 5, k = 2;
  MatrixXd S = MatrixXd::Zero(2 * n, 2 * k);
  for (Index i = 0; i < k; ++i) {
    S(i, i) = 1;
    S(n + i, k + i) = 1;
  }
  const auto report = structure_report(S, oracle::J(k));
  CHECK(report.j_orthogonality_residual == 0.0);
  CHECK(report.hamiltonian_residual == 0.0);
  CHECK(report.orthogonality_residual == 0.0);
}

TEST_CASE("structure report flags the Arnoldi projection") {
  const auto sg = build_sg<double>();
  const VectorXd b = random_b<double>(sg.H.dim(), 42);
  const auto d = arnoldi(sg.H, b, 10);
  const auto report = structure_report(d.basis, d.projected);
  CHECK(report.hamiltonian_residual > 1e-3);
  CHECK(report.orthogonality_residual <= 1e-12);
  CHECK(report.hamiltonian_residual == doctest::Approx(oracle::hamiltonicity_defect(d.projected)));
}

TEST_CASE("symplectic left inverse") {
  // a J-orthogonal basis: symplectic transform of canonical columns
  const Index n = 6, k = 2;
  const MatrixXd symp = oracle::taylor_expm(oracle::random_hamiltonian(n, 12, 0.2));
  MatrixXd canon = MatrixXd::Zero(2 * n, 2 * k);
  for (Index i = 0; i < k; ++i) {
    canon(i, i) = 1;
    canon(n + i, k + i) = 1;
  }
  const MatrixXd S = symp * canon;
  const MatrixXd W = symplectic_left_inverse(S);
  const MatrixXd jk = oracle::J(k);
  CHECK((W - jk.transpose() * S.transpose() * oracle::J(n)).norm() <= 1e-14 * W.norm());
  CHECK((W * S - MatrixXd::Identity(2 * k, 2 * k)).norm() <= 1e-12);

  MatrixXd noisy = S + 1e-10 * oracle::random_matrix(2 * n, 2 * k, 13);
  CHECK((symplectic_left_inverse(noisy) * noisy - MatrixXd::Identity(2 * k, 2 * k)).norm() <= 1e-8);
}

TEST_CASE("Matrix Market output") {
  MatrixXd m(2, 3);
  m << 1, 0, -2.5, 0, 3, 0;
  std::ostringstream sparse_out;
  write_matrix_market(sparse_out, Sparse(m.sparseView()));
  std::istringstream in(sparse_out.str());
  std::string banner;
  std::getline(in, banner);
  CHECK(banner == "%%MatrixMarket matrix coordinate real general");
  Index rows = 0, cols = 0, nnz = 0;
  in >> rows >> cols >> nnz;
  CHECK(rows == 2);
  CHECK(cols == 3);
  REQUIRE(nnz == 3);
  MatrixXd back = MatrixXd::Zero(2, 3);
  for (Index k = 0; k < nnz; ++k) {
    Index i = 0, j = 0;
    double v = 0;
    in >> i >> j >> v;
    back(i - 1, j - 1) = v;
  }
  CHECK((back - m).norm() == 0.0);

  std::ostringstream dense_out;
  write_matrix_market(dense_out, m);
  std::istringstream din(dense_out.str());
  std::getline(din, banner);
  din >> rows >> cols >> nnz;
  CHECK(nnz == 6);
}
