#include <doctest.h>

#include <cmath>
#include <map>

#include "hamkrylov/approx.hpp"
#include "hamkrylov/harness.hpp"
#include "hamkrylov/problems.hpp"
#include "oracles.hpp"

using namespace hamkrylov;

namespace {

using Sparse = SparseMatrix<double>;

const ProblemInstance<double>& problem(ProblemId id) {
  static std::map<ProblemId, ProblemInstance<double>> cache;
  auto it = cache.find(id);
  if (it == cache.end()) it = cache.emplace(id, build_problem<double>(id)).first;
  return it->second;
}

// e^{hH} b for a wave-type problem, from the eigenvalues of C.
VectorXd wave_reference(ProblemId id, double h) {
  const auto& p = problem(id);
  return oracle::wave_flow(MatrixXd(p.H.C()), random_b<double>(p.H.dim(), 42), h);
}

HamiltonianOperator<double> diagonal_e(double a, double b) {
  MatrixXd e = MatrixXd::Zero(2, 2);
  e.diagonal() << a, b;
  const MatrixXd z = MatrixXd::Zero(2, 2);
  return HamiltonianOperator<double>(Sparse(e.sparseView()), Sparse(z.sparseView()), Sparse(z.sparseView()));
}

}  // namespace

TEST_CASE("function names round trip") {
  for (FunctionId f : kAllFunctions) CHECK(parse_function(to_string(f)) == f);
  CHECK_FALSE(parse_function("sin").has_value());
}

TEST_CASE("h = 0 returns b") {
  const auto& p = problem(ProblemId::kNs1);
  const VectorXd b = random_b<double>(p.H.dim(), 42);
  for (MethodId m : kAllMethods) {
    CAPTURE(to_string(m));
    const auto d = build_decomposition(m, p.H, b, 4);
    if (m == MethodId::kBJ) continue;  // b is not in the span of a BJ basis in general
    CHECK(oracle::rel(b, approximate_action(d, FunctionId::kExp, 0.0)) <= 1e-10);
    CHECK(oracle::rel(b, approximate_action(d, FunctionId::kPhiImplicit, 0.0)) <= 1e-10);
  }
}

TEST_CASE("every method is exact at full dimension") {
  const Index n = 4;
  const MatrixXd dense = oracle::random_hamiltonian(n, 31);
  const auto H = HamiltonianOperator<double>::from_dense(dense);
  const VectorXd b = oracle::random_vector(2 * n, 32);
  const double h = 0.1;
  const VectorXd expected = oracle::taylor_expm(h * dense) * b;
  for (MethodId m : kAllMethods) {
    CAPTURE(to_string(m));
    const auto d = build_decomposition(m, H, b, n);
    CHECK(oracle::rel(expected, approximate_action(d, FunctionId::kExp, h)) <= 1e-10);
  }
  const auto d = build_decomposition(MethodId::kA, H, b, n);
  const VectorXd phi_expected = oracle::phi_series(h * dense, b);
  CHECK(oracle::rel(phi_expected, approximate_action(d, FunctionId::kPhiImplicit, h)) <= 1e-10);
  CHECK(oracle::rel(phi_expected, approximate_action(d, FunctionId::kPhiExplicit, h)) <= 1e-10);
}

TEST_CASE("convergence on the linear wave problem") {
  const auto& p = problem(ProblemId::kLw);
  const VectorXd b = random_b<double>(p.H.dim(), 42);
  const VectorXd expected = wave_reference(ProblemId::kLw, 0.01);
  for (MethodId m : {MethodId::kA, MethodId::kHL, MethodId::kBJ}) {
    CAPTURE(to_string(m));
    const auto d = build_decomposition(m, p.H, b, 25);
    CHECK(oracle::rel(expected, approximate_action(d, FunctionId::kExp, 0.01)) <= 1e-9);
  }
  const double coarse = oracle::rel(expected, approximate_action(arnoldi(p.H, b, 10), FunctionId::kExp, 0.01));
  const double fine = oracle::rel(expected, approximate_action(arnoldi(p.H, b, 30), FunctionId::kExp, 0.01));
  CHECK(fine < coarse);
}

TEST_CASE("phi modes agree on a projected matrix") {
  const auto& p = problem(ProblemId::kSg);
  const VectorXd b = random_b<double>(p.H.dim(), 42);
  const auto d = build_decomposition(MethodId::kA, p.H, b, 10);
  const VectorXd impl = approximate_action(d, FunctionId::kPhiImplicit, 0.01);
  CHECK(oracle::rel(impl, approximate_action(d, FunctionId::kPhiExplicit, 0.01)) <= 1e-9);
}

TEST_CASE("reduced exponential is symplectic for structured methods") {
  const auto& p = problem(ProblemId::kKg1);
  const VectorXd b = random_b<double>(p.H.dim(), 42);
  for (MethodId m : {MethodId::kHL, MethodId::kSA, MethodId::kIA, MethodId::kHEKS, MethodId::kBJ}) {
    CAPTURE(to_string(m));
    const auto d = build_decomposition(m, p.H, b, 10);
    const MatrixXd e = reduced_exponential(d, 0.01);
    const MatrixXd j = oracle::J(d.dim() / 2);
    CHECK((e.transpose() * j * e - j).norm() <= 1e-8 * std::max(1.0, e.squaredNorm()));
  }
}

TEST_CASE("an empty decomposition maps to zero") {
  KrylovDecomposition<double> d;
  d.basis.resize(6, 0);
  d.projected.resize(0, 0);
  CHECK(approximate_action(d, FunctionId::kExp, 1.0).size() == 6);
  CHECK(approximate_action(d, FunctionId::kExp, 1.0).norm() == 0.0);
}

TEST_CASE("first-term estimate after one Arnoldi step") {
  const auto& p = problem(ProblemId::kNs1);
  const VectorXd b = random_b<double>(p.H.dim(), 42);
  const double h = 0.01;
  const auto d = arnoldi(p.H, b, 1);
  const VectorXd u1 = b / b.norm();
  const VectorXd hu = p.H.dense() * u1;
  const double t = u1.dot(hu);
  const double rho = (hu - t * u1).norm();
  const double z = h * t;
  const double phi = std::abs(z) < 1e-8 ? 1 + z / 2 : std::expm1(z) / z;
  const double expected = b.norm() * std::abs(h * rho * phi);
  CHECK(error_estimate_arnoldi(d, h, b.norm()) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("estimates vanish with the remainder") {
  const auto H = diagonal_e(1, 2);
  const VectorXd e1 = VectorXd::Unit(4, 0);
  const auto d = arnoldi(H, e1, 2);
  CHECK(error_estimate_arnoldi(d, 0.5, 1.0) == 0.0);
  CHECK_THROWS_AS(error_estimate_hl(d, 0.5, 1.0), std::invalid_argument);

  const auto& p = problem(ProblemId::kLw);
  const auto hl = hamiltonian_lanczos(p.H, VectorXd(random_b<double>(p.H.dim(), 42)), 3);
  CHECK(error_estimate_hl(hl, 0.01, 1.0) > 0.0);
  CHECK_THROWS_AS(error_estimate_arnoldi(hl, 0.01, 1.0), std::invalid_argument);
}

TEST_CASE("adaptive run stops at a loose tolerance") {
  const auto& p = problem(ProblemId::kLw);
  const VectorXd b = random_b<double>(p.H.dim(), 42);
  for (MethodId m : {MethodId::kA, MethodId::kHL}) {
    CAPTURE(to_string(m));
    const auto res = adaptive_run(p.H, b, 0.01, 1e30, 50, m);
    CHECK(res.converged);
    CHECK(res.steps_used == 1);
    CHECK(res.estimate_history.size() == 1);
  }
}

TEST_CASE("adaptive run counts an invariant breakdown as converged") {
  const auto H = diagonal_e(1, 2);
  const VectorXd e1 = VectorXd::Unit(4, 0);
  const auto res = adaptive_run(H, e1, 0.5, 1e-12, 10, MethodId::kA);
  CHECK(res.converged);
  CHECK(res.steps_used == 1);
  CHECK(res.breakdown.kind == BreakdownKind::kInvariant);
  CHECK(res.approximation(0) == doctest::Approx(std::exp(0.5)).epsilon(1e-14));
}

TEST_CASE("adaptive run stops at k_max") {
  const auto& p = problem(ProblemId::kLw);
  const VectorXd b = random_b<double>(p.H.dim(), 42);
  const VectorXd expected = wave_reference(ProblemId::kLw, 0.01);
  for (MethodId m : {MethodId::kA, MethodId::kHL}) {
    CAPTURE(to_string(m));
    const auto res = adaptive_run(p.H, b, 0.01, 1e-300, 5, m, {}, std::optional<VectorXd>(expected));
    CHECK_FALSE(res.converged);
    CHECK(res.steps_used == 5);
    REQUIRE(res.estimate_history.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(res.estimate_history[i].first == Index(i + 1));
    REQUIRE(res.actual_error.has_value());
    CHECK(*res.actual_error == doctest::Approx(oracle::rel(expected, res.approximation)).epsilon(1e-12));
  }
}

TEST_CASE("adaptive run reaches the tolerance on the linear wave problem") {
  const auto& p = problem(ProblemId::kLw);
  const VectorXd b = random_b<double>(p.H.dim(), 42);
  const VectorXd expected = wave_reference(ProblemId::kLw, 0.01);
  for (MethodId m : {MethodId::kA, MethodId::kHL}) {
    CAPTURE(to_string(m));
    const auto res = adaptive_run(p.H, b, 0.01, 1e-10, 200, m);
    CHECK(res.converged);
    CHECK(oracle::rel(expected, res.approximation) <= 1e-9);
  }
}

TEST_CASE("adaptive run argument checks") {
  const auto H = diagonal_e(1, 2);
  const VectorXd b = VectorXd::Ones(4);
  CHECK_THROWS_AS(adaptive_run(H, b, 0.1, 0.0, 5, MethodId::kA), std::invalid_argument);
  CHECK_THROWS_AS(adaptive_run(H, b, 0.1, 1e-8, 0, MethodId::kA), std::invalid_argument);
  CHECK_THROWS_AS(adaptive_run(H, b, 0.1, 1e-8, 5, MethodId::kSA), std::invalid_argument);
}

// Magnitudes reported for these configurations elsewhere; not reproduced with
// this discretization, kept as tracked expectations.
TEST_CASE("kg1: A reaches 1e-11 at dimension 24" * doctest::may_fail()) {
  const auto& p = problem(ProblemId::kKg1);
  const VectorXd b = random_b<double>(p.H.dim(), 42);
  const VectorXd expected = wave_reference(ProblemId::kKg1, 0.01);
  const double err = oracle::rel(expected, approximate_action(arnoldi(p.H, b, 24), FunctionId::kExp, 0.01));
  MESSAGE("kg1 A dim 24 relative error " << err);
  CHECK(err <= 1e-10);
}

TEST_CASE("ns2: HL reaches 1e-13 at k = 9" * doctest::may_fail()) {
  harness::RunConfig cfg;
  cfg.cache_references = false;
  const auto& p = problem(ProblemId::kNs2);
  const auto ref = harness::reference_for(p, cfg);
  const double err =
      (ref.exp_b - approximate_action(hamiltonian_lanczos(p.H, ref.b, 9), FunctionId::kExp, 0.01)).norm();
  MESSAGE("ns2 HL k=9 absolute error " << err);
  CHECK(err <= 1e-13);
}
