#pragma once

#include <cmath>
#include <iomanip>
#include <memory>
#include <mutex>
#include <ostream>
#include <limits>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "hamkrylov/dense.hpp"

namespace hamkrylov {

template <typename Scalar>
using SparseMatrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

/// The skew-symmetric J_n = [[0, I_n], [-I_n, 0]], applied without forming it.
class JOperator {
 public:
  explicit JOperator(Index n) : n_(n) {}

  Index half_dim() const { return n_; }
  Index dim() const { return 2 * n_; }

  /// (x_{n+1..2n}, -x_{1..n}); works column-wise on matrices.
  template <typename Derived>
  Matrix<typename Derived::Scalar> apply(const Eigen::MatrixBase<Derived>& x) const {
    detail::require(x.rows() == 2 * n_, "JOperator::apply: dimension mismatch");
    Matrix<typename Derived::Scalar> y(x.rows(), x.cols());
    y.topRows(n_) = x.bottomRows(n_);
    y.bottomRows(n_) = -x.topRows(n_);
    return y;
  }

  template <typename Scalar = double>
  Matrix<Scalar> dense() const {
    Matrix<Scalar> j = Matrix<Scalar>::Zero(2 * n_, 2 * n_);
    j.topRightCorner(n_, n_).setIdentity();
    j.bottomLeftCorner(n_, n_) = -Matrix<Scalar>::Identity(n_, n_);
    return j;
  }

 private:
  Index n_;
};

/// J x for a vector of even length 2n.
template <typename Derived>
Vector<typename Derived::Scalar> apply_J(const Eigen::MatrixBase<Derived>& x) {
  detail::require(x.cols() == 1 && x.rows() % 2 == 0, "apply_J: vector of even length required");
  return JOperator(x.rows() / 2).apply(x);
}

template <typename Scalar = double>
Matrix<Scalar> j_matrix(Index n) {
  return JOperator(n).dense<Scalar>();
}

/// ||J M - (J M)^T||_F for a square matrix of even order; zero iff M is
/// Hamiltonian.
template <typename Derived>
typename Derived::Scalar hamiltonian_residual(const Eigen::MatrixBase<Derived>& M) {
  detail::require(M.rows() == M.cols() && M.rows() % 2 == 0,
                  "hamiltonian_residual: square matrix of even order required");
  const auto jm = JOperator(M.rows() / 2).apply(M);
  return (jm - jm.transpose()).norm();
}

/// Sparse Hamiltonian matrix H = [[E, B], [C, -E^T]] with B = B^T, C = C^T.
///
/// B and C are replaced by (M + M^T)/2 at construction, so J H is symmetric
/// bit for bit. The operator is immutable; the factorization behind solve()
/// is built on first use and shared between copies.
template <typename Scalar>
class HamiltonianOperator {
 public:
  using Sparse = SparseMatrix<Scalar>;

  HamiltonianOperator(Sparse E, Sparse B, Sparse C, bool solve_capable = true)
      : e_(std::move(E)),
        b_(symmetrize(B)),
        c_(symmetrize(C)),
        solve_capable_(solve_capable),
        cache_(std::make_shared<SolveCache>()) {
    const Index n = e_.rows();
    detail::require(e_.cols() == n && b_.rows() == n && b_.cols() == n && c_.rows() == n && c_.cols() == n,
                    "HamiltonianOperator: blocks must be n x n");
    e_.makeCompressed();
    et_ = Sparse(e_.transpose());
    et_.makeCompressed();
  }

  /// Builds the operator from the blocks of a dense 2n x 2n matrix; the
  /// (2,2) block is taken as -E^T regardless of its contents.
  static HamiltonianOperator from_dense(const Matrix<Scalar>& H, bool solve_capable = true) {
    detail::require(H.rows() == H.cols() && H.rows() % 2 == 0,
                    "HamiltonianOperator::from_dense: square matrix of even order required");
    const Index n = H.rows() / 2;
    return HamiltonianOperator(Sparse(H.topLeftCorner(n, n).sparseView()),
                               Sparse(H.topRightCorner(n, n).sparseView()),
                               Sparse(H.bottomLeftCorner(n, n).sparseView()), solve_capable);
  }

  Index half_dim() const { return e_.rows(); }
  Index dim() const { return 2 * e_.rows(); }
  bool solve_capable() const { return solve_capable_; }

  const Sparse& E() const { return e_; }
  const Sparse& B() const { return b_; }
  const Sparse& C() const { return c_; }

  /// y = H x using the block products; works column-wise on matrices.
  template <typename Derived>
  Matrix<Scalar> apply(const Eigen::MatrixBase<Derived>& x) const {
    const Index n = half_dim();
    detail::require(x.rows() == 2 * n, "HamiltonianOperator::apply: dimension mismatch");
    Matrix<Scalar> y(x.rows(), x.cols());
    y.topRows(n).noalias() = e_ * x.topRows(n);
    y.topRows(n).noalias() += b_ * x.bottomRows(n);
    y.bottomRows(n).noalias() = c_ * x.topRows(n);
    y.bottomRows(n).noalias() -= et_ * x.bottomRows(n);
    return y;
  }

  /// x with H x = b, solved through the symmetric system (J H) x = J b.
  template <typename Derived>
  Matrix<Scalar> solve(const Eigen::MatrixBase<Derived>& rhs) const {
    if (!solve_capable_) throw std::logic_error("HamiltonianOperator::solve: operator is not solve-capable");
    detail::require(rhs.rows() == dim(), "HamiltonianOperator::solve: dimension mismatch");
    const SolveCache& cache = factorization();
    const Matrix<Scalar> jb = JOperator(half_dim()).apply(rhs);
    Matrix<Scalar> x = cache.use_ldlt ? Matrix<Scalar>(cache.ldlt.solve(jb)) : Matrix<Scalar>(cache.lu.solve(jb));
    return x;
  }

  /// Sparse assembly of the full 2n x 2n matrix.
  SparseMatrix<Scalar> assemble() const {
    const Index n = half_dim();
    std::vector<Eigen::Triplet<Scalar>> triplets;
    triplets.reserve(static_cast<std::size_t>(2 * (e_.nonZeros() + b_.nonZeros() + c_.nonZeros())));
    append(triplets, e_, 0, 0, Scalar(1));
    append(triplets, b_, 0, n, Scalar(1));
    append(triplets, c_, n, 0, Scalar(1));
    append(triplets, et_, n, n, Scalar(-1));
    SparseMatrix<Scalar> h(2 * n, 2 * n);
    h.setFromTriplets(triplets.begin(), triplets.end());
    return h;
  }

  Matrix<Scalar> dense() const { return Matrix<Scalar>(assemble()); }

  /// J H = [[C, -E^T], [-E, -B]], symmetric.
  Eigen::SparseMatrix<Scalar> symmetric_form() const {
    const Index n = half_dim();
    std::vector<Eigen::Triplet<Scalar>> triplets;
    append(triplets, c_, 0, 0, Scalar(1));
    append(triplets, et_, 0, n, Scalar(-1));
    append(triplets, e_, n, 0, Scalar(-1));
    append(triplets, b_, n, n, Scalar(-1));
    Eigen::SparseMatrix<Scalar> jh(2 * n, 2 * n);
    jh.setFromTriplets(triplets.begin(), triplets.end());
    return jh;
  }

 private:
  struct SolveCache {
    std::once_flag once;
    bool use_ldlt = false;
    bool singular = false;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<Scalar>, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
    Eigen::SparseLU<Eigen::SparseMatrix<Scalar>, Eigen::COLAMDOrdering<int>> lu;
  };

  static Sparse symmetrize(const Sparse& M) {
    detail::require(M.rows() == M.cols(), "HamiltonianOperator: off-diagonal blocks must be square");
    Sparse t = M.transpose();
    Sparse s = (M + t) * Scalar(0.5);
    s.makeCompressed();
    return s;
  }

  static void append(std::vector<Eigen::Triplet<Scalar>>& out, const Sparse& M, Index row0, Index col0,
                     Scalar sign) {
    for (Index r = 0; r < M.outerSize(); ++r)
      for (typename Sparse::InnerIterator it(M, r); it; ++it)
        out.emplace_back(static_cast<int>(row0 + it.row()), static_cast<int>(col0 + it.col()), sign * it.value());
  }

  // Symmetric LDL^T of J H with AMD ordering. Eigen's simplicial LDL^T does
  // not pivot, so the factorization is checked on a probe right-hand side and
  // replaced by a sparse LU of the same matrix when it is inaccurate.
  const SolveCache& factorization() const {
    std::call_once(cache_->once, [this] {
      const Eigen::SparseMatrix<Scalar> jh = symmetric_form();
      const Index m = jh.rows();
      Vector<Scalar> probe(m);
      for (Index i = 0; i < m; ++i) probe(i) = Scalar(1) + Scalar(i % 7) / Scalar(7);
      const Scalar tol = Scalar(1e3) * std::numeric_limits<Scalar>::epsilon();

      cache_->ldlt.compute(jh);
      if (cache_->ldlt.info() == Eigen::Success && cache_->ldlt.vectorD().allFinite() &&
          (cache_->ldlt.vectorD().array() != Scalar(0)).all()) {
        const Vector<Scalar> x = cache_->ldlt.solve(probe);
        if (x.allFinite() && (jh * x - probe).norm() <= tol * scale(jh, x, probe)) {
          cache_->use_ldlt = true;
          return;
        }
      }
      cache_->lu.compute(jh);
      if (cache_->lu.info() != Eigen::Success) {
        cache_->singular = true;
        return;
      }
      const Vector<Scalar> x = cache_->lu.solve(probe);
      if (!x.allFinite() || (jh * x - probe).norm() > Scalar(1e6) * tol * scale(jh, x, probe))
        cache_->singular = true;
    });
    if (cache_->singular) throw SingularMatrixError("HamiltonianOperator::solve: J H is singular");
    return *cache_;
  }

  static Scalar scale(const Eigen::SparseMatrix<Scalar>& a, const Vector<Scalar>& x, const Vector<Scalar>& b) {
    Scalar norm_a = 0;
    for (Index k = 0; k < a.outerSize(); ++k) {
      Scalar col = 0;
      for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(a, k); it; ++it) col += std::abs(it.value());
      norm_a = std::max(norm_a, col);
    }
    return norm_a * x.norm() + b.norm();
  }

  Sparse e_;
  Sparse et_;
  Sparse b_;
  Sparse c_;
  bool solve_capable_;
  std::shared_ptr<SolveCache> cache_;
};

/// Residuals quantifying how far a basis and projected matrix are from the
/// structure the structure-preserving methods guarantee.
template <typename Scalar>
struct StructureReport {
  Scalar hamiltonian_residual = 0;     ///< ||J_k Ht - (J_k Ht)^T||_F
  Scalar j_orthogonality_residual = 0; ///< ||S^T J_n S - J_k||_F
  Scalar orthogonality_residual = 0;   ///< ||S^T S - I||_F
};

template <typename DerivedS, typename DerivedH>
StructureReport<typename DerivedS::Scalar> structure_report(const Eigen::MatrixBase<DerivedS>& S,
                                                            const Eigen::MatrixBase<DerivedH>& Htilde) {
  using Scalar = typename DerivedS::Scalar;
  detail::require(S.rows() % 2 == 0 && S.cols() % 2 == 0, "structure_report: S must be 2n x 2k");
  detail::require(Htilde.rows() == S.cols() && Htilde.cols() == S.cols(),
                  "structure_report: projected matrix must be 2k x 2k");
  const Index k = S.cols() / 2;
  StructureReport<Scalar> report;
  report.hamiltonian_residual = hamiltonian_residual(Htilde);
  const Matrix<Scalar> stjs = S.transpose() * JOperator(S.rows() / 2).apply(S);
  report.j_orthogonality_residual = (stjs - j_matrix<Scalar>(k)).norm();
  report.orthogonality_residual =
      (S.transpose() * S - Matrix<Scalar>::Identity(S.cols(), S.cols())).norm();
  return report;
}

/// J_k^T S^T J_n, the left inverse of a matrix with J-orthogonal columns.
template <typename Derived>
Matrix<typename Derived::Scalar> symplectic_left_inverse(const Eigen::MatrixBase<Derived>& S) {
  using Scalar = typename Derived::Scalar;
  detail::require(S.rows() % 2 == 0 && S.cols() % 2 == 0, "symplectic_left_inverse: S must be 2n x 2k");
  // J_k^T (S^T J_n) = J_k^T (-(J_n S))^T
  const Matrix<Scalar> stj = -JOperator(S.rows() / 2).apply(S).transpose();
  return -JOperator(S.cols() / 2).apply(stj);
}

/// Writes a sparse matrix in Matrix Market coordinate format.
template <typename Scalar, int Options>
void write_matrix_market(std::ostream& out, const Eigen::SparseMatrix<Scalar, Options>& M) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << M.rows() << ' ' << M.cols() << ' ' << M.nonZeros() << '\n';
  out << std::setprecision(17);
  for (Index k = 0; k < M.outerSize(); ++k)
    for (typename Eigen::SparseMatrix<Scalar, Options>::InnerIterator it(M, k); it; ++it)
      out << (it.row() + 1) << ' ' << (it.col() + 1) << ' ' << static_cast<double>(it.value()) << '\n';
}

/// Dense variant; every entry (including zeros) is written so the shape and
/// pattern survive a round trip.
template <typename Derived>
void write_matrix_market(std::ostream& out, const Eigen::MatrixBase<Derived>& M) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << M.rows() << ' ' << M.cols() << ' ' << M.rows() * M.cols() << '\n';
  out << std::setprecision(17);
  for (Index j = 0; j < M.cols(); ++j)
    for (Index i = 0; i < M.rows(); ++i)
      out << (i + 1) << ' ' << (j + 1) << ' ' << static_cast<double>(M(i, j)) << '\n';
}

}  // namespace hamkrylov
