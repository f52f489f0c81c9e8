#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hamkrylov {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

/// Thrown when operand shapes do not fit together.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a matrix is singular to working precision.
class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const char* what) {
  if (!condition) throw DimensionError(what);
}

}  // namespace detail

/// Orthonormal basis of range(M) via column-pivoted Householder QR.
///
/// A column is kept only if its post-orthogonalization norm (the magnitude
/// of the matching diagonal entry of R) is at least rank_tol * ||M||_F, so
/// the result may have fewer columns than M. A matrix whose columns are all
/// deflated yields a rows x 0 result.
template <typename Derived>
Matrix<typename Derived::Scalar> qr_orthonormalize(
    const Eigen::MatrixBase<Derived>& M,
    typename Derived::Scalar rank_tol = typename Derived::Scalar(1e-12)) {
  using Scalar = typename Derived::Scalar;
  if (!(rank_tol > Scalar(0))) throw std::invalid_argument("qr_orthonormalize: rank_tol must be positive");

  const Index rows = M.rows();
  const Scalar frobenius = M.norm();
  if (M.cols() == 0 || rows == 0 || frobenius == Scalar(0)) return Matrix<Scalar>(rows, 0);

  Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr(M.eval());
  const auto& r = qr.matrixQR();
  const Index diag = std::min(rows, M.cols());
  Index rank = 0;
  // Pivoting sorts |R_ii| in decreasing order.
  while (rank < diag && std::abs(r(rank, rank)) >= rank_tol * frobenius) ++rank;

  Matrix<Scalar> q = Matrix<Scalar>::Identity(rows, rank);
  q.applyOnTheLeft(qr.householderQ());
  return q;
}

/// Solves A x = b with partial pivoting; throws SingularMatrixError when A is
/// singular to working precision.
template <typename DerivedA, typename DerivedB>
Vector<typename DerivedA::Scalar> solve_linear(const Eigen::MatrixBase<DerivedA>& A,
                                               const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  detail::require(A.rows() == A.cols(), "solve_linear: matrix must be square");
  detail::require(b.size() == A.rows(), "solve_linear: right-hand side length mismatch");
  if (A.rows() == 0) return Vector<Scalar>(0);

  Eigen::PartialPivLU<Matrix<Scalar>> lu(A.eval());
  const Scalar rcond = lu.rcond();
  if (!(rcond > std::numeric_limits<Scalar>::epsilon()))
    throw SingularMatrixError("solve_linear: matrix is singular to working precision (rcond = " +
                              std::to_string(static_cast<double>(rcond)) + ")");
  return lu.solve(b);
}

template <typename DerivedA, typename DerivedX>
Vector<typename DerivedA::Scalar> matvec(const Eigen::MatrixBase<DerivedA>& A,
                                         const Eigen::MatrixBase<DerivedX>& x) {
  detail::require(A.cols() == x.size(), "matvec: dimension mismatch");
  return A * x;
}

}  // namespace hamkrylov
