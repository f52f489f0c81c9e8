#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string_view>

#include "hamkrylov/dense.hpp"

namespace hamkrylov {

/// Thrown when the exponential overflows the floating point range.
class OverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/// How phi(A)b is evaluated on a dense matrix.
enum class PhiMode {
  kExplicit,  ///< (e^A - I) A^{-1} b
  kImplicit,  ///< top-right block of the exponential of [[A, b], [0, 0]]
};

namespace detail {

// Diagonal Pade approximants r_m(A) = q_m(A)^{-1} p_m(A) and the 1-norm
// bounds theta_m below which they are accurate to double precision
// (Higham, SIAM J. Matrix Anal. Appl. 26(4), 2005).
inline constexpr std::array<double, 4> kPade3 = {120.0, 60.0, 12.0, 1.0};
inline constexpr std::array<double, 6> kPade5 = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
inline constexpr std::array<double, 8> kPade7 = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                                 25200.0,    1512.0,    56.0,      1.0};
inline constexpr std::array<double, 10> kPade9 = {17643225600.0, 8821612800.0, 2075673600.0,
                                                  302702400.0,   30270240.0,   2162160.0,
                                                  110880.0,      3960.0,       90.0,
                                                  1.0};
inline constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
    1323241920.0,        40840800.0,          960960.0,           16380.0,
    182.0,               1.0};

inline constexpr double kTheta3 = 1.495585217958292e-2;
inline constexpr double kTheta5 = 2.539398330063230e-1;
inline constexpr double kTheta7 = 9.504178996162932e-1;
inline constexpr double kTheta9 = 2.097847961257068e0;
inline constexpr double kTheta13 = 5.371920351148152e0;

template <typename Scalar>
Scalar one_norm(const Matrix<Scalar>& A) {
  return A.cwiseAbs().colwise().sum().maxCoeff();
}

// Low-degree approximant: U holds the odd part, V the even part.
template <typename Scalar, std::size_t N>
Matrix<Scalar> pade_low(const Matrix<Scalar>& A, const std::array<double, N>& c) {
  const Index m = A.rows();
  const Matrix<Scalar> id = Matrix<Scalar>::Identity(m, m);
  const Matrix<Scalar> a2 = A * A;
  Matrix<Scalar> power = id;
  Matrix<Scalar> odd = Scalar(c[1]) * id;
  Matrix<Scalar> even = Scalar(c[0]) * id;
  for (std::size_t k = 2; k < N; k += 2) {
    power = power * a2;
    even.noalias() += Scalar(c[k]) * power;
    if (k + 1 < N) odd.noalias() += Scalar(c[k + 1]) * power;
  }
  const Matrix<Scalar> u = A * odd;
  return (even - u).partialPivLu().solve(even + u);
}

template <typename Scalar>
Matrix<Scalar> pade13(const Matrix<Scalar>& A) {
  const auto& c = kPade13;
  const Index m = A.rows();
  const Matrix<Scalar> id = Matrix<Scalar>::Identity(m, m);
  const Matrix<Scalar> a2 = A * A;
  const Matrix<Scalar> a4 = a2 * a2;
  const Matrix<Scalar> a6 = a4 * a2;
  Matrix<Scalar> tmp = Scalar(c[13]) * a6 + Scalar(c[11]) * a4 + Scalar(c[9]) * a2;
  Matrix<Scalar> u_inner = a6 * tmp;
  u_inner += Scalar(c[7]) * a6 + Scalar(c[5]) * a4 + Scalar(c[3]) * a2 + Scalar(c[1]) * id;
  const Matrix<Scalar> u = A * u_inner;
  tmp = Scalar(c[12]) * a6 + Scalar(c[10]) * a4 + Scalar(c[8]) * a2;
  Matrix<Scalar> v = a6 * tmp;
  v += Scalar(c[6]) * a6 + Scalar(c[4]) * a4 + Scalar(c[2]) * a2 + Scalar(c[0]) * id;
  return (v - u).partialPivLu().solve(v + u);
}

}  // namespace detail

/// Matrix exponential by scaling and squaring with a diagonal Pade
/// approximant (degrees 3, 5, 7, 9, 13). No balancing is applied.
template <typename Derived>
Matrix<typename Derived::Scalar> expm(const Eigen::MatrixBase<Derived>& A_in) {
  using Scalar = typename Derived::Scalar;
  detail::require(A_in.rows() == A_in.cols(), "expm: matrix must be square");
  const Matrix<Scalar> A = A_in;
  const Index m = A.rows();
  if (m == 0) return Matrix<Scalar>(0, 0);
  if (!A.allFinite()) throw OverflowError("expm: input has non-finite entries");

  const Scalar norm = detail::one_norm(A);
  Matrix<Scalar> result;
  if (norm <= Scalar(detail::kTheta3)) {
    result = detail::pade_low<Scalar>(A, detail::kPade3);
  } else if (norm <= Scalar(detail::kTheta5)) {
    result = detail::pade_low<Scalar>(A, detail::kPade5);
  } else if (norm <= Scalar(detail::kTheta7)) {
    result = detail::pade_low<Scalar>(A, detail::kPade7);
  } else if (norm <= Scalar(detail::kTheta9)) {
    result = detail::pade_low<Scalar>(A, detail::kPade9);
  } else {
    int squarings = 0;
    if (norm > Scalar(detail::kTheta13))
      squarings = static_cast<int>(std::ceil(std::log2(static_cast<double>(norm / Scalar(detail::kTheta13)))));
    if (squarings > 1000) throw OverflowError("expm: norm too large for scaling and squaring");
    const Matrix<Scalar> scaled = A / std::ldexp(Scalar(1), squarings);
    result = detail::pade13<Scalar>(scaled);
    for (int i = 0; i < squarings; ++i) result = (result * result).eval();
  }
  if (!result.allFinite()) throw OverflowError("expm: result overflowed");
  return result;
}

/// phi(A)b = (e^A - I) A^{-1} b. Throws SingularMatrixError for singular A.
template <typename DerivedA, typename DerivedB>
Vector<typename DerivedA::Scalar> phi_explicit(const Eigen::MatrixBase<DerivedA>& A,
                                               const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  detail::require(A.rows() == A.cols(), "phi_explicit: matrix must be square");
  detail::require(b.size() == A.rows(), "phi_explicit: vector length mismatch");
  const Vector<Scalar> x = solve_linear(A, b);
  Matrix<Scalar> e = expm(A);
  e.diagonal().array() -= Scalar(1);
  return e * x;
}

/// Exponential of the augmented matrix [[A, b], [0, 0]]. Its leading block is
/// e^A and its last column holds phi(A)b above a trailing one.
template <typename DerivedA, typename DerivedB>
Matrix<typename DerivedA::Scalar> augmented_exponential(const Eigen::MatrixBase<DerivedA>& A,
                                                        const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  detail::require(A.rows() == A.cols(), "augmented_exponential: matrix must be square");
  detail::require(b.size() == A.rows(), "augmented_exponential: vector length mismatch");
  const Index m = A.rows();
  Matrix<Scalar> augmented = Matrix<Scalar>::Zero(m + 1, m + 1);
  augmented.topLeftCorner(m, m) = A;
  augmented.topRightCorner(m, 1) = b;
  return expm(augmented);
}

/// phi(A)b read off the exponential of the augmented matrix; valid for
/// singular A.
template <typename DerivedA, typename DerivedB>
Vector<typename DerivedA::Scalar> phi_implicit(const Eigen::MatrixBase<DerivedA>& A,
                                               const Eigen::MatrixBase<DerivedB>& b) {
  const Index m = A.rows();
  return augmented_exponential(A, b).topRightCorner(m, 1);
}

template <typename DerivedA, typename DerivedB>
Vector<typename DerivedA::Scalar> phi(const Eigen::MatrixBase<DerivedA>& A,
                                      const Eigen::MatrixBase<DerivedB>& b, PhiMode mode) {
  return mode == PhiMode::kExplicit ? phi_explicit(A, b) : phi_implicit(A, b);
}

inline std::string_view to_string(PhiMode mode) {
  return mode == PhiMode::kExplicit ? "explicit" : "implicit";
}

}  // namespace hamkrylov
