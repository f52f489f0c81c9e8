#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "hamkrylov/krylov.hpp"
#include "hamkrylov/matfun.hpp"

namespace hamkrylov {

enum class FunctionId { kExp, kPhiExplicit, kPhiImplicit };

inline constexpr std::array<FunctionId, 3> kAllFunctions = {FunctionId::kExp, FunctionId::kPhiExplicit,
                                                            FunctionId::kPhiImplicit};

inline std::string_view to_string(FunctionId id) {
  switch (id) {
    case FunctionId::kExp: return "exp";
    case FunctionId::kPhiExplicit: return "phi_expl";
    case FunctionId::kPhiImplicit: return "phi_impl";
  }
  return "?";
}

inline std::optional<FunctionId> parse_function(std::string_view name) {
  for (FunctionId id : kAllFunctions)
    if (to_string(id) == name) return id;
  return std::nullopt;
}

/// Scalar type used for functions of the small projected matrix. For double
/// this is long double: when ||h Ht|| is large (the wave problems reach 1e4)
/// a double-precision e^{h Ht} loses symplecticity at the 1e-6 level.
template <typename Scalar>
struct ReducedScalar {
  using type = Scalar;
};
template <>
struct ReducedScalar<double> {
  using type = long double;
};
template <typename Scalar>
using reduced_scalar_t = typename ReducedScalar<Scalar>::type;

/// e^{h Ht}, evaluated in the reduced scalar type.
template <typename Scalar>
Matrix<Scalar> reduced_exponential(const KrylovDecomposition<Scalar>& d, Scalar h) {
  using X = reduced_scalar_t<Scalar>;
  const Matrix<X> a = X(h) * d.projected.template cast<X>();
  return expm(a).template cast<Scalar>();
}

/// f(h H) b ~ S f(h Ht) start_coord.
template <typename Scalar>
Vector<Scalar> approximate_action(const KrylovDecomposition<Scalar>& d, FunctionId f, Scalar h) {
  using X = reduced_scalar_t<Scalar>;
  const Index m = d.dim();
  if (m == 0) return Vector<Scalar>::Zero(d.full_dim());
  const Matrix<X> a = X(h) * d.projected.template cast<X>();
  const Vector<X> c = d.start_coord.template cast<X>();
  Vector<X> coord;
  switch (f) {
    case FunctionId::kExp: coord = expm(a) * c; break;
    case FunctionId::kPhiExplicit: coord = phi_explicit(a, c); break;
    case FunctionId::kPhiImplicit: coord = phi_implicit(a, c); break;
  }
  return d.basis * coord.template cast<Scalar>();
}

namespace detail {

// ||b|| |h rho e_c^T phi(h Ht) e_1| for the remainder rho in column c.
template <typename Scalar>
Scalar first_term_estimate(const KrylovDecomposition<Scalar>& d, Scalar h, Scalar b_norm) {
  if (!d.remainder_scalar || d.dim() == 0) throw std::invalid_argument("error estimate: decomposition has no remainder");
  const Scalar rho = *d.remainder_scalar;
  if (rho == Scalar(0)) return Scalar(0);
  using X = reduced_scalar_t<Scalar>;
  const Vector<X> e1 = Vector<X>::Unit(d.dim(), 0);
  const Vector<X> p = phi_implicit(Matrix<X>(X(h) * d.projected.template cast<X>()), e1);
  return b_norm * std::abs(h * rho * static_cast<Scalar>(p(d.remainder_column)));
}

}  // namespace detail

/// eps_k = ||b|| |h h_{k+1,k} e_k^T phi(h H_k) e_1| for an Arnoldi decomposition.
template <typename Scalar>
Scalar error_estimate_arnoldi(const KrylovDecomposition<Scalar>& d, Scalar h, Scalar b_norm) {
  if (d.method != MethodId::kA) throw std::invalid_argument("error_estimate_arnoldi: decomposition is not from A");
  return detail::first_term_estimate(d, h, b_norm);
}

/// eps_k = ||b|| |h beta_k e_{2k}^T phi(h H_2k) e_1| for a Hamiltonian
/// Lanczos decomposition.
template <typename Scalar>
Scalar error_estimate_hl(const KrylovDecomposition<Scalar>& d, Scalar h, Scalar b_norm) {
  if (d.method != MethodId::kHL) throw std::invalid_argument("error_estimate_hl: decomposition is not from HL");
  return detail::first_term_estimate(d, h, b_norm);
}

template <typename Scalar>
struct AdaptiveResult {
  Vector<Scalar> approximation;
  Index steps_used = 0;  ///< Arnoldi steps for A, pairs for HL
  std::vector<std::pair<Index, Scalar>> estimate_history;
  std::optional<Scalar> actual_error;  ///< relative, when a reference is supplied
  bool converged = false;
  Breakdown<Scalar> breakdown;
};

namespace detail {

template <typename Process, typename Scalar, typename Estimate>
AdaptiveResult<Scalar> adaptive_loop(Process& process, Index (Process::*size)() const, Estimate estimate,
                                     Scalar h, Scalar tol, Index k_max,
                                     const std::optional<Vector<Scalar>>& reference) {
  AdaptiveResult<Scalar> result;
  KrylovDecomposition<Scalar> d;
  while ((process.*size)() < k_max) {
    const bool extended = process.step();
    if ((process.*size)() == 0) break;
    d = process.decomposition();
    const Scalar eps = estimate(d, h, process.b_norm());
    result.estimate_history.emplace_back((process.*size)(), eps);
    if (eps <= tol || !extended) {
      result.converged = eps <= tol;
      break;
    }
  }
  if (d.dim() == 0) d = process.decomposition();
  result.steps_used = (process.*size)();
  result.breakdown = d.breakdown;
  result.approximation = approximate_action(d, FunctionId::kExp, h);
  if (reference) result.actual_error = (*reference - result.approximation).norm() / reference->norm();
  return result;
}

}  // namespace detail

/// Approximates e^{hH} b, growing the basis one Arnoldi step (A) or one
/// Lanczos pair (HL) at a time until the first-term estimate drops to tol
/// or k_max steps have been taken. An invariant-subspace breakdown makes the
/// estimate zero and counts as converged.
template <typename Scalar>
AdaptiveResult<Scalar> adaptive_run(const HamiltonianOperator<Scalar>& H, const Vector<Scalar>& b, Scalar h,
                                    Scalar tol, Index k_max, MethodId method, KrylovOptions<Scalar> opts = {},
                                    const std::optional<Vector<Scalar>>& reference = std::nullopt) {
  if (!(tol > Scalar(0))) throw std::invalid_argument("adaptive_run: tol must be positive");
  if (k_max < 1) throw std::invalid_argument("adaptive_run: k_max must be at least 1");
  if (method == MethodId::kA) {
    ArnoldiProcess<Scalar> process(H, b, opts);
    return detail::adaptive_loop(process, &ArnoldiProcess<Scalar>::steps, error_estimate_arnoldi<Scalar>, h, tol,
                                 k_max, reference);
  }
  if (method == MethodId::kHL) {
    HamiltonianLanczosProcess<Scalar> process(H, b, opts);
    return detail::adaptive_loop(process, &HamiltonianLanczosProcess<Scalar>::pairs, error_estimate_hl<Scalar>, h,
                                 tol, k_max, reference);
  }
  throw std::invalid_argument("adaptive_run: only A and HL support adaptive growth");
}

}  // namespace hamkrylov
