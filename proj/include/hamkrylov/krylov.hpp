#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "hamkrylov/dense.hpp"
#include "hamkrylov/hamiltonian.hpp"

namespace hamkrylov {

enum class MethodId { kA, kHL, kSA, kIA, kHEKS, kBJ };

inline constexpr std::array<MethodId, 6> kAllMethods = {MethodId::kA,  MethodId::kHL,   MethodId::kSA,
                                                        MethodId::kIA, MethodId::kHEKS, MethodId::kBJ};

inline std::string_view to_string(MethodId id) {
  switch (id) {
    case MethodId::kA: return "A";
    case MethodId::kHL: return "HL";
    case MethodId::kSA: return "SA";
    case MethodId::kIA: return "IA";
    case MethodId::kHEKS: return "HEKS";
    case MethodId::kBJ: return "BJ";
  }
  return "?";
}

inline std::optional<MethodId> parse_method(std::string_view name) {
  for (MethodId id : kAllMethods)
    if (to_string(id) == name) return id;
  return std::nullopt;
}

/// Which left inverse W^T of the basis maps the full space onto coordinates.
enum class LeftInverse {
  kTranspose,   ///< W^T = S^T
  kSymplectic,  ///< W^T = J_k^T S^T J_n
};

/// Work performed while building a basis.
///
/// `matvecs` counts products of H with vectors of the generated sequence.
/// `projection_matvecs` counts the extra products some methods spend on the
/// projected matrix (H J u for IA, H S for SA). `inner_products` counts the
/// coefficient inner products of the recurrence only; norms and the
/// re-orthogonalization passes are not included.
struct OperationCounts {
  long long matvecs = 0;
  long long projection_matvecs = 0;
  long long solves = 0;
  long long inner_products = 0;
};

enum class BreakdownKind {
  kNone,
  kInvariant,  ///< next vector vanished; the subspace is H-invariant
  kSerious,    ///< a normalization scalar vanished without an invariant subspace
};

template <typename Scalar>
struct Breakdown {
  bool occurred = false;
  Index step = 0;  ///< 1-based step (or block) at which the recurrence stopped
  Scalar value = 0;
  BreakdownKind kind = BreakdownKind::kNone;
};

template <typename Scalar>
struct BreakdownPolicy {
  Scalar tol = Scalar(1e-14);
};

template <typename Scalar>
struct KrylovOptions {
  BreakdownPolicy<Scalar> policy{};
  bool reorthogonalize = true;     ///< second Gram-Schmidt pass (A, SA, IA, BJ)
  bool re_j_orthogonalize = true;  ///< J-projector on new vectors (HL, SA, IA, HEKS)
};

/// Basis S, projected matrix Ht and the data needed to map back:
/// f(H) b ~ S f(Ht) start_coord.
template <typename Scalar>
struct KrylovDecomposition {
  MethodId method = MethodId::kA;
  Matrix<Scalar> basis;
  Matrix<Scalar> projected;
  LeftInverse left_inverse = LeftInverse::kTranspose;
  Vector<Scalar> start_coord;
  /// Coupling of the next basis vector into column `remainder_column`:
  /// H S = S Ht + next_vector * remainder_scalar * e_c^T. Set for A and HL.
  std::optional<Scalar> remainder_scalar;
  Index remainder_column = -1;
  Vector<Scalar> next_vector;
  Breakdown<Scalar> breakdown;
  OperationCounts counts;

  Index dim() const { return basis.cols(); }
  Index full_dim() const { return basis.rows(); }

  Matrix<Scalar> left_inverse_matrix() const {
    if (left_inverse == LeftInverse::kTranspose) return basis.transpose();
    return symplectic_left_inverse(basis);
  }
};

namespace detail {

// a^T J b
template <typename DA, typename DB>
typename DA::Scalar jdot(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  const Index n = a.size() / 2;
  return a.head(n).dot(b.tail(n)) - a.tail(n).dot(b.head(n));
}

template <typename Scalar>
Vector<Scalar> times_J(const Vector<Scalar>& x) {
  const Index n = x.size() / 2;
  Vector<Scalar> y(x.size());
  y.head(n) = x.tail(n);
  y.tail(n) = -x.head(n);
  return y;
}

template <typename Scalar>
Vector<Scalar> apply_H(const HamiltonianOperator<Scalar>& H, const Vector<Scalar>& x, OperationCounts& counts,
                       long long OperationCounts::*counter = &OperationCounts::matvecs) {
  ++(counts.*counter);
  return H.apply(x);
}

template <typename Scalar>
Vector<Scalar> solve_H(const HamiltonianOperator<Scalar>& H, const Vector<Scalar>& x, OperationCounts& counts) {
  ++counts.solves;
  return H.solve(x);
}

template <typename Scalar>
Vector<Scalar> unit_start(Index m, Scalar b_norm) {
  Vector<Scalar> c = Vector<Scalar>::Zero(m);
  if (m > 0) c(0) = b_norm;
  return c;
}

template <typename Scalar>
Scalar checked_norm(const Vector<Scalar>& b, const char* who) {
  const Scalar norm = b.norm();
  if (!(norm > Scalar(0)) || !std::isfinite(static_cast<double>(norm)))
    throw std::invalid_argument(std::string(who) + ": starting vector must be nonzero and finite");
  return norm;
}

// J-orthogonal pairs (m_i, n_i) with m_i^T J n_i = 1, kept so new vectors
// can be projected against them.
template <typename Scalar>
class PairSet {
 public:
  void add(const Vector<Scalar>& m, const Vector<Scalar>& n) {
    m_.push_back(m);
    n_.push_back(n);
  }
  std::size_t size() const { return m_.size(); }

  // x <- x + sum_i m_i (n_i^T J x) - n_i (m_i^T J x), one pair at a time.
  void project(Vector<Scalar>& x) const {
    for (std::size_t i = 0; i < m_.size(); ++i) {
      const Scalar a = jdot(n_[i], x);
      const Scalar c = jdot(m_[i], x);
      x.noalias() += a * m_[i];
      x.noalias() -= c * n_[i];
    }
  }

 private:
  std::vector<Vector<Scalar>> m_;
  std::vector<Vector<Scalar>> n_;
};

template <typename Scalar>
Matrix<Scalar> columns(const std::vector<Vector<Scalar>>& cols, Index rows) {
  Matrix<Scalar> m(rows, static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) m.col(static_cast<Index>(j)) = cols[j];
  return m;
}

// Replaces J Ht by its symmetric part, so the result is exactly Hamiltonian.
template <typename Scalar>
Matrix<Scalar> hamiltonian_part(const Matrix<Scalar>& Ht) {
  const Index k = Ht.rows() / 2;
  const JOperator jk(k);
  Matrix<Scalar> jh = jk.apply(Ht);
  const Matrix<Scalar> sym = (jh + jh.transpose()) * Scalar(0.5);
  // Ht = J_k^T sym = -J_k sym
  return -jk.apply(sym);
}

}  // namespace detail

/// Arnoldi process with modified Gram-Schmidt, extended one step at a time.
template <typename Scalar>
class ArnoldiProcess {
 public:
  ArnoldiProcess(const HamiltonianOperator<Scalar>& H, const Vector<Scalar>& b, KrylovOptions<Scalar> opts = {})
      : H_(&H), opts_(opts) {
    detail::require(b.size() == H.dim(), "arnoldi: vector length mismatch");
    b_norm_ = detail::checked_norm(b, "arnoldi");
    u_.push_back(b / b_norm_);
  }

  /// Performs one step; returns false once the recurrence has stopped.
  bool step() {
    if (stopped_) return false;
    const Index j = steps_;
    Vector<Scalar> z = detail::apply_H(*H_, u_[static_cast<std::size_t>(j)], counts_);
    std::vector<Scalar> h(static_cast<std::size_t>(j + 2), Scalar(0));
    for (Index i = 0; i <= j; ++i) {
      const auto& ui = u_[static_cast<std::size_t>(i)];
      h[static_cast<std::size_t>(i)] = ui.dot(z);
      z.noalias() -= h[static_cast<std::size_t>(i)] * ui;
    }
    counts_.inner_products += j + 1;
    if (opts_.reorthogonalize) {
      for (Index i = 0; i <= j; ++i) {
        const auto& ui = u_[static_cast<std::size_t>(i)];
        const Scalar c = ui.dot(z);
        h[static_cast<std::size_t>(i)] += c;
        z.noalias() -= c * ui;
      }
    }
    const Scalar next = z.norm();
    h[static_cast<std::size_t>(j + 1)] = next;
    coeffs_.push_back(std::move(h));
    ++steps_;
    if (next < opts_.policy.tol) {
      stopped_ = true;
      breakdown_ = {true, steps_, next, BreakdownKind::kInvariant};
      return false;
    }
    u_.push_back(z / next);
    return true;
  }

  Index steps() const { return steps_; }
  bool stopped() const { return stopped_; }
  Scalar b_norm() const { return b_norm_; }

  KrylovDecomposition<Scalar> decomposition() const {
    const Index k = steps_;
    const Index rows = H_->dim();
    KrylovDecomposition<Scalar> d;
    d.method = MethodId::kA;
    d.basis.resize(rows, k);
    for (Index j = 0; j < k; ++j) d.basis.col(j) = u_[static_cast<std::size_t>(j)];
    d.projected = Matrix<Scalar>::Zero(k, k);
    for (Index j = 0; j < k; ++j) {
      const auto& h = coeffs_[static_cast<std::size_t>(j)];
      for (Index i = 0; i <= std::min(j + 1, k - 1); ++i) d.projected(i, j) = h[static_cast<std::size_t>(i)];
    }
    d.left_inverse = LeftInverse::kTranspose;
    d.start_coord = detail::unit_start<Scalar>(k, b_norm_);
    if (k > 0) {
      d.remainder_column = k - 1;
      if (stopped_) {
        d.remainder_scalar = Scalar(0);
        d.next_vector = Vector<Scalar>::Zero(rows);
      } else {
        d.remainder_scalar = coeffs_.back()[static_cast<std::size_t>(k)];
        d.next_vector = u_[static_cast<std::size_t>(k)];
      }
    }
    d.breakdown = breakdown_;
    d.counts = counts_;
    return d;
  }

 private:
  const HamiltonianOperator<Scalar>* H_;
  KrylovOptions<Scalar> opts_;
  Scalar b_norm_ = 0;
  std::vector<Vector<Scalar>> u_;
  std::vector<std::vector<Scalar>> coeffs_;  // column j of the extended Hessenberg matrix
  Index steps_ = 0;
  bool stopped_ = false;
  Breakdown<Scalar> breakdown_;
  OperationCounts counts_;
};

/// Hamiltonian Lanczos process, extended one pair at a time.
///
/// The recurrence runs with unit-norm u_j and v_j scaled by delta_j. It
/// yields u_j^T J v_j = -1, so the basis is presented as S = [U, -V], which
/// is J-orthogonal in the usual orientation, with
/// Ht = [[G, -T], [-D, -G]] and next vector -u_{k+1}.
template <typename Scalar>
class HamiltonianLanczosProcess {
 public:
  HamiltonianLanczosProcess(const HamiltonianOperator<Scalar>& H, const Vector<Scalar>& b,
                            KrylovOptions<Scalar> opts = {})
      : H_(&H), opts_(opts) {
    detail::require(b.size() == H.dim(), "hamiltonian_lanczos: vector length mismatch");
    b_norm_ = detail::checked_norm(b, "hamiltonian_lanczos");
    u_.push_back(b / b_norm_);
  }

  bool step() {
    if (stopped_) return false;
    const std::size_t j = static_cast<std::size_t>(pairs_);  // 0-based index of u_j
    const Vector<Scalar>& uj = u_[j];
    const Vector<Scalar> u = detail::apply_H(*H_, uj, counts_);
    const Scalar gamma = uj.dot(u);
    Vector<Scalar> v = u - gamma * uj;
    const Scalar delta = detail::jdot(u, uj);
    counts_.inner_products += 2;
    if (std::abs(delta) < opts_.policy.tol) {
      stopped_ = true;
      breakdown_ = {true, pairs_ + 1, delta, BreakdownKind::kSerious};
      return false;
    }
    v /= delta;
    if (opts_.re_j_orthogonalize) pairs_set_.project(v);

    const Vector<Scalar> w = detail::apply_H(*H_, v, counts_);
    const Scalar alpha = -detail::jdot(w, v);
    counts_.inner_products += 1;
    Vector<Scalar> next = w - alpha * uj + gamma * v;
    if (j > 0) next.noalias() -= beta_[j - 1] * u_[j - 1];
    // The pair (u_j, -v_j) satisfies u_j^T J (-v_j) = 1.
    pairs_set_.add(uj, -v);
    if (opts_.re_j_orthogonalize) pairs_set_.project(next);
    const Scalar beta = next.norm();

    gamma_.push_back(gamma);
    delta_.push_back(delta);
    alpha_.push_back(alpha);
    beta_.push_back(beta);
    v_.push_back(std::move(v));
    ++pairs_;
    if (beta < opts_.policy.tol) {
      stopped_ = true;
      breakdown_ = {true, pairs_, beta, BreakdownKind::kInvariant};
      return false;
    }
    u_.push_back(next / beta);
    return true;
  }

  Index pairs() const { return pairs_; }
  bool stopped() const { return stopped_; }
  Scalar b_norm() const { return b_norm_; }

  const std::vector<Scalar>& gamma() const { return gamma_; }
  const std::vector<Scalar>& delta() const { return delta_; }
  const std::vector<Scalar>& alpha() const { return alpha_; }
  const std::vector<Scalar>& beta() const { return beta_; }

  KrylovDecomposition<Scalar> decomposition() const {
    const Index k = pairs_;
    const Index rows = H_->dim();
    KrylovDecomposition<Scalar> d;
    d.method = MethodId::kHL;
    d.basis.resize(rows, 2 * k);
    for (Index j = 0; j < k; ++j) {
      d.basis.col(j) = u_[static_cast<std::size_t>(j)];
      d.basis.col(k + j) = -v_[static_cast<std::size_t>(j)];
    }
    d.projected = Matrix<Scalar>::Zero(2 * k, 2 * k);
    for (Index j = 0; j < k; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      d.projected(j, j) = gamma_[sj];
      d.projected(k + j, k + j) = -gamma_[sj];
      d.projected(k + j, j) = -delta_[sj];
      d.projected(j, k + j) = -alpha_[sj];
      if (j + 1 < k) {
        d.projected(j, k + j + 1) = -beta_[sj];
        d.projected(j + 1, k + j) = -beta_[sj];
      }
    }
    d.left_inverse = LeftInverse::kSymplectic;
    d.start_coord = detail::unit_start<Scalar>(2 * k, b_norm_);
    if (k > 0) {
      d.remainder_column = 2 * k - 1;
      const bool invariant = stopped_ && breakdown_.kind == BreakdownKind::kInvariant;
      if (invariant) {
        d.remainder_scalar = Scalar(0);
        d.next_vector = Vector<Scalar>::Zero(rows);
      } else {
        d.remainder_scalar = beta_[static_cast<std::size_t>(k - 1)];
        d.next_vector = -u_[static_cast<std::size_t>(k)];
      }
    }
    d.breakdown = breakdown_;
    d.counts = counts_;
    return d;
  }

 private:
  const HamiltonianOperator<Scalar>* H_;
  KrylovOptions<Scalar> opts_;
  Scalar b_norm_ = 0;
  std::vector<Vector<Scalar>> u_;
  std::vector<Vector<Scalar>> v_;
  std::vector<Scalar> gamma_, delta_, alpha_, beta_;
  detail::PairSet<Scalar> pairs_set_;
  Index pairs_ = 0;
  bool stopped_ = false;
  Breakdown<Scalar> breakdown_;
  OperationCounts counts_;
};

/// k steps of the Arnoldi process; S = U_k, Ht = the k x k Hessenberg matrix.
template <typename Scalar>
KrylovDecomposition<Scalar> arnoldi(const HamiltonianOperator<Scalar>& H, const Vector<Scalar>& b, Index k,
                                    KrylovOptions<Scalar> opts = {}) {
  if (k < 1) throw std::invalid_argument("arnoldi: k must be at least 1");
  ArnoldiProcess<Scalar> process(H, b, opts);
  while (process.steps() < k && process.step()) {
  }
  return process.decomposition();
}

/// k pairs of the Hamiltonian Lanczos process.
template <typename Scalar>
KrylovDecomposition<Scalar> hamiltonian_lanczos(const HamiltonianOperator<Scalar>& H, const Vector<Scalar>& b,
                                                Index k, KrylovOptions<Scalar> opts = {}) {
  if (k < 1) throw std::invalid_argument("hamiltonian_lanczos: k must be at least 1");
  HamiltonianLanczosProcess<Scalar> process(H, b, opts);
  while (process.pairs() < k && process.step()) {
  }
  return process.decomposition();
}

/// Symplectic Arnoldi: an Arnoldi sequence u_j drives a second sequence v_j
/// that is orthogonalized against both v_i and J v_i. S = [V, -J V] is
/// orthogonal and symplectic; Ht is the projection J_k^T S^T J H S with J Ht
/// replaced by its symmetric part.
template <typename Scalar>
KrylovDecomposition<Scalar> symplectic_arnoldi(const HamiltonianOperator<Scalar>& H, const Vector<Scalar>& b,
                                               Index k, KrylovOptions<Scalar> opts = {}) {
  if (k < 1) throw std::invalid_argument("symplectic_arnoldi: k must be at least 1");
  detail::require(b.size() == H.dim(), "symplectic_arnoldi: vector length mismatch");
  const Scalar b_norm = detail::checked_norm(b, "symplectic_arnoldi");
  const Index rows = H.dim();
  KrylovDecomposition<Scalar> d;
  d.method = MethodId::kSA;

  std::vector<Vector<Scalar>> u{b / b_norm};
  std::vector<Vector<Scalar>> v{u.front()};
  std::vector<Vector<Scalar>> jv{detail::times_J(v.front())};
  for (Index j = 1; j <= k; ++j) {
    Vector<Scalar> z = detail::apply_H(H, u.back(), d.counts);
    const int passes = opts.reorthogonalize ? 2 : 1;
    for (int pass = 0; pass < passes; ++pass)
      for (const auto& ui : u) z.noalias() -= ui.dot(z) * ui;
    d.counts.inner_products += j;
    const Scalar z_norm = z.norm();
    if (z_norm < opts.policy.tol) {
      d.breakdown = {true, j, z_norm, BreakdownKind::kInvariant};
      break;
    }
    u.push_back(z / z_norm);
    // v_{k+1} would not enter S.
    if (j == k) break;

    Vector<Scalar> w = u.back();
    const int j_passes = opts.re_j_orthogonalize ? 2 : 1;
    for (int pass = 0; pass < j_passes; ++pass) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        // v <- v - (v_i^T v) v_i - (v_i^T J^T v) J v_i
        const Scalar a = v[i].dot(w);
        const Scalar c = jv[i].dot(w);
        w.noalias() -= a * v[i];
        w.noalias() -= c * jv[i];
      }
    }
    d.counts.inner_products += 2 * j;
    const Scalar w_norm = w.norm();
    if (w_norm < opts.policy.tol) {
      d.breakdown = {true, j, w_norm, BreakdownKind::kSerious};
      break;
    }
    v.push_back(w / w_norm);
    jv.push_back(detail::times_J(v.back()));
  }

  const Index m = static_cast<Index>(v.size());
  d.basis.resize(rows, 2 * m);
  for (Index i = 0; i < m; ++i) {
    d.basis.col(i) = v[static_cast<std::size_t>(i)];
    d.basis.col(m + i) = -jv[static_cast<std::size_t>(i)];
  }
  const Matrix<Scalar> hs = H.apply(d.basis);
  d.counts.projection_matvecs += 2 * m;
  d.projected = detail::hamiltonian_part<Scalar>(symplectic_left_inverse(d.basis) * hs);
  d.left_inverse = LeftInverse::kSymplectic;
  d.start_coord = detail::unit_start<Scalar>(2 * m, b_norm);
  return d;
}

/// Isotropic Arnoldi: Arnoldi with an extra J-orthogonalization against
/// J u_j. S = [U, -J U]; Ht = [[T, N], [-D, -T^T]] from the recurrence
/// coefficients (T upper Hessenberg, D diagonal, N symmetric).
template <typename Scalar>
KrylovDecomposition<Scalar> isotropic_arnoldi(const HamiltonianOperator<Scalar>& H, const Vector<Scalar>& b,
                                              Index k, KrylovOptions<Scalar> opts = {}) {
  if (k < 1) throw std::invalid_argument("isotropic_arnoldi: k must be at least 1");
  detail::require(b.size() == H.dim(), "isotropic_arnoldi: vector length mismatch");
  const Scalar b_norm = detail::checked_norm(b, "isotropic_arnoldi");
  const Index rows = H.dim();
  KrylovDecomposition<Scalar> d;
  d.method = MethodId::kIA;

  Matrix<Scalar> t = Matrix<Scalar>::Zero(k + 1, k);
  Matrix<Scalar> nmat = Matrix<Scalar>::Zero(k, k);
  Vector<Scalar> dvec = Vector<Scalar>::Zero(k);
  std::vector<Vector<Scalar>> u{b / b_norm};
  detail::PairSet<Scalar> pairs;
  Index done = 0;
  for (Index j = 0; j < k; ++j) {
    const Vector<Scalar>& uj = u[static_cast<std::size_t>(j)];
    const Vector<Scalar> juj = detail::times_J(uj);
    pairs.add(uj, -juj);
    Vector<Scalar> z = detail::apply_H(H, uj, d.counts);
    for (Index i = 0; i <= j; ++i) {
      const auto& ui = u[static_cast<std::size_t>(i)];
      t(i, j) = ui.dot(z);
      z.noalias() -= t(i, j) * ui;
    }
    if (opts.reorthogonalize) {
      for (Index i = 0; i <= j; ++i) {
        const auto& ui = u[static_cast<std::size_t>(i)];
        const Scalar c = ui.dot(z);
        t(i, j) += c;
        z.noalias() -= c * ui;
      }
    }
    // d_jj = u_j^T J^T z = (J u_j)^T z
    dvec(j) = juj.dot(z);
    z.noalias() -= dvec(j) * juj;
    d.counts.inner_products += j + 2;
    if (opts.re_j_orthogonalize) pairs.project(z);
    const Scalar t_next = z.norm();
    t(j + 1, j) = t_next;

    const Vector<Scalar> hju = detail::apply_H(H, juj, d.counts, &OperationCounts::projection_matvecs);
    for (Index i = 0; i <= j; ++i) {
      const Scalar value = -u[static_cast<std::size_t>(i)].dot(hju);
      nmat(i, j) = value;
      nmat(j, i) = value;
    }
    d.counts.inner_products += j + 1;
    done = j + 1;
    if (t_next < opts.policy.tol) {
      d.breakdown = {true, j + 1, t_next, BreakdownKind::kInvariant};
      break;
    }
    u.push_back(z / t_next);
  }

  const Index m = done;
  d.basis.resize(rows, 2 * m);
  for (Index i = 0; i < m; ++i) {
    const auto& ui = u[static_cast<std::size_t>(i)];
    d.basis.col(i) = ui;
    d.basis.col(m + i) = -detail::times_J(ui);
  }
  const Matrix<Scalar> tk = t.topLeftCorner(m, m);
  d.projected.resize(2 * m, 2 * m);
  d.projected.topLeftCorner(m, m) = tk;
  d.projected.topRightCorner(m, m) = nmat.topLeftCorner(m, m);
  d.projected.bottomLeftCorner(m, m) = -Matrix<Scalar>(dvec.head(m).asDiagonal());
  d.projected.bottomRightCorner(m, m) = -tk.transpose();
  d.left_inverse = LeftInverse::kSymplectic;
  d.start_coord = detail::unit_start<Scalar>(2 * m, b_norm);
  return d;
}

/// Hamiltonian extended Krylov subspace method with t = s = ell blocks.
///
/// S = [y_ell..y_1, u_1..u_ell, x_ell..x_1, v_1..v_ell] spans
/// K_{2 ell}(H, u) + K_{2 ell}(H^{-1}, H^{-1} u). The projected matrix has
/// the block pattern [[0, 0, Lambda, B], [0, 0, B^T, T], [Delta, 0, 0, 0],
/// [0, Theta, 0, 0]] and is assembled from the recurrence coefficients.
/// Requires a solve-capable operator. A breakdown in block j returns the
/// first j - 1 blocks.
template <typename Scalar>
KrylovDecomposition<Scalar> heks(const HamiltonianOperator<Scalar>& H, const Vector<Scalar>& b, Index ell,
                                 KrylovOptions<Scalar> opts = {}) {
  if (ell < 1) throw std::invalid_argument("heks: ell must be at least 1");
  detail::require(b.size() == H.dim(), "heks: vector length mismatch");
  const Scalar b_norm = detail::checked_norm(b, "heks");
  const Index rows = H.dim();
  const Scalar tol = opts.policy.tol;
  KrylovDecomposition<Scalar> d;
  d.method = MethodId::kHEKS;
  OperationCounts& counts = d.counts;
  using detail::jdot;

  std::vector<Vector<Scalar>> u, v, x, y, hv, hinv_u, hinv_y;
  std::vector<Scalar> theta, lambda, delta, alpha, beta, gamma, mu;
  detail::PairSet<Scalar> pairs;
  const auto project = [&](Vector<Scalar>& w) {
    if (opts.re_j_orthogonalize) pairs.project(w);
  };

  // alpha_i, beta_i, gamma_i, mu_i of block i (1-based) from H v_i.
  const auto close_block = [&](std::size_t i) {
    const std::size_t c = i - 1;
    hv.push_back(detail::apply_H(H, v[c], counts));
    alpha.push_back(-jdot(v[c], hv[c]));
    gamma.push_back(-jdot(x[c], hv[c]));
    counts.inner_products += 2;
    if (i >= 2) {
      beta.push_back(-jdot(v[c], hv[c - 1]));
      mu.push_back(-jdot(x[c - 1], hv[c]));
      counts.inner_products += 2;
    } else {
      beta.push_back(Scalar(0));
      mu.push_back(Scalar(0));
    }
  };

  Index blocks = 0;
  for (Index j = 1; j <= ell; ++j) {
    const auto c = static_cast<std::size_t>(j - 1);
    const auto fail = [&](Scalar value) { d.breakdown = {true, j, value, BreakdownKind::kSerious}; };

    // u_j, v_j
    Vector<Scalar> uj;
    if (j == 1) {
      uj = b / b_norm;
    } else {
      close_block(c);
      Vector<Scalar> wu = hv[c - 1] - gamma[c - 1] * y[c - 1] - alpha[c - 1] * u[c - 1];
      if (j >= 3) {
        wu.noalias() -= mu[c - 1] * y[c - 2];
        wu.noalias() -= beta[c - 1] * u[c - 2];
      }
      project(wu);
      const Scalar wn = wu.norm();
      if (wn < tol) {
        fail(wn);
        break;
      }
      uj = wu / wn;
    }
    Vector<Scalar> huj = detail::apply_H(H, uj, counts);
    const Scalar th = jdot(uj, huj);
    counts.inner_products += 1;
    if (std::abs(th) < tol) {
      fail(th);
      break;
    }
    project(huj);
    Vector<Scalar> vj = huj / th;
    pairs.add(uj, vj);
    u.push_back(std::move(uj));
    v.push_back(std::move(vj));
    theta.push_back(th);

    // x_j
    hinv_u.push_back(detail::solve_H(H, u[c], counts));
    Vector<Scalar> wx;
    if (j == 1) {
      const Scalar f11 = jdot(u[0], hinv_u[0]);
      counts.inner_products += 1;
      wx = hinv_u[0] - f11 * v[0];
    } else {
      hinv_y.push_back(detail::solve_H(H, y[c - 1], counts));
      const Scalar e_same = jdot(y[c - 1], hinv_y[c - 1]);
      const Scalar g_same = jdot(y[c - 1], hinv_u[c - 1]);
      const Scalar g_next = jdot(y[c - 1], hinv_u[c]);
      counts.inner_products += 3;
      wx = hinv_y[c - 1] - e_same * x[c - 1] - g_same * v[c - 1] - g_next * v[c];
      if (j >= 3) {
        const Scalar e_prev = jdot(y[c - 1], hinv_y[c - 2]);
        counts.inner_products += 1;
        wx.noalias() -= e_prev * x[c - 2];
      }
    }
    project(wx);
    const Scalar wxn = wx.norm();
    if (wxn < tol) {
      fail(wxn);
      break;
    }
    Vector<Scalar> xj = wx / wxn;

    // y_j = H^{-1} x_j / ((H^{-1} x_j)^T J x_j)
    Vector<Scalar> hinv_x = detail::solve_H(H, xj, counts);
    project(hinv_x);
    const Scalar denom = jdot(hinv_x, xj);
    counts.inner_products += 1;
    if (std::abs(denom) < tol) {
      fail(denom);
      break;
    }
    Vector<Scalar> yj = hinv_x / denom;
    pairs.add(yj, xj);

    const Vector<Scalar> hx = detail::apply_H(H, xj, counts);
    const Vector<Scalar> hy = detail::apply_H(H, yj, counts);
    lambda.push_back(-jdot(xj, hx));
    delta.push_back(jdot(yj, hy));
    counts.inner_products += 2;
    x.push_back(std::move(xj));
    y.push_back(std::move(yj));
    blocks = j;
  }
  if (!d.breakdown.occurred && blocks > 0) close_block(static_cast<std::size_t>(blocks));

  const Index L = blocks;
  d.basis.resize(rows, 4 * L);
  d.projected = Matrix<Scalar>::Zero(4 * L, 4 * L);
  for (Index i = 1; i <= L; ++i) {
    const auto c = static_cast<std::size_t>(i - 1);
    const Index rev = L - i;      // position of y_i among y_L..y_1, of x_i among x_L..x_1
    const Index fwd = L + i - 1;  // position of u_i (or v_i) in its half
    d.basis.col(rev) = y[c];
    d.basis.col(fwd) = u[c];
    d.basis.col(2 * L + rev) = x[c];
    d.basis.col(2 * L + fwd) = v[c];

    d.projected(rev, 2 * L + rev) = lambda[c];
    d.projected(2 * L + rev, rev) = delta[c];
    d.projected(2 * L + fwd, fwd) = theta[c];
    d.projected(fwd, 2 * L + fwd) = alpha[c];
    d.projected(rev, 2 * L + fwd) = gamma[c];
    d.projected(fwd, 2 * L + rev) = gamma[c];
    if (i >= 2) {
      // mu_i couples x_{i-1} and v_i; beta_i couples v_i and v_{i-1}.
      d.projected(rev + 1, 2 * L + fwd) = mu[c];
      d.projected(fwd, 2 * L + rev + 1) = mu[c];
      d.projected(fwd, 2 * L + fwd - 1) = beta[c];
      d.projected(fwd - 1, 2 * L + fwd) = beta[c];
    }
  }
  d.left_inverse = LeftInverse::kSymplectic;
  d.start_coord = L > 0 ? Vector<Scalar>(symplectic_left_inverse(d.basis) * b) : Vector<Scalar>(0);
  return d;
}

/// Block J-orthogonal method: an Arnoldi basis U_k is split into its top and
/// bottom halves, [U^u, U^l] is orthonormalized to W and S = blkdiag(W, W).
/// Ht = S^T H S is formed from W^T E W, W^T B W and W^T C W.
template <typename Scalar>
KrylovDecomposition<Scalar> block_j_orthogonal(const HamiltonianOperator<Scalar>& H, const Vector<Scalar>& b,
                                               Index k, KrylovOptions<Scalar> opts = {},
                                               Scalar rank_tol = Scalar(1e-12)) {
  if (k < 1) throw std::invalid_argument("block_j_orthogonal: k must be at least 1");
  const KrylovDecomposition<Scalar> a = arnoldi(H, b, k, opts);
  const Index n = H.half_dim();
  const Index steps = a.basis.cols();
  Matrix<Scalar> halves(n, 2 * steps);
  halves.leftCols(steps) = a.basis.topRows(n);
  halves.rightCols(steps) = a.basis.bottomRows(n);
  const Matrix<Scalar> w = qr_orthonormalize(halves, rank_tol);
  const Index p = w.cols();
  if (p == 0) throw std::runtime_error("block_j_orthogonal: orthonormalization deflated every column");

  KrylovDecomposition<Scalar> d;
  d.method = MethodId::kBJ;
  d.basis = Matrix<Scalar>::Zero(2 * n, 2 * p);
  d.basis.topLeftCorner(n, p) = w;
  d.basis.bottomRightCorner(n, p) = w;

  const Matrix<Scalar> we = w.transpose() * (H.E() * w);
  Matrix<Scalar> wb = w.transpose() * (H.B() * w);
  Matrix<Scalar> wc = w.transpose() * (H.C() * w);
  wb = ((wb + wb.transpose()) * Scalar(0.5)).eval();
  wc = ((wc + wc.transpose()) * Scalar(0.5)).eval();
  d.projected.resize(2 * p, 2 * p);
  d.projected.topLeftCorner(p, p) = we;
  d.projected.topRightCorner(p, p) = wb;
  d.projected.bottomLeftCorner(p, p) = wc;
  d.projected.bottomRightCorner(p, p) = -we.transpose();

  d.left_inverse = LeftInverse::kTranspose;
  d.start_coord.resize(2 * p);
  d.start_coord.head(p) = w.transpose() * b.head(n);
  d.start_coord.tail(p) = w.transpose() * b.tail(n);
  d.breakdown = a.breakdown;
  d.counts = a.counts;
  return d;
}

/// One sweep of re-J-orthogonalization over S = [M, N]: every pair
/// (m_j, n_j) is projected against the pairs before it and n_j is rescaled
/// so that m_j^T J n_j = 1.
template <typename Derived>
Matrix<typename Derived::Scalar> re_j_orthogonalize(const Eigen::MatrixBase<Derived>& S) {
  using Scalar = typename Derived::Scalar;
  detail::require(S.rows() % 2 == 0 && S.cols() % 2 == 0, "re_j_orthogonalize: S must be 2n x 2r");
  const Index r = S.cols() / 2;
  Matrix<Scalar> out = S;
  detail::PairSet<Scalar> pairs;
  for (Index j = 0; j < r; ++j) {
    Vector<Scalar> m = out.col(j);
    Vector<Scalar> n = out.col(r + j);
    pairs.project(m);
    pairs.project(n);
    const Scalar scale = detail::jdot(m, n);
    if (scale != Scalar(0)) n /= scale;
    out.col(j) = m;
    out.col(r + j) = n;
    pairs.add(m, n);
  }
  return out;
}

/// ||H S - S Ht - next * remainder * e_c^T||_F.
template <typename Scalar>
Scalar recurrence_residual(const HamiltonianOperator<Scalar>& H, const KrylovDecomposition<Scalar>& d) {
  if (d.dim() == 0) return Scalar(0);
  Matrix<Scalar> r = H.apply(d.basis);
  r.noalias() -= d.basis * d.projected;
  if (d.remainder_scalar && d.remainder_column >= 0) r.col(d.remainder_column) -= *d.remainder_scalar * d.next_vector;
  return r.norm();
}

/// Number of blocks HEKS uses for a target dimension 2r.
inline Index heks_blocks(Index r) { return r / 2; }

/// Builds a decomposition of target dimension 2r: A and BJ run 2r Arnoldi
/// steps, HL, SA and IA run r steps, HEKS runs floor(r/2) blocks.
template <typename Scalar>
KrylovDecomposition<Scalar> build_decomposition(MethodId method, const HamiltonianOperator<Scalar>& H,
                                                const Vector<Scalar>& b, Index r,
                                                KrylovOptions<Scalar> opts = {}) {
  if (r < 1) throw std::invalid_argument("build_decomposition: r must be at least 1");
  switch (method) {
    case MethodId::kA: return arnoldi(H, b, 2 * r, opts);
    case MethodId::kHL: return hamiltonian_lanczos(H, b, r, opts);
    case MethodId::kSA: return symplectic_arnoldi(H, b, r, opts);
    case MethodId::kIA: return isotropic_arnoldi(H, b, r, opts);
    case MethodId::kHEKS:
      if (heks_blocks(r) < 1) throw std::invalid_argument("build_decomposition: HEKS needs r >= 2");
      return heks(H, b, heks_blocks(r), opts);
    case MethodId::kBJ: return block_j_orthogonal(H, b, 2 * r, opts);
  }
  throw std::invalid_argument("build_decomposition: unknown method");
}

}  // namespace hamkrylov
