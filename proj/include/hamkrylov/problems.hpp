#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "hamkrylov/hamiltonian.hpp"

namespace hamkrylov {

enum class ProblemId { kLw, kSg, kKg1, kKg2, kNs1, kNs2 };

inline constexpr std::array<ProblemId, 6> kAllProblems = {ProblemId::kLw,  ProblemId::kSg,  ProblemId::kKg1,
                                                          ProblemId::kKg2, ProblemId::kNs1, ProblemId::kNs2};

inline std::string_view to_string(ProblemId id) {
  switch (id) {
    case ProblemId::kLw: return "lw";
    case ProblemId::kSg: return "sg";
    case ProblemId::kKg1: return "kg1";
    case ProblemId::kKg2: return "kg2";
    case ProblemId::kNs1: return "ns1";
    case ProblemId::kNs2: return "ns2";
  }
  return "?";
}

inline std::optional<ProblemId> parse_problem(std::string_view name) {
  for (ProblemId id : kAllProblems)
    if (to_string(id) == name) return id;
  return std::nullopt;
}

/// One of the six benchmark Jacobians, evaluated at its initial condition.
template <typename Scalar = double>
struct ProblemInstance {
  ProblemId id;
  HamiltonianOperator<Scalar> H;
  Index n;
  Scalar delta_x;
  Scalar h_default = Scalar(0.01);
  std::string description;
  Vector<Scalar> grid;  ///< x_j, j = 1..n
  /// Real and imaginary parts of the initial state (Schroedinger problems only).
  Vector<Scalar> q0;
  Vector<Scalar> p0;
};

/// Second-difference matrix with zero Dirichlet boundary conditions:
/// tridiag(1, -2, 1) / delta_x^2.
template <typename Scalar = double>
SparseMatrix<Scalar> laplacian_dirichlet(Index n, Scalar delta_x) {
  if (n < 2) throw std::invalid_argument("laplacian_dirichlet: n must be at least 2");
  if (!(delta_x > Scalar(0))) throw std::invalid_argument("laplacian_dirichlet: delta_x must be positive");
  const Scalar w = Scalar(1) / (delta_x * delta_x);
  std::vector<Eigen::Triplet<Scalar>> t;
  t.reserve(static_cast<std::size_t>(3 * n));
  for (Index i = 0; i < n; ++i) {
    if (i > 0) t.emplace_back(i, i - 1, w);
    t.emplace_back(i, i, Scalar(-2) * w);
    if (i + 1 < n) t.emplace_back(i, i + 1, w);
  }
  SparseMatrix<Scalar> m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

/// Periodic second-difference matrix: the Dirichlet stencil plus the corner
/// couplings (1, n) and (n, 1).
template <typename Scalar = double>
SparseMatrix<Scalar> laplacian_periodic(Index n, Scalar delta_x) {
  if (n < 3) throw std::invalid_argument("laplacian_periodic: n must be at least 3");
  if (!(delta_x > Scalar(0))) throw std::invalid_argument("laplacian_periodic: delta_x must be positive");
  const Scalar w = Scalar(1) / (delta_x * delta_x);
  std::vector<Eigen::Triplet<Scalar>> t;
  t.reserve(static_cast<std::size_t>(3 * n));
  for (Index i = 0; i < n; ++i) {
    t.emplace_back(i, (i + n - 1) % n, w);
    t.emplace_back(i, i, Scalar(-2) * w);
    t.emplace_back(i, (i + 1) % n, w);
  }
  SparseMatrix<Scalar> m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

namespace detail {

template <typename Scalar>
SparseMatrix<Scalar> sparse_diagonal(const Vector<Scalar>& d) {
  const Index n = d.size();
  std::vector<Eigen::Triplet<Scalar>> t;
  t.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    if (d(i) != Scalar(0)) t.emplace_back(i, i, d(i));
  SparseMatrix<Scalar> m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

template <typename Scalar>
SparseMatrix<Scalar> sparse_identity(Index n) {
  return sparse_diagonal<Scalar>(Vector<Scalar>::Ones(n));
}

template <typename Scalar>
SparseMatrix<Scalar> sparse_zero(Index n) {
  return SparseMatrix<Scalar>(n, n);
}

// Wave-type Jacobian [[0, I], [C, 0]].
template <typename Scalar>
HamiltonianOperator<Scalar> second_order_system(const SparseMatrix<Scalar>& c) {
  const Index n = c.rows();
  return HamiltonianOperator<Scalar>(sparse_zero<Scalar>(n), sparse_identity<Scalar>(n), c);
}

}  // namespace detail

/// Linear wave equation on [0, 2], Dirichlet: H = [[0, I], [Delta_n, 0]],
/// n = 400, delta_x = 2/(n+1).
template <typename Scalar = double>
ProblemInstance<Scalar> build_lw() {
  const Index n = 400;
  const Scalar dx = Scalar(2) / Scalar(n + 1);
  Vector<Scalar> grid(n);
  for (Index j = 0; j < n; ++j) grid(j) = Scalar(j + 1) * dx;
  return {ProblemId::kLw,       detail::second_order_system<Scalar>(laplacian_dirichlet<Scalar>(n, dx)),
          n,                    dx,
          Scalar(0.01),         "linear wave equation, Dirichlet boundary",
          grid,                 {},
          {}};
}

/// Sine-Gordon linearization on [-5, 5], periodic:
/// H = [[0, I], [Delta^pbc + I, 0]], n = 512, delta_x = 10/n.
template <typename Scalar = double>
ProblemInstance<Scalar> build_sg() {
  const Index n = 512;
  const Scalar dx = Scalar(10) / Scalar(n);
  Vector<Scalar> grid(n);
  for (Index j = 0; j < n; ++j) grid(j) = Scalar(-5) + Scalar(j + 1) * dx;
  SparseMatrix<Scalar> c = laplacian_periodic<Scalar>(n, dx) + detail::sparse_identity<Scalar>(n);
  return {ProblemId::kSg, detail::second_order_system<Scalar>(c), n, dx, Scalar(0.01),
          "sine-Gordon equation, periodic boundary", grid, {}, {}};
}

/// Cubic Klein-Gordon, first parameter set: H = [[0, I], [Delta^pbc - B_1, 0]]
/// with B_1 = I/4 + 3 diag((1 + cos(2 j pi dx))^2), n = 400, on a unit period
/// (delta_x = 1/n).
template <typename Scalar = double>
ProblemInstance<Scalar> build_kg1() {
  const Index n = 400;
  const Scalar length = Scalar(1);
  const Scalar dx = length / Scalar(n);
  Vector<Scalar> grid(n);
  Vector<Scalar> shift(n);
  for (Index j = 0; j < n; ++j) {
    const Scalar x = Scalar(j + 1) * dx;
    grid(j) = x;
    const Scalar bj = Scalar(1) + std::cos(Scalar(2) * std::numbers::pi_v<Scalar> * x);
    shift(j) = Scalar(0.25) + Scalar(3) * bj * bj;
  }
  SparseMatrix<Scalar> c = laplacian_periodic<Scalar>(n, dx) - detail::sparse_diagonal<Scalar>(shift);
  return {ProblemId::kKg1, detail::second_order_system<Scalar>(c), n, dx, Scalar(0.01),
          "nonlinear Klein-Gordon equation, first parameter set", grid, {}, {}};
}

/// Cubic Klein-Gordon, second parameter set: H = [[0, I], [Delta^pbc - B_2, 0]]
/// with B_2 = I + 3 diag((20 (1 + cos(2 j pi dx / 1.28)))^2), n = 512. The
/// period length is taken as L = 1.28, so delta_x = 1.28/n and the cosine
/// argument is 2 j pi / n.
template <typename Scalar = double>
ProblemInstance<Scalar> build_kg2(Scalar length = Scalar(1.28)) {
  const Index n = 512;
  const Scalar dx = length / Scalar(n);
  Vector<Scalar> grid(n);
  Vector<Scalar> shift(n);
  for (Index j = 0; j < n; ++j) {
    const Scalar x = Scalar(j + 1) * dx;
    grid(j) = x;
    const Scalar bj = Scalar(20) * (Scalar(1) + std::cos(Scalar(2) * std::numbers::pi_v<Scalar> * x / Scalar(1.28)));
    shift(j) = Scalar(1) + Scalar(3) * bj * bj;
  }
  SparseMatrix<Scalar> c = laplacian_periodic<Scalar>(n, dx) - detail::sparse_diagonal<Scalar>(shift);
  return {ProblemId::kKg2, detail::second_order_system<Scalar>(c), n, dx, Scalar(0.01),
          "nonlinear Klein-Gordon equation, second parameter set", grid, {}, {}};
}

/// Initial state of the first Schroedinger problem:
/// sqrt(sin^2 x + 1) e^{i theta(x)} with tan(theta) = sqrt(2) tan(x), taken on
/// the continuous branch theta = atan2(sqrt(2) sin x, cos x).
template <typename Scalar = double>
std::pair<Scalar, Scalar> ns1_initial_state(Scalar x) {
  const Scalar s = std::sin(x);
  const Scalar amplitude = std::sqrt(s * s + Scalar(1));
  const Scalar theta = std::atan2(std::sqrt(Scalar(2)) * s, std::cos(x));
  return {amplitude * std::cos(theta), amplitude * std::sin(theta)};
}

/// Initial state of the second Schroedinger problem:
/// 2 e^{-i(2x + 1 + pi/2)} sech(2x).
template <typename Scalar = double>
std::pair<Scalar, Scalar> ns2_initial_state(Scalar x) {
  const Scalar phase = Scalar(2) * x + Scalar(1) + std::numbers::pi_v<Scalar> / Scalar(2);
  const Scalar amplitude = Scalar(2) / std::cosh(Scalar(2) * x);
  return {amplitude * std::cos(phase), -amplitude * std::sin(phase)};
}

/// Bose-Einstein condensate in a standing light wave, x in [-4 pi, 4 pi):
/// H = [[D2, -Delta/2 - B + D3], [Delta/2 + B - D1, -D2]], n = 500.
template <typename Scalar = double>
ProblemInstance<Scalar> build_ns1() {
  const Index n = 500;
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar dx = Scalar(8) * pi / Scalar(n);
  Vector<Scalar> grid(n), q0(n), p0(n), potential(n), d1(n), d2(n), d3(n);
  for (Index j = 0; j < n; ++j) {
    const Scalar x = Scalar(-4) * pi + Scalar(j) * dx;
    grid(j) = x;
    const auto [q, p] = ns1_initial_state(x);
    q0(j) = q;
    p0(j) = p;
    const Scalar s = std::sin(x);
    potential(j) = s * s;
    d1(j) = Scalar(3) * q * q + p * p;
    d2(j) = Scalar(2) * q * p;
    d3(j) = Scalar(3) * p * p + q * q;
  }
  const SparseMatrix<Scalar> half_lap = laplacian_periodic<Scalar>(n, dx) * Scalar(0.5);
  const SparseMatrix<Scalar> pot = detail::sparse_diagonal<Scalar>(potential);
  SparseMatrix<Scalar> b = -half_lap - pot + detail::sparse_diagonal<Scalar>(d3);
  SparseMatrix<Scalar> c = half_lap + pot - detail::sparse_diagonal<Scalar>(d1);
  return {ProblemId::kNs1,
          HamiltonianOperator<Scalar>(detail::sparse_diagonal<Scalar>(d2), b, c),
          n,
          dx,
          Scalar(0.01),
          "nonlinear Schroedinger equation, first parameter set",
          grid,
          q0,
          p0};
}

/// Soliton-type Schroedinger problem, x in [-10, 10):
/// H = [[D2, -Delta + D3], [Delta - D1, -D2]], n = 512.
template <typename Scalar = double>
ProblemInstance<Scalar> build_ns2() {
  const Index n = 512;
  const Scalar dx = Scalar(20) / Scalar(n);
  Vector<Scalar> grid(n), q0(n), p0(n), d1(n), d2(n), d3(n);
  for (Index j = 0; j < n; ++j) {
    const Scalar x = Scalar(-10) + Scalar(j) * dx;
    grid(j) = x;
    const auto [q, p] = ns2_initial_state(x);
    q0(j) = q;
    p0(j) = p;
    d1(j) = Scalar(6) * q * q + Scalar(2) * p * p;
    d2(j) = Scalar(8) * q * p;
    d3(j) = Scalar(6) * p * p + Scalar(2) * q * q;
  }
  const SparseMatrix<Scalar> lap = laplacian_periodic<Scalar>(n, dx);
  SparseMatrix<Scalar> b = -lap + detail::sparse_diagonal<Scalar>(d3);
  SparseMatrix<Scalar> c = lap - detail::sparse_diagonal<Scalar>(d1);
  return {ProblemId::kNs2,
          HamiltonianOperator<Scalar>(detail::sparse_diagonal<Scalar>(d2), b, c),
          n,
          dx,
          Scalar(0.01),
          "nonlinear Schroedinger equation, second parameter set",
          grid,
          q0,
          p0};
}

template <typename Scalar = double>
ProblemInstance<Scalar> build_problem(ProblemId id) {
  switch (id) {
    case ProblemId::kLw: return build_lw<Scalar>();
    case ProblemId::kSg: return build_sg<Scalar>();
    case ProblemId::kKg1: return build_kg1<Scalar>();
    case ProblemId::kKg2: return build_kg2<Scalar>();
    case ProblemId::kNs1: return build_ns1<Scalar>();
    case ProblemId::kNs2: return build_ns2<Scalar>();
  }
  throw std::invalid_argument("build_problem: unknown problem id");
}

/// Standard normal vector from a 64-bit Mersenne Twister seeded with `seed`,
/// using the Box-Muller transform on 53-bit uniforms in (0, 1]. Identical
/// (dim, seed) give bit-identical vectors on every platform.
template <typename Scalar = double>
Vector<Scalar> random_b(Index dim, std::uint64_t seed) {
  if (dim <= 0) throw std::invalid_argument("random_b: dimension must be positive");
  std::mt19937_64 engine(seed);
  const auto uniform = [&engine] {
    // (k + 1) / 2^53 for k in [0, 2^53), never zero.
    return (static_cast<double>(engine() >> 11) + 1.0) * 0x1.0p-53;
  };
  const double two_pi = 2.0 * std::numbers::pi;
  Vector<Scalar> b(dim);
  for (Index i = 0; i < dim; i += 2) {
    const double radius = std::sqrt(-2.0 * std::log(uniform()));
    const double angle = two_pi * uniform();
    b(i) = static_cast<Scalar>(radius * std::cos(angle));
    if (i + 1 < dim) b(i + 1) = static_cast<Scalar>(radius * std::sin(angle));
  }
  return b;
}

}  // namespace hamkrylov
