#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace opau {

/// The six orthogonal polynomial families usable as an OPAU basis.
enum class BasisKind { CP1, CP2, LAU, LEG, HP1, HP2 };

inline constexpr std::array<BasisKind, 6> all_bases = {
    BasisKind::CP1, BasisKind::CP2, BasisKind::LAU,
    BasisKind::LEG, BasisKind::HP1, BasisKind::HP2};

inline const char* to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::CP1: return "CP1";
    case BasisKind::CP2: return "CP2";
    case BasisKind::LAU: return "LAU";
    case BasisKind::LEG: return "LEG";
    case BasisKind::HP1: return "HP1";
    case BasisKind::HP2: return "HP2";
  }
  throw std::logic_error("unreachable basis kind");
}

/// Parses "CP1", "cp-2", "hp1", ... Throws std::invalid_argument listing the
/// valid names on failure.
inline BasisKind basis_from_string(std::string_view name) {
  std::string s;
  for (char ch : name)
    if (ch != '-' && ch != '_') s.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
  for (BasisKind kind : all_bases)
    if (s == to_string(kind)) return kind;
  throw std::invalid_argument("unknown basis '" + std::string(name) +
                              "' (valid: CP1, CP2, LAU, LEG, HP1, HP2)");
}

/// Basis polynomial values and first derivatives at one point,
/// degrees 0..n. values[0] == 1 and derivs[0] == 0 always.
template <typename Scalar>
struct BasisEval {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> derivs;
};

namespace detail {

// Three-term recurrence r_{m+1} = ((a + b*x) r_m + c r_{m-1}) / e, m >= 1.
template <typename Scalar>
struct RecurrenceStep {
  Scalar a, b, c, e;
};

template <typename Scalar>
RecurrenceStep<Scalar> recurrence_step(BasisKind kind, int m) {
  const Scalar sm = static_cast<Scalar>(m);
  switch (kind) {
    case BasisKind::CP1:
    case BasisKind::CP2:
      return {Scalar(0), Scalar(2), Scalar(-1), Scalar(1)};
    case BasisKind::LAU:
      return {2 * sm + 1, Scalar(-1), -sm, sm + 1};
    case BasisKind::LEG:
      return {Scalar(0), 2 * sm + 1, -sm, sm + 1};
    case BasisKind::HP1:
      return {Scalar(0), Scalar(1), -sm, Scalar(1)};
    case BasisKind::HP2:
      return {Scalar(0), Scalar(2), -2 * sm, Scalar(1)};
  }
  throw std::logic_error("unreachable basis kind");
}

// Degree-1 polynomial alpha + beta*x per family.
template <typename Scalar>
void degree_one(BasisKind kind, Scalar& alpha, Scalar& beta) {
  switch (kind) {
    case BasisKind::CP1:
    case BasisKind::LEG:
    case BasisKind::HP1:
      alpha = Scalar(0); beta = Scalar(1); return;
    case BasisKind::CP2:
    case BasisKind::HP2:
      alpha = Scalar(0); beta = Scalar(2); return;
    case BasisKind::LAU:
      alpha = Scalar(1); beta = Scalar(-1); return;
  }
  throw std::logic_error("unreachable basis kind");
}

}  // namespace detail

/// Evaluates basis polynomials of degree 0..n at x together with their first
/// derivatives, propagating (value, derivative) pairs through the recurrence.
template <typename Scalar>
BasisEval<Scalar> eval_basis_with_deriv(BasisKind kind, int n, Scalar x) {
  if (n < 0) throw std::invalid_argument("eval_basis: max degree must be >= 0");
  if (!std::isfinite(static_cast<double>(x)))
    throw std::invalid_argument("eval_basis: non-finite evaluation point");

  BasisEval<Scalar> out;
  out.values.resize(n + 1);
  out.derivs.resize(n + 1);
  out.values[0] = Scalar(1);
  out.derivs[0] = Scalar(0);
  if (n == 0) return out;

  Scalar alpha, beta;
  detail::degree_one(kind, alpha, beta);
  out.values[1] = alpha + beta * x;
  out.derivs[1] = beta;

  for (int m = 1; m < n; ++m) {
    const auto s = detail::recurrence_step<Scalar>(kind, m);
    const Scalar lin = s.a + s.b * x;
    out.values[m + 1] = (lin * out.values[m] + s.c * out.values[m - 1]) / s.e;
    out.derivs[m + 1] =
        (s.b * out.values[m] + lin * out.derivs[m] + s.c * out.derivs[m - 1]) / s.e;
  }
  return out;
}

/// Values-only evaluation (degrees 0..n at x).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> eval_basis(BasisKind kind, int n, Scalar x) {
  return eval_basis_with_deriv(kind, n, x).values;
}

/// Real interval carrying the basis's classical orthogonality domain.
/// Half-infinite for LAU, infinite for HP1/HP2.
struct BasisDomain {
  double lo;
  double hi;
};

inline BasisDomain basis_domain(BasisKind kind) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (kind) {
    case BasisKind::CP1:
    case BasisKind::CP2:
    case BasisKind::LEG:
      return {-1.0, 1.0};
    case BasisKind::LAU:
      return {0.0, inf};
    case BasisKind::HP1:
    case BasisKind::HP2:
      return {-inf, inf};
  }
  throw std::logic_error("unreachable basis kind");
}

/// Classical weight function w(x) under which the family is orthogonal.
/// Zero outside the domain.
inline double basis_weight(BasisKind kind, double x) {
  switch (kind) {
    case BasisKind::CP1:
      return (x > -1.0 && x < 1.0) ? 1.0 / std::sqrt(1.0 - x * x) : 0.0;
    case BasisKind::CP2:
      return (x >= -1.0 && x <= 1.0) ? std::sqrt(1.0 - x * x) : 0.0;
    case BasisKind::LEG:
      return (x >= -1.0 && x <= 1.0) ? 1.0 : 0.0;
    case BasisKind::LAU:
      return x >= 0.0 ? std::exp(-x) : 0.0;
    case BasisKind::HP1:
      return std::exp(-0.5 * x * x);
    case BasisKind::HP2:
      return std::exp(-x * x);
  }
  throw std::logic_error("unreachable basis kind");
}

}  // namespace opau
