#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "opau/poly_basis.hpp"

namespace opau {

inline constexpr double pole_threshold = 1e-12;

namespace detail {
template <typename Scalar>
Scalar sgn(Scalar v) {
  return v > Scalar(0) ? Scalar(1) : (v < Scalar(0) ? Scalar(-1) : Scalar(0));
}
}  // namespace detail

/// Trainable state of one orthogonal-basis rational activation
///   G(x) = P(x) / Q(x),  P = sum_{i=0}^{k} c_i f_i(x),
///   Q = 1 + sum_{j=1}^{l} |d_j| |f_j(x)|   (safe)
///   Q = 1 + sum_{j=1}^{l}  d_j  f_j(x)     (unsafe)
template <typename Scalar>
struct OpauParamsT {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  BasisKind basis = BasisKind::HP1;
  int k = 5;
  int l = 4;
  Vector c;  // c_0..c_k, length k+1
  Vector d;  // d_1..d_l, length l
  bool safe = true;

  void validate() const {
    if (k < 0 || l < 0) throw std::invalid_argument("opau params: degrees must be >= 0");
    if (c.size() != k + 1) throw std::invalid_argument("opau params: c must have length k+1");
    if (d.size() != l) throw std::invalid_argument("opau params: d must have length l");
    if (!c.allFinite() || !d.allFinite())
      throw std::invalid_argument("opau params: non-finite coefficient");
  }
};

using OpauParams = OpauParamsT<double>;

/// Gradients of one activation evaluation, scaled by the upstream factor.
template <typename Scalar>
struct OpauGradT {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Scalar d_input;  // dG/dx
  Vector d_c;      // dG/dc_i, length k+1
  Vector d_d;      // dG/dd_j, length l
};

using OpauGrad = OpauGradT<double>;

/// One-pass evaluation sharing the basis recurrence between the value and,
/// when `grad` is non-null, the analytic gradients:
///   dG/dx   = P'/Q - P Q'/Q^2
///   dG/dc_i = f_i/Q
///   dG/dd_j = -sgn(d_j) |f_j| P/Q^2   (safe)   /   -f_j P/Q^2  (unsafe)
/// with sgn(0) = 0 both for d_j and for the |f_j| kinks inside Q'.
template <typename Scalar>
Scalar opau_eval(const OpauParamsT<Scalar>& params, Scalar x,
                 OpauGradT<Scalar>* grad = nullptr) {
  params.validate();
  if (!std::isfinite(static_cast<double>(x)))
    throw std::invalid_argument("opau_eval: non-finite input");

  const int n = std::max(params.k, params.l);
  const BasisEval<Scalar> f = eval_basis_with_deriv(params.basis, n, x);

  Scalar P(0), dP(0);
  for (int i = 0; i <= params.k; ++i) {
    P += params.c[i] * f.values[i];
    dP += params.c[i] * f.derivs[i];
  }

  Scalar Q(1), dQ(0);
  if (params.safe) {
    for (int j = 1; j <= params.l; ++j) {
      const Scalar absd = std::abs(params.d[j - 1]);
      Q += absd * std::abs(f.values[j]);
      dQ += absd * detail::sgn(f.values[j]) * f.derivs[j];
    }
  } else {
    for (int j = 1; j <= params.l; ++j) {
      Q += params.d[j - 1] * f.values[j];
      dQ += params.d[j - 1] * f.derivs[j];
    }
    if (std::abs(static_cast<double>(Q)) < pole_threshold)
      throw std::domain_error("opau_eval: denominator pole at x=" +
                              std::to_string(static_cast<double>(x)));
  }

  const Scalar value = P / Q;
  if (grad) {
    const Scalar inv_q = Scalar(1) / Q;
    const Scalar p_over_q2 = P * inv_q * inv_q;
    grad->d_input = dP * inv_q - p_over_q2 * dQ;
    grad->d_c.resize(params.k + 1);
    for (int i = 0; i <= params.k; ++i) grad->d_c[i] = f.values[i] * inv_q;
    grad->d_d.resize(params.l);
    for (int j = 1; j <= params.l; ++j) {
      if (params.safe)
        grad->d_d[j - 1] =
            -detail::sgn(params.d[j - 1]) * std::abs(f.values[j]) * p_over_q2;
      else
        grad->d_d[j - 1] = -f.values[j] * p_over_q2;
    }
  }
  return value;
}

template <typename Scalar>
Scalar opau_forward(const OpauParamsT<Scalar>& params, Scalar x) {
  return opau_eval(params, x);
}

template <typename Scalar>
OpauGradT<Scalar> opau_backward(const OpauParamsT<Scalar>& params, Scalar x,
                                Scalar upstream) {
  OpauGradT<Scalar> grad;
  opau_eval(params, x, &grad);
  grad.d_input *= upstream;
  grad.d_c *= upstream;
  grad.d_d *= upstream;
  return grad;
}

/// Element-wise opau_forward with one shared parameter set.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> activation_map(
    const OpauParamsT<Scalar>& params,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& xs) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(xs.size());
  for (Eigen::Index i = 0; i < xs.size(); ++i) out[i] = opau_eval(params, xs[i]);
  return out;
}

/// Monomial-basis rational activation variants:
///   F1: (sum a_i x^i) / (1 + sum b_j x^j)
///   F2: denominator 1 + |sum b_j x^j|
///   F3: denominator 1 + sum |b_j| |x|^j
enum class PauVariant { F1, F2, F3 };

template <typename Scalar>
struct PauParamsT {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vector a;  // a_0..a_k
  Vector b;  // b_1..b_l
  PauVariant variant = PauVariant::F2;

  void validate() const {
    if (a.size() < 1) throw std::invalid_argument("pau params: a must have length >= 1");
    if (!a.allFinite() || !b.allFinite())
      throw std::invalid_argument("pau params: non-finite coefficient");
  }
};

using PauParams = PauParamsT<double>;

template <typename Scalar>
struct PauGradT {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Scalar d_input;
  Vector d_a;
  Vector d_b;
};

using PauGrad = PauGradT<double>;

template <typename Scalar>
Scalar pau_eval(const PauParamsT<Scalar>& params, Scalar x,
                PauGradT<Scalar>* grad = nullptr) {
  params.validate();
  if (!std::isfinite(static_cast<double>(x)))
    throw std::invalid_argument("pau_eval: non-finite input");

  const int k = static_cast<int>(params.a.size()) - 1;
  const int l = static_cast<int>(params.b.size());
  const int n = std::max(k, l);

  // powers[i] = x^i, dpowers[i] = i x^{i-1}
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> powers(n + 1), dpowers(n + 1);
  powers[0] = Scalar(1);
  dpowers[0] = Scalar(0);
  for (int i = 1; i <= n; ++i) {
    powers[i] = powers[i - 1] * x;
    dpowers[i] = Scalar(i) * powers[i - 1];
  }

  Scalar P(0), dP(0);
  for (int i = 0; i <= k; ++i) {
    P += params.a[i] * powers[i];
    dP += params.a[i] * dpowers[i];
  }

  // B(x) = sum b_j x^j enters F1/F2; F3 takes absolute values termwise.
  Scalar B(0), dB(0), Q(1), dQ(0);
  for (int j = 1; j <= l; ++j) {
    B += params.b[j - 1] * powers[j];
    dB += params.b[j - 1] * dpowers[j];
  }
  switch (params.variant) {
    case PauVariant::F1:
      Q = Scalar(1) + B;
      dQ = dB;
      if (std::abs(static_cast<double>(Q)) < pole_threshold)
        throw std::domain_error("pau_eval: denominator pole at x=" +
                                std::to_string(static_cast<double>(x)));
      break;
    case PauVariant::F2:
      Q = Scalar(1) + std::abs(B);
      dQ = detail::sgn(B) * dB;
      break;
    case PauVariant::F3: {
      const Scalar ax = std::abs(x);
      Scalar apow(1);
      for (int j = 1; j <= l; ++j) {
        const Scalar dapow = Scalar(j) * apow * detail::sgn(x);
        apow *= ax;
        Q += std::abs(params.b[j - 1]) * apow;
        dQ += std::abs(params.b[j - 1]) * dapow;
      }
      break;
    }
  }

  const Scalar value = P / Q;
  if (grad) {
    const Scalar inv_q = Scalar(1) / Q;
    const Scalar p_over_q2 = P * inv_q * inv_q;
    grad->d_input = dP * inv_q - p_over_q2 * dQ;
    grad->d_a.resize(k + 1);
    for (int i = 0; i <= k; ++i) grad->d_a[i] = powers[i] * inv_q;
    grad->d_b.resize(l);
    for (int j = 1; j <= l; ++j) {
      switch (params.variant) {
        case PauVariant::F1:
          grad->d_b[j - 1] = -powers[j] * p_over_q2;
          break;
        case PauVariant::F2:
          grad->d_b[j - 1] = -detail::sgn(B) * powers[j] * p_over_q2;
          break;
        case PauVariant::F3: {
          Scalar apowj(1);
          for (int m = 0; m < j; ++m) apowj *= std::abs(x);
          grad->d_b[j - 1] = -detail::sgn(params.b[j - 1]) * apowj * p_over_q2;
          break;
        }
      }
    }
  }
  return value;
}

template <typename Scalar>
Scalar pau_forward(const PauParamsT<Scalar>& params, Scalar x) {
  return pau_eval(params, x);
}

template <typename Scalar>
PauGradT<Scalar> pau_backward(const PauParamsT<Scalar>& params, Scalar x,
                              Scalar upstream) {
  PauGradT<Scalar> grad;
  pau_eval(params, x, &grad);
  grad.d_input *= upstream;
  grad.d_a *= upstream;
  grad.d_b *= upstream;
  return grad;
}

/// Fixed comparison activations.
enum class Baseline { ReLU, LeakyReLU, ELU, Softplus, Swish };

inline const char* to_string(Baseline kind) {
  switch (kind) {
    case Baseline::ReLU: return "relu";
    case Baseline::LeakyReLU: return "leaky_relu";
    case Baseline::ELU: return "elu";
    case Baseline::Softplus: return "softplus";
    case Baseline::Swish: return "swish";
  }
  throw std::logic_error("unreachable baseline kind");
}

inline Baseline baseline_from_string(std::string_view name) {
  for (Baseline kind : {Baseline::ReLU, Baseline::LeakyReLU, Baseline::ELU,
                        Baseline::Softplus, Baseline::Swish})
    if (name == to_string(kind)) return kind;
  throw std::invalid_argument("unknown baseline activation '" + std::string(name) +
                              "' (valid: relu, leaky_relu, elu, softplus, swish)");
}

inline const char* to_string(PauVariant variant) {
  switch (variant) {
    case PauVariant::F1: return "F1";
    case PauVariant::F2: return "F2";
    case PauVariant::F3: return "F3";
  }
  throw std::logic_error("unreachable pau variant");
}

inline PauVariant pau_variant_from_string(std::string_view name) {
  for (PauVariant v : {PauVariant::F1, PauVariant::F2, PauVariant::F3})
    if (name == to_string(v)) return v;
  throw std::invalid_argument("unknown pau variant '" + std::string(name) +
                              "' (valid: F1, F2, F3)");
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double baseline_forward(Baseline kind, double x, double alpha = 0.01) {
  switch (kind) {
    case Baseline::ReLU: return x > 0.0 ? x : 0.0;
    case Baseline::LeakyReLU: return x >= 0.0 ? x : alpha * x;
    case Baseline::ELU: return x >= 0.0 ? x : alpha * std::expm1(x);
    case Baseline::Softplus:  // overflow-safe ln(1+e^x)
      return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
    case Baseline::Swish: return x * sigmoid(x);
  }
  throw std::logic_error("unreachable baseline kind");
}

inline double baseline_deriv(Baseline kind, double x, double alpha = 0.01) {
  switch (kind) {
    case Baseline::ReLU: return x > 0.0 ? 1.0 : 0.0;
    case Baseline::LeakyReLU: return x >= 0.0 ? 1.0 : alpha;
    case Baseline::ELU: return x >= 0.0 ? 1.0 : alpha * std::exp(x);
    case Baseline::Softplus: return sigmoid(x);
    case Baseline::Swish: {
      const double s = sigmoid(x);
      return s * (1.0 + x * (1.0 - s));
    }
  }
  throw std::logic_error("unreachable baseline kind");
}

}  // namespace opau
