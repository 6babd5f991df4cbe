#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <utility>
#include <vector>

#include "opau/activations.hpp"

namespace opau {

/// Zero-centering constraint on the numerator, sum_i c_i f_i(0) = 0.
/// Case1 zeroes every coefficient appearing in the constraint; Case2 pins one
/// of them to zero and eliminates another; Case3 eliminates one directly.
/// `variant` indexes into the constraint's support set (see
/// constraint_support) to pick which coefficient is pinned / eliminated.
enum class ZeroCenterCase { None, Case1, Case2, Case3 };

struct ZeroCenterConstraint {
  ZeroCenterCase kind = ZeroCenterCase::None;
  int variant = 0;
};

/// Target function of a coefficient fit: a baseline activation or a constant.
struct FitTarget {
  enum class Kind { Activation, Constant };
  Kind kind = Kind::Activation;
  Baseline activation = Baseline::LeakyReLU;
  double alpha = 0.01;
  double value = 0.0;

  static FitTarget leaky_relu(double alpha = 0.01) {
    return {Kind::Activation, Baseline::LeakyReLU, alpha, 0.0};
  }
  static FitTarget baseline(Baseline act, double alpha) {
    return {Kind::Activation, act, alpha, 0.0};
  }
  static FitTarget constant(double v) {
    return {Kind::Constant, Baseline::ReLU, 0.0, v};
  }

  double operator()(double x) const {
    return kind == Kind::Constant ? value : baseline_forward(activation, x, alpha);
  }
};

struct FitGrid {
  double lo = -3.0;
  double hi = 3.0;
  int samples = 1000;
};

struct FitOptimizer {
  int max_iterations = 300;
  double tolerance = 1e-14;
  std::uint64_t seed = 0;
  int restarts = 6;
};

struct FitTask {
  BasisKind basis = BasisKind::HP1;
  int k = 5;
  int l = 4;
  FitTarget target;
  FitGrid grid;
  ZeroCenterConstraint constraint;
  FitOptimizer optimizer;
};

struct FitResult {
  OpauParams params;
  double rmse = 0.0;
  double max_abs_err = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Accepted-step objective values of the winning start, non-increasing.
  std::vector<double> loss_history;
};

/// Least-squares fit of the safe OPAU form to the target over the grid.
/// Deterministic for a fixed task (seed included). Non-convergence is
/// reported via converged=false, not an exception.
FitResult fit_opau(const FitTask& task);

/// Numerator constant term sum_i c_i f_i(0); zero iff the activation is
/// zero-centered (G(0) = 0).
double zero_center_residual(const OpauParams& params);

/// Indices i <= k with f_i(0) != 0, i.e. the coefficients that take part in
/// the zero-centering constraint for this basis.
std::vector<int> constraint_support(BasisKind kind, int k);

/// Uniformly spaced (x, target(x)) samples including both endpoints.
std::vector<std::pair<double, double>> sample_target(const FitTarget& target,
                                                     const FitGrid& grid);

/// Least-squares initialization of a monomial-basis rational activation
/// against a baseline target (used for trainable PAU layers).
PauParams fit_pau(PauVariant variant, int k, int l, const FitTarget& target,
                  const FitGrid& grid, std::uint64_t seed = 0);

}  // namespace opau
