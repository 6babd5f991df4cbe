#pragma once

#include <Eigen/Core>

#include "opau/poly_basis.hpp"

namespace opau {

/// Nodes and weights of a rule matched to one basis's weight function, so
/// that sum_q w_q g(x_q) approximates the weighted integral of g over the
/// basis domain.
struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

/// Gauss rule with `points` nodes for the basis's classical weight.
/// Chebyshev rules are closed-form; LEG/LAU/HP1/HP2 come from the
/// Golub-Welsch eigendecomposition of the Jacobi matrix.
QuadratureRule basis_quadrature(BasisKind kind, int points);

/// Weighted inner product <f_i, f_j> under the given rule.
double inner_product(BasisKind kind, int i, int j, const QuadratureRule& rule);

/// Convenience overload building a `points`-node rule internally.
double inner_product(BasisKind kind, int i, int j, int points);

/// Gram matrix of <f_i, f_j> for degrees 0..nmax.
Eigen::MatrixXd gram_matrix(BasisKind kind, int nmax, int points = 128);

/// max_{i != j} |G_ij| / sqrt(G_ii G_jj); 0 for a 1x1 matrix.
double max_normalized_offdiag(const Eigen::MatrixXd& gram);

}  // namespace opau
