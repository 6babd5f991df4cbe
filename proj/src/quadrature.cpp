#include "opau/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace opau {

namespace {

// Golub-Welsch nodes: eigenvalues of the symmetric tridiagonal Jacobi matrix
// of the monic recurrence p_{k+1} = (x - a_k) p_k - b_k p_{k-1}. Weights come
// from the Christoffel function, w_i = 1 / sum_m q_m(x_i)^2 over the
// orthonormal polynomials, instead of the squared eigenvector first
// components: the extreme Laguerre/Hermite weights sit far below the
// eigensolver's absolute error floor, and only the recurrence keeps them
// relatively accurate enough to pair with the huge polynomial values there.
QuadratureRule golub_welsch(int n, double mu0,
                            const std::function<double(int)>& diag,
                            const std::function<double(int)>& offdiag_sq) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> off(static_cast<std::size_t>(n), 0.0);
  for (int k = 0; k < n; ++k) jacobi(k, k) = diag(k);
  for (int k = 1; k < n; ++k) {
    off[static_cast<std::size_t>(k)] = std::sqrt(offdiag_sq(k));
    jacobi(k, k - 1) = off[static_cast<std::size_t>(k)];
    jacobi(k - 1, k) = off[static_cast<std::size_t>(k)];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi, Eigen::EigenvaluesOnly);

  QuadratureRule rule;
  rule.nodes = es.eigenvalues();
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    const double x = rule.nodes[i];
    double prev = 0.0;
    double curr = 1.0 / std::sqrt(mu0);
    double sum = curr * curr;
    for (int k = 0; k + 1 < n; ++k) {
      const double next =
          ((x - diag(k)) * curr - off[static_cast<std::size_t>(k)] * prev) /
          off[static_cast<std::size_t>(k) + 1];
      sum += next * next;
      prev = curr;
      curr = next;
    }
    rule.weights[i] = 1.0 / sum;
  }
  return rule;
}

}  // namespace

QuadratureRule basis_quadrature(BasisKind kind, int points) {
  if (points < 1) throw std::invalid_argument("quadrature: node count must be >= 1");
  const double pi = std::numbers::pi;
  QuadratureRule rule;
  switch (kind) {
    case BasisKind::CP1: {
      rule.nodes.resize(points);
      rule.weights = Eigen::VectorXd::Constant(points, pi / points);
      for (int i = 0; i < points; ++i)
        rule.nodes[i] = std::cos(pi * (2 * i + 1) / (2.0 * points));
      return rule;
    }
    case BasisKind::CP2: {
      rule.nodes.resize(points);
      rule.weights.resize(points);
      for (int i = 1; i <= points; ++i) {
        const double theta = pi * i / (points + 1.0);
        rule.nodes[i - 1] = std::cos(theta);
        const double s = std::sin(theta);
        rule.weights[i - 1] = pi / (points + 1.0) * s * s;
      }
      return rule;
    }
    case BasisKind::LEG:
      return golub_welsch(
          points, 2.0, [](int) { return 0.0; },
          [](int k) { return k * k / (4.0 * k * k - 1.0); });
    case BasisKind::LAU:
      return golub_welsch(
          points, 1.0, [](int k) { return 2.0 * k + 1.0; },
          [](int k) { return static_cast<double>(k) * k; });
    case BasisKind::HP1:
      return golub_welsch(
          points, std::sqrt(2.0 * pi), [](int) { return 0.0; },
          [](int k) { return static_cast<double>(k); });
    case BasisKind::HP2:
      return golub_welsch(
          points, std::sqrt(pi), [](int) { return 0.0; },
          [](int k) { return 0.5 * k; });
  }
  throw std::logic_error("unreachable basis kind");
}

double inner_product(BasisKind kind, int i, int j, const QuadratureRule& rule) {
  if (i < 0 || j < 0) throw std::invalid_argument("inner_product: degrees must be >= 0");
  if (rule.nodes.size() < 1) throw std::invalid_argument("inner_product: empty quadrature rule");
  const int n = std::max(i, j);
  double acc = 0.0;
  for (Eigen::Index q = 0; q < rule.nodes.size(); ++q) {
    const auto vals = eval_basis(kind, n, rule.nodes[q]);
    acc += rule.weights[q] * vals[i] * vals[j];
  }
  return acc;
}

double inner_product(BasisKind kind, int i, int j, int points) {
  return inner_product(kind, i, j, basis_quadrature(kind, points));
}

Eigen::MatrixXd gram_matrix(BasisKind kind, int nmax, int points) {
  if (nmax < 0) throw std::invalid_argument("gram_matrix: nmax must be >= 0");
  const QuadratureRule rule = basis_quadrature(kind, points);
  Eigen::MatrixXd basis_at_nodes(nmax + 1, rule.nodes.size());
  for (Eigen::Index q = 0; q < rule.nodes.size(); ++q)
    basis_at_nodes.col(q) = eval_basis(kind, nmax, rule.nodes[q]);
  return basis_at_nodes * rule.weights.asDiagonal() * basis_at_nodes.transpose();
}

double max_normalized_offdiag(const Eigen::MatrixXd& gram) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < gram.rows(); ++i)
    for (Eigen::Index j = 0; j < gram.cols(); ++j) {
      if (i == j) continue;
      const double scale = std::sqrt(gram(i, i) * gram(j, j));
      worst = std::max(worst, std::abs(gram(i, j)) / scale);
    }
  return worst;
}

}  // namespace opau
