#include "opau/fit.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <utility>

#include "opau/poly_basis.hpp"

namespace opau {
namespace {

Eigen::VectorXd grid_points(const FitGrid& grid) {
  if (!std::isfinite(grid.lo) || !std::isfinite(grid.hi) || !(grid.lo < grid.hi))
    throw std::invalid_argument("fit grid requires finite lo < hi");
  if (grid.samples < 2)
    throw std::invalid_argument("fit grid requires at least two samples");
  return Eigen::VectorXd::LinSpaced(grid.samples, grid.lo, grid.hi);
}

// Affine reparameterization c = M * theta of the numerator coefficients that
// satisfies the zero-centering constraint structurally: pinned coefficients
// have no column, an eliminated coefficient is a fixed linear combination of
// the free ones. With no constraint M is the identity.
struct ConstraintMap {
  Eigen::MatrixXd M;            // (k+1) x nfree
  std::vector<int> free_index;  // c index driven by each theta component

  Eigen::VectorXd expand(const Eigen::VectorXd& theta) const { return M * theta; }
};

ConstraintMap build_constraint_map(BasisKind basis, int k,
                                   const ZeroCenterConstraint& zc) {
  const std::vector<int> support = constraint_support(basis, k);
  const Eigen::VectorXd phi = eval_basis(basis, k, 0.0);

  std::vector<char> removed(static_cast<size_t>(k) + 1, 0);
  int elim = -1;  // coefficient recovered from the free ones, if any

  const auto support_at = [&](int variant) {
    if (variant < 0 || variant >= static_cast<int>(support.size()))
      throw std::invalid_argument("zero-centering variant out of range for basis");
    return support[static_cast<size_t>(variant)];
  };

  switch (zc.kind) {
    case ZeroCenterCase::None:
      break;
    case ZeroCenterCase::Case1:
      // Every coefficient with f_i(0) != 0 is pinned to zero.
      for (int i : support) removed[static_cast<size_t>(i)] = 1;
      break;
    case ZeroCenterCase::Case2: {
      // Pin the chosen support coefficient, then eliminate the lowest
      // remaining one so the constraint holds for any free assignment.
      const int pinned = support_at(zc.variant);
      removed[static_cast<size_t>(pinned)] = 1;
      for (int i : support)
        if (i != pinned) {
          elim = i;
          break;
        }
      if (elim >= 0) removed[static_cast<size_t>(elim)] = 1;
      break;
    }
    case ZeroCenterCase::Case3:
      elim = support_at(zc.variant);
      removed[static_cast<size_t>(elim)] = 1;
      break;
  }

  ConstraintMap map;
  for (int i = 0; i <= k; ++i)
    if (!removed[static_cast<size_t>(i)]) map.free_index.push_back(i);
  const int nfree = static_cast<int>(map.free_index.size());
  map.M = Eigen::MatrixXd::Zero(k + 1, nfree);
  for (int j = 0; j < nfree; ++j) map.M(map.free_index[static_cast<size_t>(j)], j) = 1.0;
  if (elim >= 0) {
    // sum_i phi_i c_i = 0  =>  c_elim = -(sum over free support) phi_i c_i / phi_elim
    for (int j = 0; j < nfree; ++j) {
      const int i = map.free_index[static_cast<size_t>(j)];
      if (phi[i] != 0.0) map.M(elim, j) = -phi[i] / phi[elim];
    }
  }
  return map;
}

// The fixed denominator constant makes P/Q nearly scale-invariant once the
// coefficients dwarf it, so unguarded least squares can drift into a
// huge-coefficient regime where the affine constraint only holds to
// norm-relative rounding. A tiny ridge term rules that regime out while
// perturbing well-scaled solutions far below the fit tolerances.
constexpr double ridge_weight = 1e-6;

// Residuals r_m = P(x_m)/Q(x_m) - t_m of the safe form over the grid (plus
// the ridge rows), with the analytic Jacobian in the free parameters
// theta = [theta_c; d].
struct OpauObjective {
  Eigen::MatrixXd Vfree;  // grid x nfree, numerator basis columns after M
  Eigen::MatrixXd Aq;     // grid x l, |f_j(x_m)|
  Eigen::VectorXd t;      // target samples
  int nc = 0;             // free numerator coefficients
  int l = 0;

  int size() const { return nc + l; }

  void eval(const Eigen::VectorXd& theta, Eigen::VectorXd& r,
            Eigen::MatrixXd* J) const {
    const Eigen::Index m = t.size();
    const int n = size();
    const double sqrt_ridge = std::sqrt(ridge_weight);
    const Eigen::VectorXd P = Vfree * theta.head(nc);
    const Eigen::VectorXd Q =
        ((Aq * theta.tail(l).cwiseAbs()).array() + 1.0).matrix();
    r.resize(m + n);
    r.head(m) = P.cwiseQuotient(Q) - t;
    r.tail(n) = sqrt_ridge * theta;
    if (!J) return;
    J->setZero(m + n, n);
    J->topLeftCorner(m, nc) = Q.cwiseInverse().asDiagonal() * Vfree;
    const Eigen::VectorXd w = P.cwiseQuotient(Q.cwiseProduct(Q));
    for (int j = 0; j < l; ++j)
      J->col(nc + j).head(m) = -detail::sgn(theta[nc + j]) * Aq.col(j).cwiseProduct(w);
    J->bottomRows(n).diagonal().setConstant(sqrt_ridge);
  }
};

struct LmOutcome {
  Eigen::VectorXd theta;
  double sse = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;
};

// Levenberg-Marquardt with multiplicative damping on diag(J^T J). Each
// accepted step strictly lowers the objective, so `history` is decreasing.
template <typename Objective>
LmOutcome levenberg_marquardt(const Objective& obj, Eigen::VectorXd theta,
                              const FitOptimizer& opt) {
  LmOutcome out;
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  obj.eval(theta, r, &J);
  double sse = r.squaredNorm();
  out.history.push_back(sse);

  double lambda = 1e-3;
  int iter = 0;
  while (iter < opt.max_iterations) {
    ++iter;
    const Eigen::MatrixXd jtj = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    if (g.lpNorm<Eigen::Infinity>() <= 1e-12) {
      out.converged = true;
      break;
    }
    Eigen::MatrixXd damped = jtj;
    damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
    const Eigen::VectorXd step = damped.ldlt().solve(-g);

    const Eigen::VectorXd trial = theta + step;
    Eigen::VectorXd r_trial;
    obj.eval(trial, r_trial, nullptr);
    const double sse_trial = r_trial.squaredNorm();
    if (std::isfinite(sse_trial) && sse_trial < sse) {
      const double drop = sse - sse_trial;
      theta = trial;
      sse = sse_trial;
      out.history.push_back(sse);
      obj.eval(theta, r, &J);
      lambda = std::max(lambda / 3.0, 1e-12);
      if (drop <= opt.tolerance * std::max(1.0, sse)) {
        out.converged = true;
        break;
      }
    } else {
      lambda *= 4.0;
      if (lambda > 1e14) {
        // No representable step improves the objective any further; count it
        // as converged only if the gradient has actually flattened out.
        out.converged =
            g.lpNorm<Eigen::Infinity>() <= 1e-6 * std::max(1.0, std::sqrt(sse));
        break;
      }
    }
  }
  out.theta = std::move(theta);
  out.sse = sse;
  out.iterations = iter;
  return out;
}

// Sanathanan-Koerner warm start: min ||(P - t Q)/Q_prev||^2 is linear in the
// numerator coefficients and in e_j = |d_j|, and reweighting by the previous
// denominator estimate makes it approximate the true rational objective.
Eigen::VectorXd sk_warm_start(const OpauObjective& obj) {
  const Eigen::Index m = obj.t.size();
  Eigen::VectorXd q_prev = Eigen::VectorXd::Ones(m);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(obj.size());
  Eigen::MatrixXd A(m, obj.size());
  for (int pass = 0; pass < 20; ++pass) {
    const Eigen::VectorXd w = q_prev.cwiseInverse();
    A.leftCols(obj.nc) = w.asDiagonal() * obj.Vfree;
    for (int j = 0; j < obj.l; ++j)
      A.col(obj.nc + j) = -w.cwiseProduct(obj.t.cwiseProduct(obj.Aq.col(j)));
    theta = A.colPivHouseholderQr().solve(w.cwiseProduct(obj.t));
    theta.tail(obj.l) = theta.tail(obj.l).cwiseAbs();
    q_prev = ((obj.Aq * theta.tail(obj.l)).array() + 1.0).matrix();
  }
  // Start the denominators clear of the sgn(0) kink, where their gradient
  // columns would vanish identically.
  theta.tail(obj.l) = theta.tail(obj.l).cwiseMax(1e-3);
  return theta;
}

}  // namespace

std::vector<int> constraint_support(BasisKind kind, int k) {
  if (k < 0) throw std::invalid_argument("constraint_support: k must be >= 0");
  const Eigen::VectorXd phi = eval_basis(kind, k, 0.0);
  std::vector<int> support;
  for (int i = 0; i <= k; ++i)
    if (phi[i] != 0.0) support.push_back(i);
  return support;
}

double zero_center_residual(const OpauParams& params) {
  params.validate();
  const Eigen::VectorXd phi = eval_basis(params.basis, params.k, 0.0);
  return phi.dot(params.c);
}

std::vector<std::pair<double, double>> sample_target(const FitTarget& target,
                                                     const FitGrid& grid) {
  const Eigen::VectorXd xs = grid_points(grid);
  std::vector<std::pair<double, double>> samples;
  samples.reserve(static_cast<size_t>(xs.size()));
  for (Eigen::Index i = 0; i < xs.size(); ++i)
    samples.emplace_back(xs[i], target(xs[i]));
  return samples;
}

FitResult fit_opau(const FitTask& task) {
  if (task.k < 0 || task.l < 0)
    throw std::invalid_argument("fit_opau: degrees must be >= 0");
  const Eigen::VectorXd xs = grid_points(task.grid);
  if (xs.size() < task.k + task.l + 2)
    throw std::invalid_argument("fit_opau: grid must have more samples than coefficients");

  const ConstraintMap map = build_constraint_map(task.basis, task.k, task.constraint);

  OpauObjective obj;
  obj.nc = static_cast<int>(map.free_index.size());
  obj.l = task.l;
  obj.t.resize(xs.size());
  const int deg = std::max(task.k, task.l);
  Eigen::MatrixXd values(xs.size(), deg + 1);
  for (Eigen::Index row = 0; row < xs.size(); ++row) {
    values.row(row) = eval_basis(task.basis, deg, xs[row]).transpose();
    obj.t[row] = task.target(xs[row]);
  }
  obj.Vfree = values.leftCols(task.k + 1) * map.M;
  obj.Aq = values.middleCols(1, task.l).cwiseAbs();

  // One run from the linearized warm start, then seeded perturbations of it,
  // then fresh small random starts: the rational landscape has enough local
  // minima that a single start is not reliable, and when the warm start
  // itself lands in a bad basin its multiplicative perturbations stay there.
  // Best sum of squares wins.
  const Eigen::VectorXd base = sk_warm_start(obj);
  std::mt19937_64 rng(task.optimizer.seed);
  std::uniform_real_distribution<double> scale(0.5, 1.5);
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  std::uniform_real_distribution<double> mag(0.05, 0.5);

  LmOutcome best;
  const int restarts = std::max(0, task.optimizer.restarts);
  for (int attempt = 0; attempt <= restarts; ++attempt) {
    Eigen::VectorXd start = base;
    if (attempt > 0 && attempt * 2 <= restarts + 1) {
      for (Eigen::Index i = 0; i < start.size(); ++i) start[i] *= scale(rng);
      for (int j = 0; j < task.l; ++j) {
        double& dj = start[obj.nc + j];
        const double d_mag = std::max(std::abs(dj), 1e-2);
        dj = dj < 0.0 ? -d_mag : d_mag;
      }
    } else if (attempt > 0) {
      for (int i = 0; i < obj.nc; ++i) start[i] = coeff(rng);
      for (int j = 0; j < task.l; ++j)
        start[obj.nc + j] = (coeff(rng) < 0.0 ? -1.0 : 1.0) * mag(rng);
    }
    LmOutcome run = levenberg_marquardt(obj, std::move(start), task.optimizer);
    if (run.sse < best.sse) best = std::move(run);
  }

  FitResult result;
  result.params.basis = task.basis;
  result.params.k = task.k;
  result.params.l = task.l;
  result.params.safe = true;
  result.params.c = map.expand(best.theta.head(obj.nc));
  result.params.d = best.theta.tail(task.l);
  Eigen::VectorXd r;
  obj.eval(best.theta, r, nullptr);
  const auto data = r.head(xs.size());  // error metrics exclude the ridge rows
  result.rmse = std::sqrt(data.squaredNorm() / static_cast<double>(data.size()));
  result.max_abs_err = data.cwiseAbs().maxCoeff();
  result.iterations = best.iterations;
  result.converged = best.converged;
  result.loss_history = std::move(best.history);
  return result;
}

namespace {

// Same residual structure as OpauObjective but in the monomial basis, for
// the chosen PAU denominator variant.
struct PauObjective {
  Eigen::VectorXd xs;
  Eigen::VectorXd t;
  int k = 0;
  int l = 0;
  PauVariant variant = PauVariant::F2;

  int size() const { return k + 1 + l; }

  void eval(const Eigen::VectorXd& theta, Eigen::VectorXd& r,
            Eigen::MatrixXd* J) const {
    const Eigen::Index m = t.size();
    const int n = size();
    const double sqrt_ridge = std::sqrt(ridge_weight);
    PauParamsT<double> p;
    p.a = theta.head(k + 1);
    p.b = theta.tail(l);
    p.variant = variant;
    r.resize(m + n);
    r.tail(n) = sqrt_ridge * theta;
    if (J) J->setZero(m + n, n);
    PauGrad grad;
    for (Eigen::Index row = 0; row < m; ++row) {
      r[row] = pau_eval(p, xs[row], J ? &grad : nullptr) - t[row];
      if (J) {
        J->row(row).head(k + 1) = grad.d_a.transpose();
        J->row(row).tail(l) = grad.d_b.transpose();
      }
    }
    if (J) J->bottomRows(n).diagonal().setConstant(sqrt_ridge);
  }
};

}  // namespace

PauParams fit_pau(PauVariant variant, int k, int l, const FitTarget& target,
                  const FitGrid& grid, std::uint64_t seed) {
  if (k < 0 || l < 0) throw std::invalid_argument("fit_pau: degrees must be >= 0");
  if (variant == PauVariant::F1)
    throw std::invalid_argument("fit_pau: F1 has poles; fit F2 or F3 instead");
  const Eigen::VectorXd xs = grid_points(grid);
  if (xs.size() < k + l + 2)
    throw std::invalid_argument("fit_pau: grid must have more samples than coefficients");

  PauObjective obj;
  obj.k = k;
  obj.l = l;
  obj.variant = variant;
  obj.xs = xs;
  obj.t.resize(xs.size());
  for (Eigen::Index row = 0; row < xs.size(); ++row) obj.t[row] = target(xs[row]);

  // Classic Pade linearization P - t (1 + B) = 0 ignores the denominator's
  // absolute value but lands close enough for LM to finish the job.
  Eigen::MatrixXd A(xs.size(), obj.size());
  for (int i = 0; i <= k; ++i) A.col(i) = xs.array().pow(i).matrix();
  for (int j = 1; j <= l; ++j)
    A.col(k + j) = -obj.t.cwiseProduct(xs.array().pow(j).matrix());
  const Eigen::VectorXd base = A.colPivHouseholderQr().solve(obj.t);

  FitOptimizer opt;
  opt.seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> scale(0.5, 1.5);
  LmOutcome best;
  for (int attempt = 0; attempt <= opt.restarts; ++attempt) {
    Eigen::VectorXd start = base;
    if (attempt > 0)
      for (Eigen::Index i = 0; i < start.size(); ++i) start[i] *= scale(rng);
    LmOutcome run = levenberg_marquardt(obj, std::move(start), opt);
    if (run.sse < best.sse) best = std::move(run);
  }

  PauParams params;
  params.a = best.theta.head(k + 1);
  params.b = best.theta.tail(l);
  params.variant = variant;
  return params;
}

}  // namespace opau
