#include "CLI11.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "opau/activations.hpp"
#include "opau/dataset.hpp"
#include "opau/fit.hpp"
#include "opau/network.hpp"
#include "opau/quadrature.hpp"
#include "opau/serialize.hpp"
#include "opau/table10.hpp"
#include "opau/train.hpp"

namespace {

using opau::BasisKind;
using opau::OpauParams;

// |a - b| relative to b, with an absolute floor so near-zero references
// do not blow the ratio up.
double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::abs(b));
}

opau::ZeroCenterConstraint parse_constraint(const std::string& text) {
  opau::ZeroCenterConstraint zc;
  std::string name = text;
  const std::size_t colon = text.find(':');
  if (colon != std::string::npos) {
    name = text.substr(0, colon);
    zc.variant = std::stoi(text.substr(colon + 1));
  }
  if (name == "none") zc.kind = opau::ZeroCenterCase::None;
  else if (name == "case1") zc.kind = opau::ZeroCenterCase::Case1;
  else if (name == "case2") zc.kind = opau::ZeroCenterCase::Case2;
  else if (name == "case3") zc.kind = opau::ZeroCenterCase::Case3;
  else
    throw std::invalid_argument("unknown constraint '" + text +
                                "' (valid: none, case1, case2[:v], case3[:v])");
  return zc;
}

std::vector<int> parse_arch(const std::string& text) {
  std::vector<int> arch;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, '-')) {
    try {
      std::size_t used = 0;
      const int width = std::stoi(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
      arch.push_back(width);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad architecture '" + text +
                                  "' (expected e.g. 784-128-10)");
    }
  }
  if (arch.size() < 2)
    throw std::invalid_argument("architecture needs at least two layer sizes");
  return arch;
}

// Interval each basis is exercised on: the classical domain for the finite
// families, a few standard deviations for the Hermite weights.
std::pair<double, double> sampling_range(BasisKind kind) {
  switch (kind) {
    case BasisKind::CP1:
    case BasisKind::CP2:
    case BasisKind::LEG: return {-1.0, 1.0};
    case BasisKind::LAU: return {0.0, 6.0};
    case BasisKind::HP1:
    case BasisKind::HP2: return {-3.0, 3.0};
  }
  throw std::logic_error("unreachable basis kind");
}

OpauParams load_params_checked(const std::string& path) {
  try {
    return opau::load_opau_params(path);
  } catch (const std::exception& e) {
    // malformed input is a validation failure, not a numerical one
    throw std::invalid_argument(e.what());
  }
}

// ---------------------------------------------------------------- fit ----

struct FitOptions {
  std::string basis;
  int k = 5;
  int l = 4;
  std::string target = "leaky_relu";
  double alpha = 0.01;
  double lo = -3.0;
  double hi = 3.0;
  int samples = 1000;
  std::string constraint = "none";
  std::uint64_t seed = 0;
  std::string out = "opau_fit.json";
  bool strict = false;
};

void run_fit(const FitOptions& opt) {
  opau::FitTask task;
  task.basis = opau::basis_from_string(opt.basis);
  task.k = opt.k;
  task.l = opt.l;
  task.target = opau::FitTarget::baseline(opau::baseline_from_string(opt.target),
                                          opt.alpha);
  task.grid = {opt.lo, opt.hi, opt.samples};
  task.constraint = parse_constraint(opt.constraint);
  task.optimizer.seed = opt.seed;

  const opau::FitResult result = opau::fit_opau(task);
  if (opt.strict && !result.converged)
    throw std::runtime_error("fit did not converge within " +
                             std::to_string(task.optimizer.max_iterations) +
                             " iterations (max_abs_err=" +
                             std::to_string(result.max_abs_err) + ")");

  nlohmann::json doc = opau::to_json(result.params);
  doc["diagnostics"] = {{"rmse", result.rmse},
                        {"max_abs_err", result.max_abs_err},
                        {"iterations", result.iterations},
                        {"converged", result.converged}};
  std::ofstream out(opt.out);
  if (!out) throw std::runtime_error("cannot open '" + opt.out + "' for writing");
  out << doc.dump(2) << '\n';

  std::printf("fit basis=%s target=%s rmse=%.6g max_abs_err=%.6g iterations=%d "
              "converged=%d out=%s\n",
              opau::to_string(task.basis), opt.target.c_str(), result.rmse,
              result.max_abs_err, result.iterations, result.converged ? 1 : 0,
              opt.out.c_str());
}

// -------------------------------------------------------------- curve ----

struct CurveOptions {
  std::string params;
  double lo = -3.0;
  double hi = 3.0;
  int samples = 200;
  std::string out = "curve.csv";
};

void run_curve(const CurveOptions& opt) {
  const OpauParams params = load_params_checked(opt.params);
  if (!(opt.lo < opt.hi))
    throw std::invalid_argument("curve requires lo < hi");
  if (opt.samples < 1)
    throw std::invalid_argument("curve requires at least one sample");

  std::ostringstream rows;
  rows << "x,y,dy\n";
  opau::OpauGrad grad;
  for (int i = 0; i < opt.samples; ++i) {
    const double x =
        opt.samples == 1
            ? opt.lo
            : opt.lo + (opt.hi - opt.lo) * static_cast<double>(i) /
                           static_cast<double>(opt.samples - 1);
    const double y = opau::opau_eval(params, x, &grad);
    char line[96];
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g\n", x, y, grad.d_input);
    rows << line;
  }
  std::ofstream out(opt.out);
  if (!out) throw std::runtime_error("cannot open '" + opt.out + "' for writing");
  out << rows.str();
  std::printf("curve basis=%s samples=%d out=%s\n", opau::to_string(params.basis),
              opt.samples, opt.out.c_str());
}

// ---------------------------------------------------------- gradcheck ----

struct GradcheckOptions {
  std::string params;
  int random = 0;
  int samples = 200;
  std::uint64_t seed = 0;
};

// Central finite differences for every component of Eq 7, with steps kept
// away from the |d_j| and |f_j| kinks.
double max_fd_error(const OpauParams& params, double x) {
  opau::OpauGrad grad;
  opau::opau_eval(params, x, &grad);
  double worst = 0.0;

  const double hx = 1e-6 * std::max(1.0, std::abs(x));
  const double fd_x =
      (opau::opau_forward(params, x + hx) - opau::opau_forward(params, x - hx)) /
      (2.0 * hx);
  worst = std::max(worst, rel_err(grad.d_input, fd_x));

  for (int i = 0; i <= params.k; ++i) {
    OpauParams p = params;
    const double h = 1e-6 * std::max(1.0, std::abs(params.c[i]));
    p.c[i] = params.c[i] + h;
    const double up = opau::opau_forward(p, x);
    p.c[i] = params.c[i] - h;
    const double dn = opau::opau_forward(p, x);
    worst = std::max(worst, rel_err(grad.d_c[i], (up - dn) / (2.0 * h)));
  }
  for (int j = 0; j < params.l; ++j) {
    OpauParams p = params;
    const double dj = params.d[j];
    double h = 1e-6 * std::max(1.0, std::abs(dj));
    if (dj != 0.0) h = std::min(h, 0.49 * std::abs(dj));  // stay on one side of 0
    p.d[j] = dj + h;
    const double up = opau::opau_forward(p, x);
    p.d[j] = dj - h;
    const double dn = opau::opau_forward(p, x);
    worst = std::max(worst, rel_err(grad.d_d[j], (up - dn) / (2.0 * h)));
  }
  return worst;
}

bool kink_margin_ok(const OpauParams& params, double x) {
  const Eigen::VectorXd f = opau::eval_basis(params.basis, params.l, x);
  for (int j = 1; j <= params.l; ++j)
    if (std::abs(f[j]) < 1e-3) return false;
  return true;
}

void run_gradcheck(const GradcheckOptions& opt) {
  if (opt.params.empty() && opt.random <= 0)
    throw std::invalid_argument("gradcheck needs --params FILE or --random N");

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  std::uniform_real_distribution<double> mag(0.05, 1.0);

  double worst = 0.0;
  int checked = 0;
  const int wanted = opt.params.empty() ? opt.random : opt.samples;
  OpauParams params;
  if (!opt.params.empty()) params = load_params_checked(opt.params);

  while (checked < wanted) {
    if (opt.params.empty()) {
      params = OpauParams{};
      params.basis = opau::all_bases[static_cast<std::size_t>(checked) %
                                     opau::all_bases.size()];
      params.c.resize(params.k + 1);
      for (int i = 0; i <= params.k; ++i) params.c[i] = coeff(rng);
      params.d.resize(params.l);
      for (int j = 0; j < params.l; ++j)
        params.d[j] = (coeff(rng) < 0.0 ? -1.0 : 1.0) * mag(rng);
    }
    const auto [lo, hi] = sampling_range(params.basis);
    std::uniform_real_distribution<double> xdist(lo, hi);
    double x = xdist(rng);
    bool found = false;
    for (int tries = 0; tries < 100 && !found; ++tries) {
      if (kink_margin_ok(params, x)) found = true;
      else x = xdist(rng);
    }
    if (!found) continue;
    worst = std::max(worst, max_fd_error(params, x));
    ++checked;
  }

  const bool pass = worst <= 1e-5;
  std::printf("gradcheck samples=%d max_rel_err=%.3e threshold=1e-05 status=%s\n",
              checked, worst, pass ? "pass" : "fail");
  if (!pass)
    throw std::runtime_error("gradient check failed: max relative error " +
                             std::to_string(worst) + " exceeds 1e-5");
}

// --------------------------------------------------------- orthocheck ----

struct OrthocheckOptions {
  std::string basis;
  int nmax = 6;
  int points = 128;
};

void run_orthocheck(const OrthocheckOptions& opt) {
  const BasisKind kind = opau::basis_from_string(opt.basis);
  if (opt.nmax < 0) throw std::invalid_argument("orthocheck requires nmax >= 0");
  const Eigen::MatrixXd gram = opau::gram_matrix(kind, opt.nmax, opt.points);

  std::printf("normalized Gram matrix, basis=%s, degrees 0..%d:\n",
              opau::to_string(kind), opt.nmax);
  for (Eigen::Index i = 0; i < gram.rows(); ++i) {
    for (Eigen::Index j = 0; j < gram.cols(); ++j) {
      const double norm =
          gram(i, j) / std::sqrt(gram(i, i) * gram(j, j));
      std::printf("% .3e%s", norm, j + 1 == gram.cols() ? "\n" : " ");
    }
  }
  const double offdiag = opau::max_normalized_offdiag(gram);
  const bool pass = offdiag <= 1e-6;
  std::printf("orthocheck basis=%s nmax=%d max_offdiag=%.3e threshold=1e-06 "
              "status=%s\n",
              opau::to_string(kind), opt.nmax, offdiag, pass ? "pass" : "fail");
  if (!pass)
    throw std::runtime_error("orthogonality check failed: max off-diagonal " +
                             std::to_string(offdiag) + " exceeds 1e-6");
}

// -------------------------------------------------------- train / eval ----

struct DataOptions {
  std::string data;
  std::string labels;
  std::string format = "idx";
  std::string label_column = "label";
  std::string test_data;
  std::string test_labels;
};

opau::DatasetBatch load_dataset(const std::string& data, const std::string& labels,
                                const DataOptions& opt, int num_classes) {
  try {
    if (opt.format == "idx") {
      if (labels.empty())
        throw std::invalid_argument("idx format needs a labels file (--labels)");
      return opau::load_idx(data, labels, num_classes);
    }
    if (opt.format == "csv") {
      opau::DatasetBatch batch = opau::load_csv(data, opt.label_column);
      if (batch.num_classes > num_classes)
        throw std::invalid_argument("dataset has labels up to " +
                                    std::to_string(batch.num_classes - 1) +
                                    " but the network has " +
                                    std::to_string(num_classes) + " outputs");
      batch.num_classes = num_classes;
      return batch;
    }
    throw std::invalid_argument("unknown format '" + opt.format +
                                "' (valid: idx, csv)");
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception& e) {
    throw std::invalid_argument(e.what());  // unreadable data is a config error
  }
}

struct TrainOptions {
  DataOptions data;
  std::string arch = "784-128-10";
  std::string activation = "hp1";
  int epochs = 10;
  int batch = 32;
  std::string optimizer = "adam";
  double lr = 0.001;
  double momentum = 0.0;
  std::uint64_t seed = 0;
  std::string init = "table10";
  std::string metrics_out = "metrics.csv";
  std::string checkpoint_out = "checkpoint.json";
  bool clip = false;
};

void run_train(const TrainOptions& opt) {
  const std::vector<int> arch = parse_arch(opt.arch);

  opau::TrainConfig config;
  if (opt.optimizer == "adam") {
    opau::AdamSettings adam;
    adam.lr = opt.lr;
    config.optimizer = adam;
  } else if (opt.optimizer == "sgd") {
    config.optimizer = opau::SgdSettings{opt.lr, opt.momentum};
  } else {
    throw std::invalid_argument("unknown optimizer '" + opt.optimizer +
                                "' (valid: adam, sgd)");
  }
  config.batch_size = opt.batch;
  config.epochs = opt.epochs;
  config.seed = opt.seed;
  if (opt.init == "table10") config.init = opau::TrainConfig::Init::Table10;
  else if (opt.init == "fresh") config.init = opau::TrainConfig::Init::Fresh;
  else throw std::invalid_argument("unknown init '" + opt.init + "' (valid: table10, fresh)");
  config.clip_activation_grads = opt.clip;
  config.validate();

  const opau::DatasetBatch train_data =
      load_dataset(opt.data.data, opt.data.labels, opt.data, arch.back());
  if (train_data.dim() != arch.front())
    throw std::invalid_argument("dataset dim " + std::to_string(train_data.dim()) +
                                " does not match architecture input " +
                                std::to_string(arch.front()));
  opau::DatasetBatch test_data;
  const bool have_test = !opt.data.test_data.empty();
  if (have_test) {
    test_data = load_dataset(opt.data.test_data, opt.data.test_labels, opt.data,
                             arch.back());
    if (test_data.dim() != arch.front())
      throw std::invalid_argument("test dataset dim does not match architecture");
  }

  const opau::ActivationSpec spec = opau::activation_spec_from_string(opt.activation);
  opau::Network net = opau::build_mlp(arch, spec, config);

  std::ofstream metrics(opt.metrics_out);
  if (!metrics)
    throw std::runtime_error("cannot open '" + opt.metrics_out + "' for writing");
  const opau::TrainResult result = opau::train(
      net, train_data, have_test ? &test_data : nullptr, config, &metrics);

  opau::save_checkpoint(opt.checkpoint_out, net, config);
  const opau::ExtraParamCount extra = opau::count_extra_params(net);
  const opau::EpochMetrics last =
      result.history.empty() ? opau::EpochMetrics{} : result.history.back();
  std::printf("train samples=%d arch=%s activation=%s epochs=%d steps=%d "
              "final_train_loss=%.6f final_train_acc=%.4f final_test_acc=%.4f "
              "extra_params_paper=%d extra_params_stored=%d metrics=%s "
              "checkpoint=%s\n",
              static_cast<int>(train_data.size()), opt.arch.c_str(),
              opt.activation.c_str(), opt.epochs, result.steps, last.train_loss,
              last.train_acc, last.test_acc, extra.paper, extra.stored,
              opt.metrics_out.c_str(), opt.checkpoint_out.c_str());
}

struct EvalOptions {
  std::string checkpoint;
  DataOptions data;
};

void run_eval(const EvalOptions& opt) {
  opau::Network net;
  try {
    net = opau::load_checkpoint(opt.checkpoint);
  } catch (const std::exception& e) {
    throw std::invalid_argument(e.what());
  }
  const opau::DatasetBatch data =
      load_dataset(opt.data.data, opt.data.labels, opt.data,
                   static_cast<int>(net.out_dim()));
  const opau::EvalMetrics metrics = opau::evaluate(net, data);
  std::printf("eval samples=%d loss=%.6f accuracy=%.4f checkpoint=%s\n",
              static_cast<int>(data.size()), metrics.loss, metrics.accuracy,
              opt.checkpoint.c_str());
}

void add_data_flags(CLI::App* cmd, DataOptions& opt, bool with_test) {
  cmd->add_option("--data", opt.data, "dataset file (IDX images or CSV)")
      ->required();
  cmd->add_option("--labels", opt.labels, "IDX labels file (idx format only)");
  cmd->add_option("--format", opt.format, "dataset format: idx or csv")
      ->capture_default_str();
  cmd->add_option("--label-column", opt.label_column,
                  "label column name (csv format)")
      ->capture_default_str();
  if (with_test) {
    cmd->add_option("--test-data", opt.test_data, "held-out dataset file");
    cmd->add_option("--test-labels", opt.test_labels, "held-out IDX labels file");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Orthogonal-Pade activation units: fitting, diagnostics, training"};
  app.require_subcommand(1);

  FitOptions fit;
  CLI::App* cmd_fit = app.add_subcommand(
      "fit", "Least-squares fit of OPAU coefficients to a baseline activation");
  cmd_fit->add_option("--basis", fit.basis, "basis: CP1, CP2, LAU, LEG, HP1, HP2")
      ->required();
  cmd_fit->add_option("--k", fit.k, "numerator degree")->capture_default_str();
  cmd_fit->add_option("--l", fit.l, "denominator degree")->capture_default_str();
  cmd_fit->add_option("--target", fit.target, "target activation")
      ->capture_default_str();
  cmd_fit->add_option("--alpha", fit.alpha, "target activation alpha")
      ->capture_default_str();
  cmd_fit->add_option("--lo", fit.lo, "fit interval start")->capture_default_str();
  cmd_fit->add_option("--hi", fit.hi, "fit interval end")->capture_default_str();
  cmd_fit->add_option("--samples", fit.samples, "fit grid samples")
      ->capture_default_str();
  cmd_fit->add_option("--constraint", fit.constraint,
                      "zero-centering: none, case1, case2[:v], case3[:v]")
      ->capture_default_str();
  cmd_fit->add_option("--seed", fit.seed, "restart seed")->capture_default_str();
  cmd_fit->add_option("--out", fit.out, "output JSON path")->capture_default_str();
  cmd_fit->add_flag("--strict", fit.strict, "exit 2 if the fit does not converge");
  cmd_fit->callback([&fit] { run_fit(fit); });

  CurveOptions curve;
  CLI::App* cmd_curve =
      app.add_subcommand("curve", "Sample G(x) and G'(x) to CSV");
  cmd_curve->add_option("--params", curve.params, "OPAU params JSON")->required();
  cmd_curve->add_option("--lo", curve.lo, "interval start")->capture_default_str();
  cmd_curve->add_option("--hi", curve.hi, "interval end")->capture_default_str();
  cmd_curve->add_option("--samples", curve.samples, "number of rows")
      ->capture_default_str();
  cmd_curve->add_option("--out", curve.out, "output CSV path")
      ->capture_default_str();
  cmd_curve->callback([&curve] { run_curve(curve); });

  GradcheckOptions gradcheck;
  CLI::App* cmd_gradcheck = app.add_subcommand(
      "gradcheck", "Analytic gradients vs central finite differences");
  cmd_gradcheck->add_option("--params", gradcheck.params, "OPAU params JSON");
  cmd_gradcheck->add_option("--random", gradcheck.random,
                            "check N random parameter sets instead");
  cmd_gradcheck->add_option("--samples", gradcheck.samples,
                            "evaluation points with --params")
      ->capture_default_str();
  cmd_gradcheck->add_option("--seed", gradcheck.seed, "sampling seed")
      ->capture_default_str();
  cmd_gradcheck->callback([&gradcheck] { run_gradcheck(gradcheck); });

  OrthocheckOptions orthocheck;
  CLI::App* cmd_orthocheck = app.add_subcommand(
      "orthocheck", "Normalized Gram matrix under the basis weight");
  cmd_orthocheck->add_option("--basis", orthocheck.basis, "basis name")->required();
  cmd_orthocheck->add_option("--nmax", orthocheck.nmax, "max degree")
      ->capture_default_str();
  cmd_orthocheck->add_option("--points", orthocheck.points, "quadrature points")
      ->capture_default_str();
  cmd_orthocheck->callback([&orthocheck] { run_orthocheck(orthocheck); });

  TrainOptions train;
  CLI::App* cmd_train =
      app.add_subcommand("train", "Train an MLP with per-layer activations");
  add_data_flags(cmd_train, train.data, /*with_test=*/true);
  cmd_train->add_option("--arch", train.arch, "layer sizes, e.g. 784-128-10")
      ->capture_default_str();
  cmd_train
      ->add_option("--activation", train.activation,
                   "relu, leaky_relu, elu, softplus, swish, pau, cp1, cp2, lau, "
                   "leg, hp1, hp2")
      ->capture_default_str();
  cmd_train->add_option("--epochs", train.epochs, "training epochs")
      ->capture_default_str();
  cmd_train->add_option("--batch", train.batch, "mini-batch size")
      ->capture_default_str();
  cmd_train->add_option("--optimizer", train.optimizer, "adam or sgd")
      ->capture_default_str();
  cmd_train->add_option("--lr", train.lr, "learning rate")->capture_default_str();
  cmd_train->add_option("--momentum", train.momentum, "SGD momentum")
      ->capture_default_str();
  cmd_train->add_option("--seed", train.seed, "weight init and shuffle seed")
      ->capture_default_str();
  cmd_train->add_option("--init", train.init,
                        "activation parameter init: table10 or fresh")
      ->capture_default_str();
  cmd_train->add_option("--metrics-out", train.metrics_out, "metrics CSV path")
      ->capture_default_str();
  cmd_train
      ->add_option("--checkpoint-out", train.checkpoint_out, "checkpoint JSON path")
      ->capture_default_str();
  cmd_train->add_flag("--clip-activation-grads", train.clip,
                      "clip activation-parameter gradients to global norm 10");
  cmd_train->callback([&train] { run_train(train); });

  EvalOptions eval;
  CLI::App* cmd_eval =
      app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  cmd_eval->add_option("--checkpoint", eval.checkpoint, "checkpoint JSON")
      ->required();
  add_data_flags(cmd_eval, eval.data, /*with_test=*/false);
  cmd_eval->callback([&eval] { run_eval(eval); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
