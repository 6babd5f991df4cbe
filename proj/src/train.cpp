#include "opau/train.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "opau/fit.hpp"
#include "opau/serialize.hpp"
#include "opau/table10.hpp"

namespace opau {
namespace {

using nlohmann::json;

DatasetBatch gather_rows(const DatasetBatch& data, const std::vector<int>& order,
                         std::size_t start, std::size_t count) {
  DatasetBatch batch;
  batch.num_classes = data.num_classes;
  batch.features.resize(static_cast<Eigen::Index>(count), data.dim());
  batch.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const int row = order[start + i];
    batch.features.row(static_cast<Eigen::Index>(i)) = data.features.row(row);
    batch.labels[i] = data.labels[static_cast<std::size_t>(row)];
  }
  return batch;
}

std::string diagnostic_snapshot(const Network& net, int epoch, int step,
                                double loss) {
  std::ostringstream out;
  out << "train: non-finite loss " << loss << " at epoch " << epoch << ", step "
      << step << ";";
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const DenseLayer& layer = net.layers[i];
    out << " layer" << i << " |W|=" << layer.weights.norm()
        << " |b|=" << layer.biases.norm();
    if (const OpauParams* p = std::get_if<OpauParams>(&layer.activation))
      out << " |c|=" << p->c.norm() << " |d|=" << p->d.norm();
  }
  return out.str();
}

// Divides all gradient blocks by the batch size, then optionally clips the
// activation-parameter gradients to a shared global norm.
void reduce_gradients(NetworkGrads& grads, double batch_size,
                      const TrainConfig& config) {
  double act_sq = 0.0;
  for (LayerGrads& lg : grads.layers) {
    lg.weights /= batch_size;
    lg.biases /= batch_size;
    lg.act_c /= batch_size;
    lg.act_d /= batch_size;
    act_sq += lg.act_c.squaredNorm() + lg.act_d.squaredNorm();
  }
  if (config.clip_activation_grads) {
    const double norm = std::sqrt(act_sq);
    if (norm > config.activation_clip_norm) {
      const double scale = config.activation_clip_norm / norm;
      for (LayerGrads& lg : grads.layers) {
        lg.act_c *= scale;
        lg.act_d *= scale;
      }
    }
  }
}

void apply_gradients(Network& net, const NetworkGrads& grads, Optimizer& optim) {
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    DenseLayer& layer = net.layers[i];
    const LayerGrads& lg = grads.layers[i];
    const std::string prefix = "layer" + std::to_string(i);
    Eigen::Map<Eigen::VectorXd> w(layer.weights.data(), layer.weights.size());
    Eigen::Map<const Eigen::VectorXd> gw(lg.weights.data(), lg.weights.size());
    optim.step(prefix + ".weights", w, gw);
    optim.step(prefix + ".biases", layer.biases, lg.biases);
    if (OpauParams* p = std::get_if<OpauParams>(&layer.activation)) {
      optim.step(prefix + ".act_c", p->c, lg.act_c);
      optim.step(prefix + ".act_d", p->d, lg.act_d);
    } else if (PauParams* p = std::get_if<PauParams>(&layer.activation)) {
      optim.step(prefix + ".act_a", p->a, lg.act_c);
      optim.step(prefix + ".act_b", p->b, lg.act_d);
    }
  }
}

json activation_to_json(const LayerActivation& activation) {
  if (std::holds_alternative<Identity>(activation)) return {{"kind", "identity"}};
  if (const Baseline* b = std::get_if<Baseline>(&activation))
    return {{"kind", "baseline"}, {"name", to_string(*b)}};
  if (const OpauParams* p = std::get_if<OpauParams>(&activation))
    return {{"kind", "opau"}, {"params", to_json(*p)}};
  const PauParams& p = std::get<PauParams>(activation);
  return {{"kind", "pau"},
          {"variant", to_string(p.variant)},
          {"a", std::vector<double>(p.a.data(), p.a.data() + p.a.size())},
          {"b", std::vector<double>(p.b.data(), p.b.data() + p.b.size())}};
}

LayerActivation activation_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "identity") return Identity{};
  if (kind == "baseline")
    return baseline_from_string(j.at("name").get<std::string>());
  if (kind == "opau") return opau_params_from_json(j.at("params"));
  if (kind == "pau") {
    PauParams p;
    const auto a = j.at("a").get<std::vector<double>>();
    const auto b = j.at("b").get<std::vector<double>>();
    p.a = Eigen::Map<const Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
    p.b = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
    p.variant = pau_variant_from_string(j.at("variant").get<std::string>());
    return p;
  }
  throw std::runtime_error("checkpoint: unknown activation kind '" + kind + "'");
}

json optimizer_to_json(const OptimizerSettings& settings) {
  if (const SgdSettings* sgd = std::get_if<SgdSettings>(&settings))
    return {{"kind", "sgd"}, {"lr", sgd->lr}, {"momentum", sgd->momentum}};
  const AdamSettings& adam = std::get<AdamSettings>(settings);
  return {{"kind", "adam"},
          {"lr", adam.lr},
          {"beta1", adam.beta1},
          {"beta2", adam.beta2},
          {"epsilon", adam.epsilon}};
}

OptimizerSettings optimizer_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "sgd")
    return SgdSettings{j.at("lr").get<double>(), j.at("momentum").get<double>()};
  if (kind == "adam")
    return AdamSettings{j.at("lr").get<double>(), j.at("beta1").get<double>(),
                        j.at("beta2").get<double>(), j.at("epsilon").get<double>()};
  throw std::runtime_error("checkpoint: unknown optimizer kind '" + kind + "'");
}

}  // namespace

void TrainConfig::validate() const {
  const Optimizer probe(optimizer);  // validates hyperparameters
  (void)probe;
  if (batch_size < 1)
    throw std::invalid_argument("train config: batch size must be >= 1");
  if (epochs < 0)
    throw std::invalid_argument("train config: epochs must be >= 0");
  if (clip_activation_grads && !(activation_clip_norm > 0.0))
    throw std::invalid_argument("train config: clip norm must be > 0");
}

ActivationSpec activation_spec_from_string(const std::string& name) {
  ActivationSpec spec;
  if (name == "pau") {
    spec.kind = ActivationSpec::Kind::Pau;
    return spec;
  }
  try {
    spec.kind = ActivationSpec::Kind::Fixed;
    spec.fixed = baseline_from_string(name);
    return spec;
  } catch (const std::invalid_argument&) {
  }
  try {
    spec.kind = ActivationSpec::Kind::Opau;
    spec.basis = basis_from_string(name);
    return spec;
  } catch (const std::invalid_argument&) {
  }
  throw std::invalid_argument(
      "unknown activation '" + name +
      "' (valid: relu, leaky_relu, elu, softplus, swish, pau, cp1, cp2, lau, "
      "leg, hp1, hp2)");
}

Network build_mlp(const std::vector<int>& arch, const ActivationSpec& activation,
                  const TrainConfig& config) {
  config.validate();
  if (arch.size() < 2)
    throw std::invalid_argument("build_mlp: need at least input and output sizes");
  for (int width : arch)
    if (width < 1) throw std::invalid_argument("build_mlp: layer sizes must be >= 1");

  // Fit trainable activation parameters once and share the result across
  // hidden layers (each layer still trains its own copy).
  LayerActivation hidden;
  switch (activation.kind) {
    case ActivationSpec::Kind::Fixed:
      hidden = activation.fixed;
      break;
    case ActivationSpec::Kind::Opau:
      if (config.init == TrainConfig::Init::Table10) {
        hidden = bundled_table10(activation.basis);
      } else {
        FitTask task;
        task.basis = activation.basis;
        task.optimizer.seed = config.seed;
        hidden = fit_opau(task).params;
      }
      break;
    case ActivationSpec::Kind::Pau:
      hidden = fit_pau(activation.variant, 5, 4, FitTarget::leaky_relu(),
                       FitGrid{}, config.seed);
      break;
  }

  std::mt19937_64 rng(config.seed);
  Network net;
  for (std::size_t i = 0; i + 1 < arch.size(); ++i) {
    DenseLayer layer;
    const int fan_in = arch[i];
    const int fan_out = arch[i + 1];
    const double bound = std::sqrt(6.0 / fan_in);
    std::uniform_real_distribution<double> uniform(-bound, bound);
    layer.weights.resize(fan_out, fan_in);
    for (Eigen::Index r = 0; r < fan_out; ++r)
      for (Eigen::Index c = 0; c < fan_in; ++c) layer.weights(r, c) = uniform(rng);
    layer.biases = Eigen::VectorXd::Zero(fan_out);
    layer.activation = (i + 2 < arch.size()) ? hidden : LayerActivation{Identity{}};
    net.layers.push_back(std::move(layer));
  }
  net.validate();
  return net;
}

TrainResult train(Network& net, const DatasetBatch& train_data,
                  const DatasetBatch* test_data, const TrainConfig& config,
                  std::ostream* metrics_csv) {
  config.validate();
  net.validate();
  train_data.validate();
  if (test_data) test_data->validate();
  if (train_data.size() == 0)
    throw std::invalid_argument("train: empty training set");

  Optimizer optim(config.optimizer);
  std::mt19937_64 rng(config.seed);
  std::vector<int> order(static_cast<std::size_t>(train_data.size()));
  std::iota(order.begin(), order.end(), 0);

  if (metrics_csv) *metrics_csv << "epoch,train_loss,train_acc,test_loss,test_acc\n";

  TrainResult result;
  const double n_train = static_cast<double>(train_data.size());
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    double hit_sum = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t count = std::min<std::size_t>(
          static_cast<std::size_t>(config.batch_size), order.size() - start);
      const DatasetBatch batch = gather_rows(train_data, order, start, count);

      ForwardCache cache;
      const Eigen::MatrixXd preds = network_forward(net, batch, &cache);
      NetworkGrads grads = network_backward(net, cache, batch.labels);
      if (!std::isfinite(grads.loss))
        throw std::runtime_error(
            diagnostic_snapshot(net, epoch, result.steps, grads.loss));

      loss_sum += grads.loss;
      hit_sum += batch_accuracy(preds, batch.labels) * static_cast<double>(count);

      reduce_gradients(grads, static_cast<double>(count), config);
      apply_gradients(net, grads, optim);
      ++result.steps;
    }

    EpochMetrics metrics;
    metrics.epoch = epoch;
    metrics.train_loss = loss_sum / n_train;
    metrics.train_acc = hit_sum / n_train;
    const EvalMetrics test = evaluate(net, test_data ? *test_data : train_data);
    metrics.test_loss = test.loss;
    metrics.test_acc = test.accuracy;
    result.history.push_back(metrics);

    std::vector<OpauParams> snapshot;
    for (const DenseLayer& layer : net.layers)
      if (const OpauParams* p = std::get_if<OpauParams>(&layer.activation))
        snapshot.push_back(*p);
    result.activation_snapshots.push_back(std::move(snapshot));

    if (metrics_csv) {
      char row[160];
      std::snprintf(row, sizeof(row), "%d,%.6f,%.6f,%.6f,%.6f\n", metrics.epoch,
                    metrics.train_loss, metrics.train_acc, metrics.test_loss,
                    metrics.test_acc);
      *metrics_csv << row;
    }
  }
  return result;
}

EvalMetrics evaluate(Network& net, const DatasetBatch& data) {
  data.validate();
  EvalMetrics metrics;
  if (data.size() == 0) return metrics;
  const Eigen::MatrixXd preds = network_forward(net, data);
  metrics.loss = batch_loss(net.loss, preds, data.labels) /
                 static_cast<double>(data.size());
  metrics.accuracy = batch_accuracy(preds, data.labels);
  return metrics;
}

void save_checkpoint(const std::string& path, const Network& net,
                     const TrainConfig& config) {
  net.validate();
  json doc;
  doc["format"] = "opau-checkpoint-v1";
  doc["seed"] = config.seed;
  doc["loss"] = to_string(net.loss);
  doc["config"] = {
      {"optimizer", optimizer_to_json(config.optimizer)},
      {"batch_size", config.batch_size},
      {"epochs", config.epochs},
      {"init", config.init == TrainConfig::Init::Table10 ? "table10" : "fresh"},
      {"clip_activation_grads", config.clip_activation_grads},
      {"activation_clip_norm", config.activation_clip_norm},
  };
  doc["layers"] = json::array();
  for (const DenseLayer& layer : net.layers) {
    std::vector<double> weights;
    weights.reserve(static_cast<std::size_t>(layer.weights.size()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
        weights.push_back(layer.weights(r, c));
    doc["layers"].push_back(
        {{"in", layer.in_dim()},
         {"out", layer.out_dim()},
         {"weights", weights},
         {"biases", std::vector<double>(layer.biases.data(),
                                        layer.biases.data() + layer.biases.size())},
         {"activation", activation_to_json(layer.activation)}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << doc.dump(2) << '\n';
}

Network load_checkpoint(const std::string& path, TrainConfig* config) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  json doc;
  in >> doc;
  if (doc.value("format", "") != "opau-checkpoint-v1")
    throw std::runtime_error(path + ": not an opau checkpoint");

  Network net;
  net.loss = loss_from_string(doc.at("loss").get<std::string>());
  for (const json& jl : doc.at("layers")) {
    DenseLayer layer;
    const Eigen::Index in_dim = jl.at("in").get<Eigen::Index>();
    const Eigen::Index out_dim = jl.at("out").get<Eigen::Index>();
    const auto weights = jl.at("weights").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(weights.size()) != in_dim * out_dim)
      throw std::runtime_error(path + ": layer weight count does not match dims");
    layer.weights.resize(out_dim, in_dim);
    for (Eigen::Index r = 0; r < out_dim; ++r)
      for (Eigen::Index c = 0; c < in_dim; ++c)
        layer.weights(r, c) = weights[static_cast<std::size_t>(r * in_dim + c)];
    const auto biases = jl.at("biases").get<std::vector<double>>();
    layer.biases = Eigen::Map<const Eigen::VectorXd>(
        biases.data(), static_cast<Eigen::Index>(biases.size()));
    layer.activation = activation_from_json(jl.at("activation"));
    net.layers.push_back(std::move(layer));
  }
  net.validate();

  if (config) {
    const json& jc = doc.at("config");
    config->optimizer = optimizer_from_json(jc.at("optimizer"));
    config->batch_size = jc.at("batch_size").get<int>();
    config->epochs = jc.at("epochs").get<int>();
    config->seed = doc.at("seed").get<std::uint64_t>();
    config->init = jc.at("init").get<std::string>() == "fresh"
                       ? TrainConfig::Init::Fresh
                       : TrainConfig::Init::Table10;
    config->clip_activation_grads = jc.at("clip_activation_grads").get<bool>();
    config->activation_clip_norm = jc.at("activation_clip_norm").get<double>();
  }
  return net;
}

}  // namespace opau
