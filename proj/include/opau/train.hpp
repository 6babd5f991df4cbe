#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "opau/dataset.hpp"
#include "opau/network.hpp"
#include "opau/optimizer.hpp"

namespace opau {

struct TrainConfig {
  OptimizerSettings optimizer = AdamSettings{};
  int batch_size = 32;
  int epochs = 10;
  std::uint64_t seed = 0;
  /// Where trainable activations start: the bundled LeakyReLU-fit
  /// coefficients, or a fresh fit run at build time.
  enum class Init { Table10, Fresh };
  Init init = Init::Table10;
  /// Optional global-norm clip applied to activation-parameter gradients
  /// only (rational activations can spike early in training).
  bool clip_activation_grads = false;
  double activation_clip_norm = 10.0;

  void validate() const;
};

/// What a hidden layer's activation should be, as selected on the command
/// line: a fixed baseline, a trainable orthogonal-basis unit, or a
/// trainable monomial-basis unit.
struct ActivationSpec {
  enum class Kind { Fixed, Opau, Pau };
  Kind kind = Kind::Opau;
  Baseline fixed = Baseline::ReLU;
  BasisKind basis = BasisKind::HP1;
  PauVariant variant = PauVariant::F2;
};

/// Accepts relu, leaky_relu, elu, softplus, swish, pau, and the six basis
/// names (cp1, cp2, lau, leg, hp1, hp2).
ActivationSpec activation_spec_from_string(const std::string& name);

/// Builds a fully-connected net for `arch` (e.g. {784, 128, 10}): hidden
/// layers carry the requested activation, the output layer is linear.
/// Weights use seeded uniform He-style init, biases start at zero;
/// trainable activations follow config.init.
Network build_mlp(const std::vector<int>& arch, const ActivationSpec& activation,
                  const TrainConfig& config);

struct EpochMetrics {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_loss = 0.0;
  double test_acc = 0.0;
};

struct TrainResult {
  std::vector<EpochMetrics> history;
  /// Per-epoch copies of each OPAU layer's parameters, in layer order.
  std::vector<std::vector<OpauParams>> activation_snapshots;
  int steps = 0;
};

/// Mini-batch training with seeded shuffling; deterministic for a fixed
/// config. Train loss/accuracy are accumulated over the epoch's batches as
/// trained; test metrics are evaluated after each epoch (on the training
/// set when `test_data` is null). When `metrics_csv` is given, a header
/// plus one row per epoch is streamed to it:
///   epoch,train_loss,train_acc,test_loss,test_acc   (6 decimal places)
/// A non-finite loss aborts with a diagnostic std::runtime_error.
TrainResult train(Network& net, const DatasetBatch& train_data,
                  const DatasetBatch* test_data, const TrainConfig& config,
                  std::ostream* metrics_csv = nullptr);

struct EvalMetrics {
  double loss = 0.0;  // mean per-sample loss
  double accuracy = 0.0;
};

EvalMetrics evaluate(Network& net, const DatasetBatch& data);

/// Checkpoint JSON: architecture, loss kind, seed, config, and per layer the
/// row-major flattened weights, biases, and activation state.
void save_checkpoint(const std::string& path, const Network& net,
                     const TrainConfig& config);
Network load_checkpoint(const std::string& path, TrainConfig* config = nullptr);

}  // namespace opau
