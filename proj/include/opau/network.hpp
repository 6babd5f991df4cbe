#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <variant>
#include <vector>

#include "opau/activations.hpp"
#include "opau/dataset.hpp"

namespace opau {

/// No nonlinearity; the canonical output layer (softmax lives in the loss).
struct Identity {};

/// One parameter set per layer, shared by every unit in it.
using LayerActivation = std::variant<Identity, Baseline, OpauParams, PauParams>;

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd biases;   // out
  LayerActivation activation = Identity{};

  Eigen::Index in_dim() const { return weights.cols(); }
  Eigen::Index out_dim() const { return weights.rows(); }
};

enum class Loss { CrossEntropy, MeanSquaredError };

inline const char* to_string(Loss loss) {
  return loss == Loss::CrossEntropy ? "cross_entropy" : "mse";
}

inline Loss loss_from_string(std::string_view name) {
  if (name == "cross_entropy") return Loss::CrossEntropy;
  if (name == "mse") return Loss::MeanSquaredError;
  throw std::invalid_argument("unknown loss '" + std::string(name) +
                              "' (valid: cross_entropy, mse)");
}

struct Network {
  std::vector<DenseLayer> layers;
  Loss loss = Loss::CrossEntropy;
  /// Bumped by every forward pass; backward only accepts the cache of the
  /// most recent one.
  std::uint64_t forward_serial = 0;

  Eigen::Index in_dim() const { return layers.front().in_dim(); }
  Eigen::Index out_dim() const { return layers.back().out_dim(); }

  /// Checks the dimension chain and every layer's parameter shapes.
  void validate() const;
};

/// Everything backward needs from the forward pass: per-layer inputs and
/// pre-activations as column-per-sample matrices, plus the final outputs.
struct ForwardCache {
  const Network* net = nullptr;
  std::uint64_t serial = 0;
  std::vector<Eigen::MatrixXd> inputs;  // layer inputs, in x batch
  std::vector<Eigen::MatrixXd> pre;     // W a + b, out x batch
  Eigen::MatrixXd output;               // out x batch
};

/// Runs the batch through the network. Returns predictions shaped
/// batch x out (matching DatasetBatch layout); fills `cache` when given.
/// An empty batch yields empty predictions.
Eigen::MatrixXd network_forward(Network& net, const DatasetBatch& batch,
                                ForwardCache* cache = nullptr);

struct LayerGrads {
  Eigen::MatrixXd weights;
  Eigen::VectorXd biases;
  Eigen::VectorXd act_c;  // OPAU c / PAU a gradients; empty for fixed activations
  Eigen::VectorXd act_d;  // OPAU d / PAU b gradients
};

struct NetworkGrads {
  std::vector<LayerGrads> layers;
  double loss = 0.0;  // summed loss of the batch these gradients belong to
};

/// Backpropagates the summed batch loss through a cached forward pass.
/// All gradients — weights, biases, and each layer's shared activation
/// parameters — are sums over the batch (and over units, for the shared
/// parameters); duplicating a sample n times scales them by n up to
/// floating-point accumulation order.
/// A cache that is not from the most recent forward on this network is
/// rejected with std::logic_error.
NetworkGrads network_backward(const Network& net, const ForwardCache& cache,
                              const std::vector<int>& labels);

/// Summed loss of predictions (batch x out) against integer labels:
/// softmax cross-entropy on logits, or 0.5 * squared distance to one-hot.
double batch_loss(Loss loss, const Eigen::MatrixXd& predictions,
                  const std::vector<int>& labels);

/// Fraction of rows whose argmax equals the label (ties -> lowest index).
double batch_accuracy(const Eigen::MatrixXd& predictions,
                      const std::vector<int>& labels);

/// Trainable activation-parameter totals across layers, both ways of
/// counting them: `paper` is k+l per trainable-activation layer, `stored`
/// counts the coefficients actually held (k+1 numerator + l denominator).
struct ExtraParamCount {
  int paper = 0;
  int stored = 0;
};

ExtraParamCount count_extra_params(const Network& net);

}  // namespace opau
