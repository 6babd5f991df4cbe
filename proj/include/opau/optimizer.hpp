#pragma once

#include <Eigen/Core>

#include <map>
#include <string>
#include <variant>

namespace opau {

struct SgdSettings {
  double lr = 0.01;
  double momentum = 0.0;
};

struct AdamSettings {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

using OptimizerSettings = std::variant<SgdSettings, AdamSettings>;

/// Stateful first-order optimizer over named, flattened parameter blocks.
/// State (momentum / moment estimates) is keyed by block name so one
/// instance drives every tensor of a network; updates are deterministic.
class Optimizer {
 public:
  /// Throws std::invalid_argument on invalid hyperparameters (lr <= 0, ...).
  explicit Optimizer(OptimizerSettings settings);

  /// One in-place update. Throws std::invalid_argument naming the block on
  /// shape mismatch or non-finite gradients.
  void step(const std::string& name, Eigen::Ref<Eigen::VectorXd> params,
            const Eigen::Ref<const Eigen::VectorXd>& grads);

  const OptimizerSettings& settings() const { return settings_; }

 private:
  struct Slot {
    Eigen::VectorXd m;  // SGD momentum buffer / Adam first moment
    Eigen::VectorXd v;  // Adam second moment
    long t = 0;         // Adam step count for bias correction
  };

  OptimizerSettings settings_;
  std::map<std::string, Slot> state_;
};

}  // namespace opau
