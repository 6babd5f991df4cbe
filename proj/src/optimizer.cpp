#include "opau/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace opau {
namespace {

void check_settings(const OptimizerSettings& settings) {
  if (const SgdSettings* sgd = std::get_if<SgdSettings>(&settings)) {
    if (!(sgd->lr > 0.0))
      throw std::invalid_argument("optimizer: SGD learning rate must be > 0");
    if (sgd->momentum < 0.0 || sgd->momentum >= 1.0)
      throw std::invalid_argument("optimizer: SGD momentum must be in [0, 1)");
  } else {
    const AdamSettings& adam = std::get<AdamSettings>(settings);
    if (!(adam.lr > 0.0))
      throw std::invalid_argument("optimizer: Adam learning rate must be > 0");
    if (adam.beta1 < 0.0 || adam.beta1 >= 1.0 || adam.beta2 < 0.0 || adam.beta2 >= 1.0)
      throw std::invalid_argument("optimizer: Adam betas must be in [0, 1)");
    if (!(adam.epsilon > 0.0))
      throw std::invalid_argument("optimizer: Adam epsilon must be > 0");
  }
}

}  // namespace

Optimizer::Optimizer(OptimizerSettings settings) : settings_(settings) {
  check_settings(settings_);
}

void Optimizer::step(const std::string& name, Eigen::Ref<Eigen::VectorXd> params,
                     const Eigen::Ref<const Eigen::VectorXd>& grads) {
  if (params.size() != grads.size())
    throw std::invalid_argument("optimizer: gradient size " +
                                std::to_string(grads.size()) +
                                " does not match parameter block '" + name +
                                "' of size " + std::to_string(params.size()));
  if (!grads.allFinite())
    throw std::invalid_argument("optimizer: non-finite gradient in block '" +
                                name + "'");

  Slot& slot = state_[name];
  if (slot.m.size() != params.size()) {
    slot.m = Eigen::VectorXd::Zero(params.size());
    slot.v = Eigen::VectorXd::Zero(params.size());
    slot.t = 0;
  }

  if (const SgdSettings* sgd = std::get_if<SgdSettings>(&settings_)) {
    slot.m = sgd->momentum * slot.m + grads;
    params -= sgd->lr * slot.m;
  } else {
    const AdamSettings& adam = std::get<AdamSettings>(settings_);
    ++slot.t;
    slot.m = adam.beta1 * slot.m + (1.0 - adam.beta1) * grads;
    slot.v = adam.beta2 * slot.v + (1.0 - adam.beta2) * grads.cwiseAbs2();
    const double m_corr = 1.0 - std::pow(adam.beta1, slot.t);
    const double v_corr = 1.0 - std::pow(adam.beta2, slot.t);
    params -= (adam.lr / m_corr) * slot.m.cwiseQuotient(
                  ((slot.v / v_corr).cwiseSqrt().array() + adam.epsilon).matrix());
  }
}

}  // namespace opau
