#include "rvae/adam.hpp"

#include <cmath>
#include <string>

#include "rvae/error.hpp"

namespace rvae {

AdamState::AdamState(std::size_t parameter_count, AdamConfig config)
    : config_(config), m_(parameter_count, 0.0), v_(parameter_count, 0.0), lr_scale_(parameter_count, 1.0) {
  if (!(config.lr > 0.0) || !(config.eps > 0.0) || config.beta1 < 0.0 || config.beta1 >= 1.0 ||
      config.beta2 < 0.0 || config.beta2 >= 1.0) {
    throw ConfigError("AdamState: invalid hyperparameters");
  }
}

void AdamState::update(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw ConfigError("AdamState: parameter/gradient/moment lengths differ");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw NumericError("Adam: non-finite gradient at parameter " + std::to_string(i) +
                         " (step " + std::to_string(step_ + 1) + ")");
    }
  }
  ++step_;
  const auto t = static_cast<double>(step_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grads[i];
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grads[i] * grads[i];
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] -= config_.lr * lr_scale_[i] * m_hat / (std::sqrt(v_hat) + config_.eps);
  }
}

void AdamState::set_lr_scale(std::vector<double> scale) {
  if (scale.size() != m_.size()) throw ConfigError("AdamState: lr scale length differs from parameter count");
  for (double s : scale) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("AdamState: lr scales must be positive and finite");
  }
  lr_scale_ = std::move(scale);
}

}  // namespace rvae
