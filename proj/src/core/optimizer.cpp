#include "core/optimizer.hpp"

#include <cmath>
#include <string>

namespace m2oe {

AdamOptimizer::AdamOptimizer(std::vector<Tensor> params, const AdamConfig &config)
    : params_(std::move(params)), config_(config) {
  if (!(config.learning_rate > 0.0)) {
    fail(ErrorKind::Config, "learning rate must be positive, got " +
                                std::to_string(config.learning_rate));
  }
  if (!(config.beta1 >= 0.0 && config.beta1 < 1.0) ||
      !(config.beta2 >= 0.0 && config.beta2 < 1.0)) {
    fail(ErrorKind::Config, "adam decay rates must lie in [0, 1)");
  }
  if (!(config.epsilon > 0.0)) {
    fail(ErrorKind::Config, "adam epsilon must be positive");
  }
  first_moment_.reserve(params_.size());
  second_moment_.reserve(params_.size());
  for (const Tensor &p : params_) {
    if (!p.defined()) {
      fail(ErrorKind::Config, "optimizer parameter is undefined");
    }
    first_moment_.emplace_back(p.size(), 0.0);
    second_moment_.emplace_back(p.size(), 0.0);
  }
}

void AdamOptimizer::step() {
  ++step_count_;
  const double bias1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_count_));
  const double bias2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_count_));
  for (std::size_t p = 0; p < params_.size(); ++p) {
    Tensor &param = params_[p];
    const std::vector<double> &grad = param.grad();
    std::vector<double> &values = param.raw_values();
    std::vector<double> &m = first_moment_[p];
    std::vector<double> &v = second_moment_[p];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = i < grad.size() ? grad[i] : 0.0;
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      values[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
    check_finite(values, "adam_step");
  }
}

void AdamOptimizer::zero_grad() {
  for (Tensor &p : params_) {
    p.zero_grad();
  }
}

} // namespace m2oe
