#include "bordernet/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace bordernet {

AdamState::AdamState(AdamConfig cfg) : config(cfg) {
  if (!(cfg.learning_rate > 0.0f)) throw std::invalid_argument("adam: learning rate must be positive");
  if (!(cfg.beta1 > 0.0f && cfg.beta1 < 1.0f) || !(cfg.beta2 > 0.0f && cfg.beta2 < 1.0f)) {
    throw std::invalid_argument("adam: betas must lie in (0, 1)");
  }
  if (!(cfg.epsilon > 0.0f)) throw std::invalid_argument("adam: epsilon must be positive");
}

void adam_step(std::span<Parameter> params, AdamState& state) {
  if (state.step_count == 0) {
    state.first_moment.clear();
    state.second_moment.clear();
    for (const auto& p : params) {
      state.first_moment.push_back(p.trainable ? Tensor::zeros_like(p.value) : Tensor{});
      state.second_moment.push_back(p.trainable ? Tensor::zeros_like(p.value) : Tensor{});
    }
  } else if (state.first_moment.size() != params.size()) {
    throw ShapeError("adam: parameter list changed size between steps");
  }

  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter& p = params[i];
    if (p.grad.shape() != p.value.shape()) {
      throw ShapeError("adam: gradient of '" + p.name + "' has shape " + to_string(p.grad.shape()) +
                       ", value has " + to_string(p.value.shape()));
    }
    if (p.trainable && state.first_moment[i].shape() != p.value.shape()) {
      throw ShapeError("adam: moment shape mismatch for '" + p.name + "'");
    }
  }

  ++state.step_count;
  const double b1 = state.config.beta1;
  const double b2 = state.config.beta2;
  const double lr = state.config.learning_rate;
  const double eps = state.config.epsilon;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(b1, t);
  const double correction2 = 1.0 - std::pow(b2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    if (p.trainable) {
      float* value = p.value.raw();
      const float* grad = p.grad.raw();
      float* m = state.first_moment[i].raw();
      float* v = state.second_moment[i].raw();
      for (std::size_t j = 0; j < p.value.size(); ++j) {
        const double g = grad[j];
        const double m_new = b1 * m[j] + (1.0 - b1) * g;
        const double v_new = b2 * v[j] + (1.0 - b2) * g * g;
        m[j] = static_cast<float>(m_new);
        v[j] = static_cast<float>(v_new);
        const double m_hat = m_new / correction1;
        const double v_hat = v_new / correction2;
        value[j] = static_cast<float>(value[j] - lr * m_hat / (std::sqrt(v_hat) + eps));
      }
    }
    p.zero_grad();
  }
}

}  // namespace bordernet
