#pragma once

#include <string>

#include "bordernet/tensor.hpp"

namespace bordernet {

/// A named tensor plus its gradient accumulator. Frozen parameters still
/// receive a gradient slot but are never modified by the optimizer.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name_, Tensor value_, bool trainable_ = true)
      : name(std::move(name_)), value(std::move(value_)), grad(Tensor::zeros_like(value)), trainable(trainable_) {}

  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;

  void zero_grad() { grad.fill(0.0f); }
};

}  // namespace bordernet
