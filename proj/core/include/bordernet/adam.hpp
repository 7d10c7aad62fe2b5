#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bordernet/parameter.hpp"

namespace bordernet {

struct AdamConfig {
  float learning_rate = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float epsilon = 1e-8f;
};

/// Optimizer state. Moment tensors are allocated on the first step, one pair
/// per parameter slot; frozen slots keep empty tensors.
struct AdamState {
  explicit AdamState(AdamConfig cfg = {});

  AdamConfig config;
  std::uint64_t step_count = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

/// One bias-corrected ADAM update over `params`, then zeroes every gradient.
/// The parameter list must keep the same order and shapes between calls.
void adam_step(std::span<Parameter> params, AdamState& state);

}  // namespace bordernet
