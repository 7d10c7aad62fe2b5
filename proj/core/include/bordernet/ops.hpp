#pragma once

// Differentiable layer primitives. Every function is pure: forward passes
// return fresh tensors and backward passes return fresh gradients, so callers
// own all saved state. Reductions accumulate in double and round once.

#include <cstdint>
#include <span>
#include <vector>

#include "bordernet/tensor.hpp"

namespace bordernet::ops {

/// Which gradients a backward pass should produce. Skipped ones come back empty.
struct GradRequest {
  bool input = true;
  bool weights = true;
  bool bias = true;
};

/// Stride-1 cross-correlation (no kernel flip) with zero padding.
/// input [N,C_in,H,W], kernels [C_out,C_in,kH,kW], bias [C_out] or nullptr.
Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor* bias, std::size_t pad);

struct Conv2dGrads {
  Tensor input;
  Tensor kernels;
  Tensor bias;
};

Conv2dGrads conv2d_backward(const Tensor& upstream, const Tensor& saved_input, const Tensor& kernels,
                            std::size_t pad, GradRequest request = {});

struct MaxPoolResult {
  Tensor output;
  /// Flat index into the input of the element each output was taken from.
  std::vector<std::uint32_t> argmax;
};

/// 2x2 window, stride 2. Ties go to the first element in row-major scan order.
MaxPoolResult maxpool2x2_forward(const Tensor& input);
Tensor maxpool2x2_backward(const Tensor& upstream, std::span<const std::uint32_t> argmax, const Shape& input_shape);

/// input [N,F_in], weights [F_out,F_in], bias [F_out] -> [N,F_out]
Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

struct DenseGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};

DenseGrads dense_backward(const Tensor& upstream, const Tensor& saved_input, const Tensor& weights,
                          GradRequest request = {});

Tensor relu_forward(const Tensor& input);
/// Subgradient at exactly 0 is 0.
Tensor relu_backward(const Tensor& upstream, const Tensor& saved_input);

struct LossResult {
  float loss = 0.0f;
  Tensor grad_logits;
};

/// Mean softmax cross-entropy over the batch; gradient is (softmax - onehot) / N.
LossResult softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

/// Row-wise softmax, max-subtracted.
Tensor softmax(const Tensor& logits);

}  // namespace bordernet::ops
