#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bordernet/filter_bank.hpp"
#include "bordernet/parameter.hpp"
#include "bordernet/tensor.hpp"

namespace bordernet {

enum class Variant : std::uint32_t { Vanilla = 0, BorderNet = 1, RandomNet = 2 };

std::string_view to_string(Variant v);
/// Accepts "vanilla", "bordernet", "randomnet".
std::optional<Variant> parse_variant(std::string_view name);

/// Declarative description of one of the three LeNet-5 variants.
/// Activation and pooling are fixed to ReLU and 2x2 max pooling; the fields
/// exist so the choice is recorded alongside every checkpoint.
struct NetworkSpec {
  Variant variant = Variant::Vanilla;
  std::optional<FilterBank> front_filters;
  bool front_trainable = false;
  std::string activation = "relu";
  std::string pooling = "max2x2";
  std::uint64_t seed = 0;
};

/// Activations saved by a forward pass for the matching backward pass.
struct ForwardTrace {
  std::vector<Tensor> front_inputs;
  Tensor conv1_input;
  Tensor conv1_pre;
  Shape pool1_input_shape;
  std::vector<std::uint32_t> pool1_argmax;
  Tensor conv2_input;
  Tensor conv2_pre;
  Shape pool2_input_shape;
  std::vector<std::uint32_t> pool2_argmax;
  Tensor fc1_input;
  Tensor fc1_pre;
  Tensor fc2_input;
  Tensor fc2_pre;
  Tensor fc3_input;
};

/// LeNet-5 (conv 6@5x5 pad 2, pool, conv 16@5x5, pool, 400-120-84-10) with an
/// optional front of four biasless 1->1 7x7 convolutions (pad 3) applied in
/// sequence without activations in between.
///
/// Parameters are stored in a fixed order: front.{0..3}.weight when present,
/// then conv1, conv2, fc1, fc2, fc3, each as .weight followed by .bias.
class Network {
 public:
  /// Builds and initialises the network. Weights are uniform in
  /// +-sqrt(1/fan_in) drawn from Rng(seed, layer); biases start at zero.
  explicit Network(NetworkSpec spec);

  const NetworkSpec& spec() const noexcept { return spec_; }
  Variant variant() const noexcept { return spec_.variant; }

  /// input [N,1,28,28] -> logits [N,10]
  Tensor forward(const Tensor& input) const;
  Tensor forward(const Tensor& input, ForwardTrace& trace) const;

  /// Adds the gradient of the loss w.r.t. every parameter into Parameter::grad.
  /// Frozen front kernels are skipped entirely.
  void backward(const ForwardTrace& trace, const Tensor& grad_logits);

  std::span<Parameter> parameters() noexcept { return params_; }
  std::span<const Parameter> parameters() const noexcept { return params_; }
  const Parameter& parameter(std::string_view name) const;
  Parameter& parameter(std::string_view name);

  std::size_t parameter_count() const noexcept;
  std::size_t trainable_parameter_count() const noexcept;
  std::size_t front_count() const noexcept { return front_count_; }

  void zero_grad();

  /// Replaces every parameter value; names and shapes must match exactly.
  void load_values(std::span<const Parameter> values);

 private:
  NetworkSpec spec_;
  std::vector<Parameter> params_;
  std::size_t front_count_ = 0;
  std::size_t conv1_ = 0;  // index of conv1.weight; the rest follow in pairs
};

Network build_vanilla(std::uint64_t seed);
/// Throws std::invalid_argument unless bank.kind == FilterKind::Oriented.
Network build_bordernet(std::uint64_t seed, const FilterBank& bank, bool trainable = false);
/// Throws std::invalid_argument unless bank.kind == FilterKind::Random.
Network build_randomnet(std::uint64_t seed, const FilterBank& bank, bool trainable = false);

/// Same architecture, same spec, bit-identical parameter values.
bool bit_identical(const Network& a, const Network& b);

}  // namespace bordernet
