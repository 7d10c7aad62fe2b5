#include "bordernet/network.hpp"

#include <cmath>
#include <stdexcept>

#include "bordernet/ops.hpp"
#include "bordernet/rng.hpp"

namespace bordernet {
namespace {

constexpr std::size_t kFrontPad = 3;
constexpr std::size_t kConv1Pad = 2;

Tensor uniform_init(Shape shape, std::size_t fan_in, std::uint64_t seed, std::uint64_t layer) {
  Rng rng(seed, layer);
  const auto bound = static_cast<float>(std::sqrt(1.0 / static_cast<double>(fan_in)));
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Vanilla: return "vanilla";
    case Variant::BorderNet: return "bordernet";
    case Variant::RandomNet: return "randomnet";
  }
  return "?";
}

std::optional<Variant> parse_variant(std::string_view name) {
  if (name == "vanilla") return Variant::Vanilla;
  if (name == "bordernet") return Variant::BorderNet;
  if (name == "randomnet") return Variant::RandomNet;
  return std::nullopt;
}

Network::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  if (spec_.activation != "relu" || spec_.pooling != "max2x2") {
    throw std::invalid_argument("only relu activations with 2x2 max pooling are implemented");
  }
  if (spec_.variant == Variant::Vanilla) {
    if (spec_.front_filters) throw std::invalid_argument("vanilla LeNet takes no front filters");
  } else {
    if (!spec_.front_filters) throw std::invalid_argument("front filter bank required for this variant");
    const FilterKind want = spec_.variant == Variant::BorderNet ? FilterKind::Oriented : FilterKind::Random;
    if (spec_.front_filters->kind != want) {
      throw std::invalid_argument(std::string(to_string(spec_.variant)) + " needs a " +
                                  std::string(bordernet::to_string(want)) + " filter bank");
    }
    for (std::size_t k = 0; k < 4; ++k) {
      const Tensor& kernel = spec_.front_filters->kernels[k];
      if (kernel.shape() != Shape{1, 1, kFilterSize, kFilterSize}) {
        throw ShapeError("front kernel " + std::to_string(k) + " must be [1x1x7x7], got " +
                         to_string(kernel.shape()));
      }
      params_.emplace_back("front." + std::to_string(k) + ".weight", kernel, spec_.front_trainable);
    }
    front_count_ = 4;
  }

  conv1_ = params_.size();
  const std::uint64_t seed = spec_.seed;
  params_.emplace_back("conv1.weight", uniform_init({6, 1, 5, 5}, 25, seed, 1));
  params_.emplace_back("conv1.bias", Tensor({6}));
  params_.emplace_back("conv2.weight", uniform_init({16, 6, 5, 5}, 150, seed, 2));
  params_.emplace_back("conv2.bias", Tensor({16}));
  params_.emplace_back("fc1.weight", uniform_init({120, 400}, 400, seed, 3));
  params_.emplace_back("fc1.bias", Tensor({120}));
  params_.emplace_back("fc2.weight", uniform_init({84, 120}, 120, seed, 4));
  params_.emplace_back("fc2.bias", Tensor({84}));
  params_.emplace_back("fc3.weight", uniform_init({10, 84}, 84, seed, 5));
  params_.emplace_back("fc3.bias", Tensor({10}));
}

Tensor Network::forward(const Tensor& input) const {
  ForwardTrace trace;
  return forward(input, trace);
}

Tensor Network::forward(const Tensor& input, ForwardTrace& trace) const {
  if (input.rank() != 4 || input.dim(1) != 1 || input.dim(2) != 28 || input.dim(3) != 28) {
    throw ShapeError("network input must be [N,1,28,28], got " + to_string(input.shape()));
  }
  const std::size_t batch = input.dim(0);
  const Parameter* p = params_.data();

  trace.front_inputs.clear();
  Tensor x = input;
  for (std::size_t k = 0; k < front_count_; ++k) {
    if (spec_.front_trainable) trace.front_inputs.push_back(x);
    x = ops::conv2d_forward(x, p[k].value, nullptr, kFrontPad);
  }

  p += conv1_;
  trace.conv1_input = std::move(x);
  trace.conv1_pre = ops::conv2d_forward(trace.conv1_input, p[0].value, &p[1].value, kConv1Pad);
  Tensor act = ops::relu_forward(trace.conv1_pre);
  trace.pool1_input_shape = act.shape();
  auto pool1 = ops::maxpool2x2_forward(act);
  trace.pool1_argmax = std::move(pool1.argmax);

  trace.conv2_input = std::move(pool1.output);
  trace.conv2_pre = ops::conv2d_forward(trace.conv2_input, p[2].value, &p[3].value, 0);
  act = ops::relu_forward(trace.conv2_pre);
  trace.pool2_input_shape = act.shape();
  auto pool2 = ops::maxpool2x2_forward(act);
  trace.pool2_argmax = std::move(pool2.argmax);

  trace.fc1_input = std::move(pool2.output).reshaped({batch, 400});
  trace.fc1_pre = ops::dense_forward(trace.fc1_input, p[4].value, p[5].value);
  trace.fc2_input = ops::relu_forward(trace.fc1_pre);
  trace.fc2_pre = ops::dense_forward(trace.fc2_input, p[6].value, p[7].value);
  trace.fc3_input = ops::relu_forward(trace.fc2_pre);
  return ops::dense_forward(trace.fc3_input, p[8].value, p[9].value);
}

void Network::backward(const ForwardTrace& trace, const Tensor& grad_logits) {
  auto add = [](Tensor& into, const Tensor& g) {
    for (std::size_t i = 0; i < into.size(); ++i) into[i] += g[i];
  };
  Parameter* p = params_.data() + conv1_;
  const std::size_t batch = trace.fc1_input.dim(0);

  auto fc3 = ops::dense_backward(grad_logits, trace.fc3_input, p[8].value);
  add(p[8].grad, fc3.weights);
  add(p[9].grad, fc3.bias);
  auto fc2 = ops::dense_backward(ops::relu_backward(fc3.input, trace.fc2_pre), trace.fc2_input, p[6].value);
  add(p[6].grad, fc2.weights);
  add(p[7].grad, fc2.bias);
  auto fc1 = ops::dense_backward(ops::relu_backward(fc2.input, trace.fc1_pre), trace.fc1_input, p[4].value);
  add(p[4].grad, fc1.weights);
  add(p[5].grad, fc1.bias);

  Tensor g = std::move(fc1.input).reshaped({batch, 16, 5, 5});
  g = ops::maxpool2x2_backward(g, trace.pool2_argmax, trace.pool2_input_shape);
  auto conv2 = ops::conv2d_backward(ops::relu_backward(g, trace.conv2_pre), trace.conv2_input, p[2].value, 0);
  add(p[2].grad, conv2.kernels);
  add(p[3].grad, conv2.bias);

  g = ops::maxpool2x2_backward(conv2.input, trace.pool1_argmax, trace.pool1_input_shape);
  const bool need_front = front_count_ > 0 && spec_.front_trainable;
  auto conv1 = ops::conv2d_backward(ops::relu_backward(g, trace.conv1_pre), trace.conv1_input, p[0].value, kConv1Pad,
                                    {.input = need_front, .weights = true, .bias = true});
  add(p[0].grad, conv1.kernels);
  add(p[1].grad, conv1.bias);
  if (!need_front) return;

  g = std::move(conv1.input);
  for (std::size_t k = front_count_; k-- > 0;) {
    auto front = ops::conv2d_backward(g, trace.front_inputs[k], params_[k].value, kFrontPad,
                                      {.input = k > 0, .weights = true, .bias = false});
    add(params_[k].grad, front.kernels);
    g = std::move(front.input);
  }
}

const Parameter& Network::parameter(std::string_view name) const {
  for (const auto& p : params_) {
    if (p.name == name) return p;
  }
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

Parameter& Network::parameter(std::string_view name) {
  return const_cast<Parameter&>(std::as_const(*this).parameter(name));
}

std::size_t Network::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

std::size_t Network::trainable_parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.trainable ? p.value.size() : 0;
  return n;
}

void Network::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void Network::load_values(std::span<const Parameter> values) {
  if (values.size() != params_.size()) {
    throw ShapeError("expected " + std::to_string(params_.size()) + " parameters, got " +
                     std::to_string(values.size()));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].name != params_[i].name || values[i].value.shape() != params_[i].value.shape()) {
      throw ShapeError("parameter " + std::to_string(i) + " is '" + values[i].name + "' " +
                       to_string(values[i].value.shape()) + ", expected '" + params_[i].name + "' " +
                       to_string(params_[i].value.shape()));
    }
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    params_[i].value = values[i].value;
    params_[i].zero_grad();
    if (i < front_count_) spec_.front_filters->kernels[i] = values[i].value;
  }
}

namespace {

NetworkSpec make_spec(Variant variant, std::uint64_t seed, std::optional<FilterBank> bank, bool trainable) {
  NetworkSpec spec;
  spec.variant = variant;
  spec.seed = seed;
  spec.front_filters = std::move(bank);
  spec.front_trainable = trainable;
  return spec;
}

}  // namespace

Network build_vanilla(std::uint64_t seed) { return Network(make_spec(Variant::Vanilla, seed, std::nullopt, false)); }

Network build_bordernet(std::uint64_t seed, const FilterBank& bank, bool trainable) {
  if (bank.kind != FilterKind::Oriented) throw std::invalid_argument("BorderNet requires an oriented filter bank");
  return Network(make_spec(Variant::BorderNet, seed, bank, trainable));
}

Network build_randomnet(std::uint64_t seed, const FilterBank& bank, bool trainable) {
  if (bank.kind != FilterKind::Random) throw std::invalid_argument("RandomNet requires a random filter bank");
  return Network(make_spec(Variant::RandomNet, seed, bank, trainable));
}

bool bit_identical(const Network& a, const Network& b) {
  const auto& sa = a.spec();
  const auto& sb = b.spec();
  if (sa.variant != sb.variant || sa.front_trainable != sb.front_trainable || sa.seed != sb.seed ||
      sa.activation != sb.activation || sa.pooling != sb.pooling) {
    return false;
  }
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].name != pb[i].name || pa[i].trainable != pb[i].trainable || !bit_identical(pa[i].value, pb[i].value)) {
      return false;
    }
  }
  return true;
}

}  // namespace bordernet
