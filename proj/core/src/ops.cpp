#include "bordernet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gemm.hpp"

namespace bordernet::ops {
namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + " must have rank " + std::to_string(rank) + ", got " + to_string(t.shape()));
  }
}

struct ConvGeometry {
  std::size_t batch, in_ch, height, width;
  std::size_t out_ch, k_h, k_w, pad;
  std::size_t out_h, out_w;

  std::size_t patch() const { return in_ch * k_h * k_w; }
  std::size_t pixels() const { return out_h * out_w; }
};

ConvGeometry conv_geometry(const Tensor& input, const Tensor& kernels, std::size_t pad) {
  require_rank(input, 4, "conv2d input");
  require_rank(kernels, 4, "conv2d kernels");
  ConvGeometry g{};
  g.batch = input.dim(0);
  g.in_ch = input.dim(1);
  g.height = input.dim(2);
  g.width = input.dim(3);
  g.out_ch = kernels.dim(0);
  g.k_h = kernels.dim(2);
  g.k_w = kernels.dim(3);
  g.pad = pad;
  if (kernels.dim(1) != g.in_ch) {
    throw ShapeError("conv2d: input has " + std::to_string(g.in_ch) + " channels but kernels " +
                     to_string(kernels.shape()) + " expect " + std::to_string(kernels.dim(1)));
  }
  if (g.k_h > g.height + 2 * pad || g.k_w > g.width + 2 * pad) {
    throw ShapeError("conv2d: kernel " + to_string(kernels.shape()) + " larger than padded input " +
                     to_string(input.shape()) + " with pad " + std::to_string(pad));
  }
  g.out_h = g.height + 2 * pad - g.k_h + 1;
  g.out_w = g.width + 2 * pad - g.k_w + 1;
  return g;
}

// cols[(c*kH + i)*kW + j, oy*outW + ox] = x[c, oy + i - pad, ox + j - pad] (0 outside)
void im2col(const ConvGeometry& g, const float* image, float* cols) {
  const std::size_t pixels = g.pixels();
  for (std::size_t c = 0; c < g.in_ch; ++c) {
    const float* plane = image + c * g.height * g.width;
    for (std::size_t i = 0; i < g.k_h; ++i) {
      for (std::size_t j = 0; j < g.k_w; ++j) {
        float* row = cols + ((c * g.k_h + i) * g.k_w + j) * pixels;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy + i) - static_cast<std::ptrdiff_t>(g.pad);
          float* dst = row + oy * g.out_w;
          if (y < 0 || y >= static_cast<std::ptrdiff_t>(g.height)) {
            std::fill(dst, dst + g.out_w, 0.0f);
            continue;
          }
          const float* src = plane + static_cast<std::size_t>(y) * g.width;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(ox + j) - static_cast<std::ptrdiff_t>(g.pad);
            dst[ox] = (x < 0 || x >= static_cast<std::ptrdiff_t>(g.width)) ? 0.0f : src[x];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-add columns back onto the (unpadded) image.
void col2im(const ConvGeometry& g, const double* cols, double* image) {
  const std::size_t pixels = g.pixels();
  for (std::size_t c = 0; c < g.in_ch; ++c) {
    double* plane = image + c * g.height * g.width;
    for (std::size_t i = 0; i < g.k_h; ++i) {
      for (std::size_t j = 0; j < g.k_w; ++j) {
        const double* row = cols + ((c * g.k_h + i) * g.k_w + j) * pixels;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy + i) - static_cast<std::ptrdiff_t>(g.pad);
          if (y < 0 || y >= static_cast<std::ptrdiff_t>(g.height)) continue;
          double* dst = plane + static_cast<std::size_t>(y) * g.width;
          const double* src = row + oy * g.out_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(ox + j) - static_cast<std::ptrdiff_t>(g.pad);
            if (x >= 0 && x < static_cast<std::ptrdiff_t>(g.width)) dst[x] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor* bias, std::size_t pad) {
  const ConvGeometry g = conv_geometry(input, kernels, pad);
  if (bias != nullptr && bias->shape() != Shape{g.out_ch}) {
    throw ShapeError("conv2d: bias " + to_string(bias->shape()) + " does not match " + std::to_string(g.out_ch) +
                     " output channels");
  }
  Tensor out({g.batch, g.out_ch, g.out_h, g.out_w});
  std::vector<float> cols(g.patch() * g.pixels());
  const std::size_t in_stride = g.in_ch * g.height * g.width;
  const std::size_t out_stride = g.out_ch * g.pixels();
  for (std::size_t n = 0; n < g.batch; ++n) {
    im2col(g, input.raw() + n * in_stride, cols.data());
    float* dst = out.raw() + n * out_stride;
    if (bias != nullptr) {
      for (std::size_t o = 0; o < g.out_ch; ++o) std::fill(dst + o * g.pixels(), dst + (o + 1) * g.pixels(), (*bias)[o]);
    }
    detail::gemm(false, g.out_ch, g.pixels(), g.patch(), kernels.raw(), cols.data(), dst, bias != nullptr);
  }
  return out;
}

Conv2dGrads conv2d_backward(const Tensor& upstream, const Tensor& saved_input, const Tensor& kernels,
                            std::size_t pad, GradRequest request) {
  const ConvGeometry g = conv_geometry(saved_input, kernels, pad);
  const Shape expected{g.batch, g.out_ch, g.out_h, g.out_w};
  if (upstream.shape() != expected) {
    throw ShapeError("conv2d_backward: upstream " + to_string(upstream.shape()) + " does not match forward output " +
                     to_string(expected));
  }
  const std::size_t patch = g.patch();
  const std::size_t pixels = g.pixels();
  const std::size_t in_stride = g.in_ch * g.height * g.width;
  const std::size_t out_stride = g.out_ch * pixels;

  Conv2dGrads grads;
  std::vector<float> cols;
  std::vector<float> cols_t;
  std::vector<double> kernel_acc;
  if (request.weights) {
    cols.resize(patch * pixels);
    cols_t.resize(patch * pixels);
    kernel_acc.assign(g.out_ch * patch, 0.0);
  }
  std::vector<double> col_grad;
  std::vector<double> image_grad;
  if (request.input) {
    col_grad.resize(patch * pixels);
    image_grad.resize(in_stride);
    grads.input = Tensor(saved_input.shape());
  }

  for (std::size_t n = 0; n < g.batch; ++n) {
    const float* gout = upstream.raw() + n * out_stride;
    if (request.weights) {
      im2col(g, saved_input.raw() + n * in_stride, cols.data());
      detail::transpose(patch, pixels, cols.data(), cols_t.data());
      detail::gemm(false, g.out_ch, patch, pixels, gout, cols_t.data(), kernel_acc.data(), true);
    }
    if (request.input) {
      detail::gemm(true, patch, pixels, g.out_ch, kernels.raw(), gout, col_grad.data(), false);
      std::fill(image_grad.begin(), image_grad.end(), 0.0);
      col2im(g, col_grad.data(), image_grad.data());
      float* dst = grads.input.raw() + n * in_stride;
      for (std::size_t i = 0; i < in_stride; ++i) dst[i] = static_cast<float>(image_grad[i]);
    }
  }

  if (request.weights) {
    grads.kernels = Tensor(kernels.shape());
    for (std::size_t i = 0; i < kernel_acc.size(); ++i) grads.kernels[i] = static_cast<float>(kernel_acc[i]);
  }
  if (request.bias) {
    grads.bias = Tensor({g.out_ch});
    for (std::size_t o = 0; o < g.out_ch; ++o) {
      double sum = 0.0;
      for (std::size_t n = 0; n < g.batch; ++n) {
        const float* gout = upstream.raw() + n * out_stride + o * pixels;
        for (std::size_t p = 0; p < pixels; ++p) sum += gout[p];
      }
      grads.bias[o] = static_cast<float>(sum);
    }
  }
  return grads;
}

MaxPoolResult maxpool2x2_forward(const Tensor& input) {
  require_rank(input, 4, "maxpool input");
  const std::size_t batch = input.dim(0), channels = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (h % 2 != 0 || w % 2 != 0) {
    throw ShapeError("maxpool2x2: spatial dims must be even, got " + to_string(input.shape()));
  }
  if (input.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw ShapeError("maxpool2x2: input too large for 32-bit argmax indices");
  }
  const std::size_t oh = h / 2, ow = w / 2;
  MaxPoolResult result{Tensor({batch, channels, oh, ow}), {}};
  result.argmax.resize(result.output.size());
  std::size_t out_i = 0;
  for (std::size_t plane = 0; plane < batch * channels; ++plane) {
    const std::size_t base = plane * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox, ++out_i) {
        std::size_t best = base + (2 * oy) * w + 2 * ox;
        // row-major scan of the window; strict > keeps the first maximum
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = base + (2 * oy + dy) * w + 2 * ox + dx;
            if (input[idx] > input[best]) best = idx;
          }
        }
        result.output[out_i] = input[best];
        result.argmax[out_i] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return result;
}

Tensor maxpool2x2_backward(const Tensor& upstream, std::span<const std::uint32_t> argmax, const Shape& input_shape) {
  if (upstream.size() != argmax.size()) {
    throw ShapeError("maxpool2x2_backward: upstream has " + std::to_string(upstream.size()) +
                     " elements but argmax has " + std::to_string(argmax.size()));
  }
  if (input_shape.size() != 4 || upstream.rank() != 4 || upstream.dim(0) != input_shape[0] ||
      upstream.dim(1) != input_shape[1] || upstream.dim(2) * 2 != input_shape[2] ||
      upstream.dim(3) * 2 != input_shape[3]) {
    throw ShapeError("maxpool2x2_backward: upstream " + to_string(upstream.shape()) + " inconsistent with input " +
                     to_string(input_shape));
  }
  Tensor grad(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) {
    if (argmax[i] >= grad.size()) throw ShapeError("maxpool2x2_backward: argmax index out of range");
    grad[argmax[i]] += upstream[i];
  }
  return grad;
}

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  require_rank(input, 2, "dense input");
  require_rank(weights, 2, "dense weights");
  const std::size_t batch = input.dim(0), f_in = input.dim(1), f_out = weights.dim(0);
  if (weights.dim(1) != f_in) {
    throw ShapeError("dense: input " + to_string(input.shape()) + " incompatible with weights " +
                     to_string(weights.shape()));
  }
  if (bias.shape() != Shape{f_out}) {
    throw ShapeError("dense: bias " + to_string(bias.shape()) + " does not match " + std::to_string(f_out) +
                     " outputs");
  }
  std::vector<float> weights_t(f_in * f_out);
  detail::transpose(f_out, f_in, weights.raw(), weights_t.data());
  Tensor out({batch, f_out});
  for (std::size_t n = 0; n < batch; ++n) std::copy(bias.raw(), bias.raw() + f_out, out.raw() + n * f_out);
  detail::gemm(false, batch, f_out, f_in, input.raw(), weights_t.data(), out.raw(), true);
  return out;
}

DenseGrads dense_backward(const Tensor& upstream, const Tensor& saved_input, const Tensor& weights,
                          GradRequest request) {
  require_rank(saved_input, 2, "dense input");
  require_rank(weights, 2, "dense weights");
  const std::size_t batch = saved_input.dim(0), f_in = saved_input.dim(1), f_out = weights.dim(0);
  if (weights.dim(1) != f_in || upstream.shape() != Shape{batch, f_out}) {
    throw ShapeError("dense_backward: upstream " + to_string(upstream.shape()) + ", input " +
                     to_string(saved_input.shape()) + ", weights " + to_string(weights.shape()) + " disagree");
  }
  DenseGrads grads;
  if (request.input) {
    grads.input = Tensor({batch, f_in});
    detail::gemm(false, batch, f_in, f_out, upstream.raw(), weights.raw(), grads.input.raw(), false);
  }
  if (request.weights) {
    grads.weights = Tensor({f_out, f_in});
    detail::gemm(true, f_out, f_in, batch, upstream.raw(), saved_input.raw(), grads.weights.raw(), false);
  }
  if (request.bias) {
    grads.bias = Tensor({f_out});
    for (std::size_t o = 0; o < f_out; ++o) {
      double sum = 0.0;
      for (std::size_t n = 0; n < batch; ++n) sum += upstream[n * f_out + o];
      grads.bias[o] = static_cast<float>(sum);
    }
  }
  return grads;
}

Tensor relu_forward(const Tensor& input) {
  Tensor out = input;
  for (auto& v : out.data()) v = v > 0.0f ? v : 0.0f;
  return out;
}

Tensor relu_backward(const Tensor& upstream, const Tensor& saved_input) {
  if (upstream.shape() != saved_input.shape()) {
    throw ShapeError("relu_backward: upstream " + to_string(upstream.shape()) + " vs input " +
                     to_string(saved_input.shape()));
  }
  Tensor grad(upstream.shape());
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = saved_input[i] > 0.0f ? upstream[i] : 0.0f;
  return grad;
}

Tensor softmax(const Tensor& logits) {
  require_rank(logits, 2, "softmax logits");
  const std::size_t rows = logits.dim(0), classes = logits.dim(1);
  Tensor probs(logits.shape());
  std::vector<double> e(classes);
  for (std::size_t r = 0; r < rows; ++r) {
    const float* z = logits.raw() + r * classes;
    const double peak = *std::max_element(z, z + classes);
    double total = 0.0;
    for (std::size_t k = 0; k < classes; ++k) total += (e[k] = std::exp(static_cast<double>(z[k]) - peak));
    for (std::size_t k = 0; k < classes; ++k) probs[r * classes + k] = static_cast<float>(e[k] / total);
  }
  return probs;
}

LossResult softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
  require_rank(logits, 2, "softmax_cross_entropy logits");
  const std::size_t rows = logits.dim(0), classes = logits.dim(1);
  if (labels.size() != rows) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(rows) + " rows");
  }
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw std::out_of_range("softmax_cross_entropy: label " + std::to_string(label) + " outside [0, " +
                              std::to_string(classes) + ")");
    }
  }
  LossResult result{0.0f, Tensor(logits.shape())};
  std::vector<double> e(classes);
  double loss = 0.0;
  const double inv_rows = 1.0 / static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const float* z = logits.raw() + r * classes;
    const double peak = *std::max_element(z, z + classes);
    double total = 0.0;
    for (std::size_t k = 0; k < classes; ++k) total += (e[k] = std::exp(static_cast<double>(z[k]) - peak));
    const auto label = static_cast<std::size_t>(labels[r]);
    loss += std::log(total) - (static_cast<double>(z[label]) - peak);
    float* g = result.grad_logits.raw() + r * classes;
    for (std::size_t k = 0; k < classes; ++k) {
      const double p = e[k] / total;
      g[k] = static_cast<float>((p - (k == label ? 1.0 : 0.0)) * inv_rows);
    }
  }
  result.loss = static_cast<float>(loss * inv_rows);
  return result;
}

}  // namespace bordernet::ops
