#pragma once

// Reference implementations used only by tests. None of this shares code
// with the library paths it checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "bordernet/rng.hpp"
#include "bordernet/tensor.hpp"

namespace bordernet::testing {

inline Tensor random_tensor(Rng& rng, Shape shape, float lo = -1.0f, float hi = 1.0f) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

/// Convolution straight from the definition, accumulated in double.
inline Tensor conv2d_reference(const Tensor& x, const Tensor& k, const Tensor* bias, std::size_t pad) {
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t O = k.dim(0), KH = k.dim(2), KW = k.dim(3);
  const std::size_t OH = H + 2 * pad - KH + 1, OW = W + 2 * pad - KW + 1;
  Tensor y({N, O, OH, OW});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t oy = 0; oy < OH; ++oy)
        for (std::size_t ox = 0; ox < OW; ++ox) {
          double acc = bias ? (*bias)[o] : 0.0;
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t i = 0; i < KH; ++i)
              for (std::size_t j = 0; j < KW; ++j) {
                const long yy = static_cast<long>(oy + i) - static_cast<long>(pad);
                const long xx = static_cast<long>(ox + j) - static_cast<long>(pad);
                if (yy < 0 || xx < 0 || yy >= static_cast<long>(H) || xx >= static_cast<long>(W)) continue;
                acc += static_cast<double>(x.at({n, c, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx)})) *
                       k.at({o, c, i, j});
              }
          y.at({n, o, oy, ox}) = static_cast<float>(acc);
        }
  return y;
}

/// Projection of a tensor onto fixed random weights; turns any layer output into a scalar loss.
inline double project(const Tensor& y, const Tensor& weights) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += static_cast<double>(y[i]) * weights[i];
  return s;
}

/// Mean softmax cross-entropy in double, log-sum-exp with the row max removed.
inline double cross_entropy_reference(const Tensor& logits, const std::vector<int>& labels) {
  const std::size_t N = logits.dim(0), K = logits.dim(1);
  double total = 0.0;
  for (std::size_t r = 0; r < N; ++r) {
    double m = logits.at({r, 0});
    for (std::size_t k = 1; k < K; ++k) m = std::max(m, static_cast<double>(logits.at({r, k})));
    double sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) sum += std::exp(logits.at({r, k}) - m);
    total += m + std::log(sum) - logits.at({r, static_cast<std::size_t>(labels[r])});
  }
  return total / static_cast<double>(N);
}

/// Central difference of `loss` w.r.t. the float `x`, using the step actually
/// representable in float.
inline double central_difference(float& x, float h, const std::function<double()>& loss) {
  const float saved = x;
  const float plus = saved + h;
  const float minus = saved - h;
  x = plus;
  const double f_plus = loss();
  x = minus;
  const double f_minus = loss();
  x = saved;
  return (f_plus - f_minus) / (static_cast<double>(plus) - static_cast<double>(minus));
}

/// Relative error below `rel`, or absolute error below the floor.
inline bool gradient_matches(double analytic, double numeric, double rel = 1e-3, double abs_floor = 1e-5) {
  const double diff = std::fabs(analytic - numeric);
  return diff <= abs_floor || diff <= rel * std::max(std::fabs(analytic), std::fabs(numeric));
}

struct GradCheck {
  std::size_t checked = 0;
  std::size_t failed = 0;
  double worst_rel = 0.0;

  void record(double analytic, double numeric) {
    ++checked;
    if (!gradient_matches(analytic, numeric)) ++failed;
    const double scale = std::max({std::fabs(analytic), std::fabs(numeric), 1e-5});
    worst_rel = std::max(worst_rel, std::fabs(analytic - numeric) / scale);
  }
  bool ok() const { return checked > 0 && failed == 0; }
};

/// Compares every entry of `analytic` against central differences on `wrt`.
inline void check_gradient(GradCheck& check, Tensor& wrt, const Tensor& analytic, const std::function<double()>& loss,
                           float h = 1e-3f) {
  for (std::size_t i = 0; i < wrt.size(); ++i) {
    const double numeric = central_difference(wrt[i], h, loss);
    check.record(analytic[i], numeric);
  }
}

/// Brute-force occluded-pixel count straight from the stripe rule.
inline std::size_t occluded_count_reference(int w, int s, bool anti, int phase, std::size_t height, std::size_t width) {
  std::size_t count = 0;
  for (long r = 0; r < static_cast<long>(height); ++r)
    for (long c = 0; c < static_cast<long>(width); ++c) {
      long d = (anti ? r + c : r - c) + phase;
      const long period = w + s;
      while (d < 0) d += period;
      if (d % period < w) ++count;
    }
  return count;
}

}  // namespace bordernet::testing
