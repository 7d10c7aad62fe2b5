#include "bordernet/orientation_map.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace bordernet {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap(double angle) {
  double a = std::fmod(angle, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  // + 0.0 turns -0 into +0
  return a >= kTwoPi ? 0.0 : a + 0.0;
}

void require_same_shape(const GradientField& grad) {
  if (grad.ix.rank() != 2 || grad.ix.shape() != grad.iy.shape()) {
    throw ShapeError("gradient field components must be matching [H,W] tensors");
  }
}

}  // namespace

GradientField gradient(const Tensor& image, GradientScheme scheme) {
  if (image.rank() != 2 || image.dim(0) < 3 || image.dim(1) < 3) {
    throw ShapeError("gradient: image must be [H,W] with H,W >= 3, got " + to_string(image.shape()));
  }
  const std::size_t h = image.dim(0), w = image.dim(1);
  GradientField g{Tensor(image.shape()), Tensor(image.shape())};
  auto px = [&](std::size_t r, std::size_t c) { return static_cast<double>(image[r * w + c]); };

  if (scheme == GradientScheme::Central) {
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        double dx, dy;
        if (c == 0) dx = px(r, 1) - px(r, 0);
        else if (c == w - 1) dx = px(r, c) - px(r, c - 1);
        else dx = 0.5 * (px(r, c + 1) - px(r, c - 1));
        // y grows as row index falls
        if (r == 0) dy = px(0, c) - px(1, c);
        else if (r == h - 1) dy = px(r - 1, c) - px(r, c);
        else dy = 0.5 * (px(r - 1, c) - px(r + 1, c));
        g.ix[r * w + c] = static_cast<float>(dx);
        g.iy[r * w + c] = static_cast<float>(dy);
      }
    }
    return g;
  }

  auto clamped = [&](long r, long c) {
    r = std::clamp(r, 0L, static_cast<long>(h) - 1);
    c = std::clamp(c, 0L, static_cast<long>(w) - 1);
    return px(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  };
  for (long r = 0; r < static_cast<long>(h); ++r) {
    for (long c = 0; c < static_cast<long>(w); ++c) {
      const double dx = (clamped(r - 1, c + 1) + 2.0 * clamped(r, c + 1) + clamped(r + 1, c + 1)) -
                        (clamped(r - 1, c - 1) + 2.0 * clamped(r, c - 1) + clamped(r + 1, c - 1));
      const double dy = (clamped(r - 1, c - 1) + 2.0 * clamped(r - 1, c) + clamped(r - 1, c + 1)) -
                        (clamped(r + 1, c - 1) + 2.0 * clamped(r + 1, c) + clamped(r + 1, c + 1));
      const auto i = static_cast<std::size_t>(r) * w + static_cast<std::size_t>(c);
      g.ix[i] = static_cast<float>(dx / 8.0);
      g.iy[i] = static_cast<float>(dy / 8.0);
    }
  }
  return g;
}

Tensor z_response(const GradientField& grad, double theta) {
  require_same_shape(grad);
  const double s = std::sin(theta), c = std::cos(theta);
  Tensor out(grad.ix.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(-s * grad.ix[i] + c * grad.iy[i]);
  }
  return out;
}

std::size_t OrientationMap::regular_count() const {
  return static_cast<std::size_t>(std::count(regular.begin(), regular.end(), std::uint8_t{1}));
}

double orientation_closed_form(double ix, double iy) { return wrap(std::atan2(-ix, iy)); }

std::size_t orientation_bruteforce(double ix, double iy, std::size_t n_angles) {
  if (n_angles == 0) throw std::invalid_argument("orientation_bruteforce: need at least one angle");
  std::size_t best = 0;
  double best_value = -INFINITY;
  for (std::size_t k = 0; k < n_angles; ++k) {
    const double theta = kTwoPi * static_cast<double>(k) / static_cast<double>(n_angles);
    const double value = -std::sin(theta) * ix + std::cos(theta) * iy;
    if (value > best_value) {
      best_value = value;
      best = k;
    }
  }
  return best;
}

namespace {

template <class Solver>
OrientationMap build_map(const GradientField& grad, double eps_reg, Solver solve) {
  require_same_shape(grad);
  OrientationMap map{Tensor(grad.ix.shape()), std::vector<std::uint8_t>(grad.ix.size(), 0)};
  for (std::size_t i = 0; i < grad.ix.size(); ++i) {
    const double ix = grad.ix[i], iy = grad.iy[i];
    if (std::hypot(ix, iy) <= eps_reg) continue;
    map.regular[i] = 1;
    const auto theta = static_cast<float>(solve(ix, iy));
    // float rounding can land exactly on 2pi, which belongs to 0
    map.theta[i] = static_cast<double>(theta) >= kTwoPi ? 0.0f : theta;
  }
  return map;
}

}  // namespace

OrientationMap orientation_map_closed_form(const GradientField& grad, double eps_reg) {
  return build_map(grad, eps_reg, [](double ix, double iy) { return orientation_closed_form(ix, iy); });
}

OrientationMap orientation_map_bruteforce(const GradientField& grad, std::size_t n_angles, double eps_reg) {
  if (n_angles == 0) throw std::invalid_argument("orientation_map_bruteforce: need at least one angle");
  return build_map(grad, eps_reg, [n_angles](double ix, double iy) {
    return kTwoPi * static_cast<double>(orientation_bruteforce(ix, iy, n_angles)) / static_cast<double>(n_angles);
  });
}

double angular_distance(double a, double b) {
  const double d = wrap(a - b);
  return std::min(d, kTwoPi - d);
}

void write_orientation_csv(std::ostream& os, const OrientationMap& map) {
  os << "row,col,theta\n";
  const std::size_t w = map.width();
  char buf[64];
  for (std::size_t i = 0; i < map.theta.size(); ++i) {
    if (!map.regular[i]) continue;
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.9g\n", i / w, i % w, static_cast<double>(map.theta[i]));
    os << buf;
  }
}

void write_orientation_ppm(std::ostream& os, const OrientationMap& map) {
  os << "P6\n" << map.width() << ' ' << map.height() << "\n255\n";
  for (std::size_t i = 0; i < map.theta.size(); ++i) {
    unsigned char rgb[3] = {0, 0, 0};
    if (map.regular[i]) {
      const double hue = static_cast<double>(map.theta[i]) / kTwoPi * 6.0;
      const int sector = static_cast<int>(hue) % 6;
      const double f = hue - std::floor(hue);
      const auto up = static_cast<unsigned char>(std::lround(255.0 * f));
      const auto down = static_cast<unsigned char>(std::lround(255.0 * (1.0 - f)));
      switch (sector) {
        case 0: rgb[0] = 255; rgb[1] = up; break;
        case 1: rgb[0] = down; rgb[1] = 255; break;
        case 2: rgb[1] = 255; rgb[2] = up; break;
        case 3: rgb[1] = down; rgb[2] = 255; break;
        case 4: rgb[0] = up; rgb[2] = 255; break;
        default: rgb[0] = 255; rgb[2] = down; break;
      }
    }
    os.write(reinterpret_cast<const char*>(rgb), 3);
  }
}

}  // namespace bordernet
