#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "bordernet/tensor.hpp"

namespace bordernet {

// Pixel convention: a [H,W] image is indexed [row][col] with row 0 at the top.
// Continuous coordinates are x = col (rightward) and y = H-1-row (upward), so
// the partial derivative along y is positive when intensity grows towards
// the top of the image.

enum class GradientScheme {
  Central,  // central differences inside, one-sided on the border
  Sobel,    // 3x3 Sobel scaled by 1/8 (exact on linear ramps), replicated border
};

struct GradientField {
  Tensor ix;
  Tensor iy;
};

/// Throws ShapeError for images that are not rank 2 or smaller than 3x3.
GradientField gradient(const Tensor& image, GradientScheme scheme = GradientScheme::Central);

/// Directional response -sin(theta) * ix + cos(theta) * iy at every pixel.
Tensor z_response(const GradientField& grad, double theta);

inline constexpr double kRegularityThreshold = 1e-6;

struct OrientationMap {
  /// Angles in [0, 2pi); 0 wherever the point is irregular.
  Tensor theta;
  /// 1 where the gradient magnitude exceeds the regularity threshold.
  std::vector<std::uint8_t> regular;

  std::size_t height() const { return theta.dim(0); }
  std::size_t width() const { return theta.dim(1); }
  std::size_t regular_count() const;
};

/// Maximiser of the directional response, atan2(-ix, iy) wrapped to [0, 2pi).
double orientation_closed_form(double ix, double iy);

/// Index of the best of `n_angles` equally spaced angles k*2pi/n; ties keep the smallest k.
std::size_t orientation_bruteforce(double ix, double iy, std::size_t n_angles);

OrientationMap orientation_map_closed_form(const GradientField& grad, double eps_reg = kRegularityThreshold);
OrientationMap orientation_map_bruteforce(const GradientField& grad, std::size_t n_angles,
                                          double eps_reg = kRegularityThreshold);

/// Shortest distance between two angles on the circle.
double angular_distance(double a, double b);

/// One "row,col,theta" line per regular point, with header.
void write_orientation_csv(std::ostream& os, const OrientationMap& map);

/// Binary PPM: hue = theta, full saturation, value 1 on regular points and 0 elsewhere.
void write_orientation_ppm(std::ostream& os, const OrientationMap& map);

}  // namespace bordernet
