#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bordernet {

struct Dataset;

/// Anti stripes follow r + c (they run bottom-left to top-right), Main stripes follow r - c.
enum class StripeDirection { Anti, Main };

struct OcclusionSpec {
  int width = 1;    // w, occluded band thickness in diagonal steps
  int spacing = 1;  // s, clear band between stripes
  StripeDirection direction = StripeDirection::Anti;
  int phase = 0;

  /// Throws std::invalid_argument if width or spacing is below 1.
  void validate() const;
  std::string label() const;

  friend bool operator==(const OcclusionSpec&, const OcclusionSpec&) = default;
};

/// Row-major [height*width] mask; 1 marks an occluded pixel:
/// ((r + c + phase) mod (w + s)) < w for Anti, with r - c for Main (non-negative residue).
std::vector<std::uint8_t> occlusion_mask(const OcclusionSpec& spec, std::size_t height, std::size_t width);

/// Copy of `data` with every masked pixel set to 0 (black). Labels are untouched.
Dataset apply_occlusion(const Dataset& data, const OcclusionSpec& spec);

/// All (w, s) combinations, w outer and s inner.
std::vector<OcclusionSpec> occlusion_grid(int w_min = 1, int w_max = 10, int s_min = 1, int s_max = 10,
                                          StripeDirection direction = StripeDirection::Anti);

}  // namespace bordernet
