#include "bordernet/occlusion.hpp"

#include <stdexcept>

#include "bordernet/dataset.hpp"

namespace bordernet {

void OcclusionSpec::validate() const {
  if (width < 1 || spacing < 1) {
    throw std::invalid_argument("occlusion stripe width and spacing must be >= 1, got w=" + std::to_string(width) +
                                " s=" + std::to_string(spacing));
  }
}

std::string OcclusionSpec::label() const {
  std::string out = "w" + std::to_string(width) + "_s" + std::to_string(spacing);
  if (direction == StripeDirection::Main) out += "_main";
  if (phase != 0) out += "_p" + std::to_string(phase);
  return out;
}

std::vector<std::uint8_t> occlusion_mask(const OcclusionSpec& spec, std::size_t height, std::size_t width) {
  spec.validate();
  const long period = static_cast<long>(spec.width) + spec.spacing;
  std::vector<std::uint8_t> mask(height * width, 0);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const long rr = static_cast<long>(r), cc = static_cast<long>(c);
      const long d = (spec.direction == StripeDirection::Anti ? rr + cc : rr - cc) + spec.phase;
      const long residue = ((d % period) + period) % period;
      mask[r * width + c] = residue < spec.width ? 1 : 0;
    }
  }
  return mask;
}

Dataset apply_occlusion(const Dataset& data, const OcclusionSpec& spec) {
  const auto mask = occlusion_mask(spec, data.height(), data.width());
  Dataset out = data;
  const std::size_t plane = mask.size();
  const std::size_t planes = out.images.size() / plane;
  float* px = out.images.raw();
  for (std::size_t p = 0; p < planes; ++p, px += plane) {
    for (std::size_t i = 0; i < plane; ++i) {
      if (mask[i]) px[i] = 0.0f;
    }
  }
  out.occlusion = spec;
  out.content_hash = content_hash(out.images, out.labels);
  return out;
}

std::vector<OcclusionSpec> occlusion_grid(int w_min, int w_max, int s_min, int s_max, StripeDirection direction) {
  std::vector<OcclusionSpec> grid;
  for (int w = w_min; w <= w_max; ++w) {
    for (int s = s_min; s <= s_max; ++s) {
      OcclusionSpec spec{w, s, direction, 0};
      spec.validate();
      grid.push_back(spec);
    }
  }
  return grid;
}

}  // namespace bordernet
