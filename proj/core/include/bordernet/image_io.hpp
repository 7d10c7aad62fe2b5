#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>

#include "bordernet/tensor.hpp"

namespace bordernet {

/// Binary PGM (P5). Values are mapped linearly from [lo, hi] to [0, 255] and
/// clamped; lo == hi renders a uniform mid-grey image.
void write_pgm(std::ostream& os, std::span<const float> values, std::size_t height, std::size_t width, float lo,
               float hi);
void write_pgm(const std::filesystem::path& path, std::span<const float> values, std::size_t height,
               std::size_t width, float lo, float hi);

/// Reads a binary (P5) or ASCII (P2) graymap into [H,W] scaled to [0,1] by maxval.
Tensor read_pgm(std::istream& is);
Tensor read_pgm(const std::filesystem::path& path);

}  // namespace bordernet
