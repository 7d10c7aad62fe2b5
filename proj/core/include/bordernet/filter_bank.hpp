#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "bordernet/tensor.hpp"

namespace bordernet {

enum class Orientation { Horizontal, Vertical, DiagonalMain, DiagonalAnti };
enum class FilterKind { Oriented, Random };
enum class FilterNormalization { RawOnes, L1Normalized };

inline constexpr std::array<Orientation, 4> kOrientations = {Orientation::Horizontal, Orientation::Vertical,
                                                             Orientation::DiagonalMain, Orientation::DiagonalAnti};
inline constexpr std::size_t kFilterSize = 7;
inline constexpr std::size_t kStripeWidth = 3;

std::string_view to_string(Orientation o);
std::string_view to_string(FilterKind k);
std::string_view to_string(FilterNormalization n);

/// Binary stripe filter of shape [size,size] centred on the middle pixel.
/// Diagonal stripes are bands |r-c| <= (width-1)/2 (anti: |r+c-(size-1)|).
/// Throws std::invalid_argument for an even size or stripe_width > size.
Tensor make_oriented_filter(Orientation orientation, std::size_t size = kFilterSize,
                            std::size_t stripe_width = kStripeWidth);

/// Four 7x7 kernels, each stored as [1,1,7,7] so they plug straight into conv2d.
struct FilterBank {
  std::array<Tensor, 4> kernels;
  FilterKind kind = FilterKind::Oriented;
  std::optional<std::uint64_t> seed;
  FilterNormalization normalization = FilterNormalization::RawOnes;

  friend bool operator==(const FilterBank&, const FilterBank&) = default;
};

/// Oriented bank in the order horizontal, vertical, diagonal-main, diagonal-anti.
FilterBank make_oriented_filter_bank();

/// Entries i.i.d. uniform on [0,1); kernel k is drawn from Rng(seed, k).
FilterBank make_random_filter_bank(std::uint64_t seed);

/// Divide each kernel by its L1 norm. Throws std::domain_error on an all-zero kernel.
FilterBank normalize_l1(const FilterBank& bank);

/// Text form: header lines then 7 rows of 7 values per kernel, floats as C99 hex so it round-trips exactly.
void write_filter_bank(std::ostream& os, const FilterBank& bank);
FilterBank read_filter_bank(std::istream& is);

/// Human-readable grid of one kernel (decimal, one row per line).
std::string format_kernel(const Tensor& kernel);

}  // namespace bordernet
