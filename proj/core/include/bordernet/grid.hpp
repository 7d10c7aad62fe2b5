#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "bordernet/dataset.hpp"
#include "bordernet/network.hpp"
#include "bordernet/occlusion.hpp"

namespace bordernet {

inline constexpr int kGridSide = 10;

/// Test accuracy for every (w, s) in [1,10]^2. Also used for difference grids.
struct AccuracyGrid {
  std::array<std::array<double, kGridSide>, kGridSide> values{};  // [w-1][s-1]
  std::string model_id;
  std::uint64_t seed = 0;
  std::uint64_t dataset_hash = 0;
  std::string timestamp;
  std::optional<double> clean_accuracy;

  double& at(int w, int s) { return values.at(static_cast<std::size_t>(w - 1)).at(static_cast<std::size_t>(s - 1)); }
  double at(int w, int s) const {
    return values.at(static_cast<std::size_t>(w - 1)).at(static_cast<std::size_t>(s - 1));
  }
};

/// Accuracy of `net` on each occluded copy of the clean test set. Cells are
/// spread over `workers` threads and merged by index, so the result does not
/// depend on the worker count.
AccuracyGrid evaluate_grid(const Network& net, const Dataset& clean_test, std::string model_id,
                           std::size_t workers = 1, StripeDirection direction = StripeDirection::Anti);

/// Elementwise a - b; model_id becomes "a-b".
AccuracyGrid diff_grid(const AccuracyGrid& a, const AccuracyGrid& b);

/// Mean over cells with w <= s (mild) or w > s (severe).
double mean_over_mild(const AccuracyGrid& g);
double mean_over_severe(const AccuracyGrid& g);

/// "w\s,1,...,10" header, then one row per w with six decimals. Holds values only.
void export_csv(const AccuracyGrid& grid, const std::filesystem::path& path);
AccuracyGrid read_csv(const std::filesystem::path& path);

/// key = value metadata (model id, seed, dataset hash, timestamp, clean accuracy).
void export_metadata(const AccuracyGrid& grid, const std::filesystem::path& path);
/// Fills the metadata fields of `grid` from a file written by export_metadata.
void read_metadata(AccuracyGrid& grid, const std::filesystem::path& path);

/// 10x10 PGM, [min,max] mapped to [0,255]; the mapping goes to `path` + ".txt".
void export_heatmap_pgm(const AccuracyGrid& grid, const std::filesystem::path& path);

std::string utc_timestamp();

}  // namespace bordernet
