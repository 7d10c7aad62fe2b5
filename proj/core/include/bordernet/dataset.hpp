#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bordernet/occlusion.hpp"
#include "bordernet/tensor.hpp"

namespace bordernet {

enum class IdxErrorCode { OpenFailed, BadMagic, Truncated, CountMismatch, BadDimensions, WriteFailed };

class IdxError : public std::runtime_error {
 public:
  IdxError(IdxErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  IdxErrorCode code() const noexcept { return code_; }

 private:
  IdxErrorCode code_;
};

/// Images [N,1,H,W] scaled to [0,1] with integer labels. `occlusion` records
/// provenance: a dataset produced by apply_occlusion carries its spec.
struct Dataset {
  Tensor images;
  std::vector<int> labels;
  std::string split;
  std::optional<OcclusionSpec> occlusion;
  std::uint64_t content_hash = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t height() const { return images.dim(2); }
  std::size_t width() const { return images.dim(3); }
};

/// FNV-1a over the float bit patterns of the images followed by the labels.
std::uint64_t content_hash(const Tensor& images, const std::vector<int>& labels);

/// Builds a dataset and fills its content hash. Throws ShapeError on inconsistent sizes.
Dataset make_dataset(Tensor images, std::vector<int> labels, std::string split);

/// Reads an IDX image file (magic 0x00000803) and label file (0x00000801).
/// Either file may be gzip-compressed; if `path` is missing, `path.gz` is tried.
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 std::string split);

/// Standard MNIST file names inside `dir`: split is "train" or "test".
Dataset load_mnist(const std::filesystem::path& dir, const std::string& split);

/// Writes uncompressed IDX files; pixels are rounded from [0,1] back to bytes.
void write_idx(const Dataset& data, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path);

/// Contiguous slice [first, first+count) sharing the provenance of `data`.
Dataset slice(const Dataset& data, std::size_t first, std::size_t count);

}  // namespace bordernet
