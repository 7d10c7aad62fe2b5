#include "bordernet/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>

namespace bordernet {
namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

struct GzCloser {
  void operator()(gzFile f) const { gzclose(f); }
};
using GzHandle = std::unique_ptr<gzFile_s, GzCloser>;

// gzread passes uncompressed files through unchanged, so one reader serves both.
std::vector<unsigned char> read_all(std::filesystem::path path) {
  if (!std::filesystem::exists(path)) {
    auto gz = path;
    gz += ".gz";
    if (std::filesystem::exists(gz)) path = gz;
  }
  GzHandle file(gzopen(path.string().c_str(), "rb"));
  if (!file) throw IdxError(IdxErrorCode::OpenFailed, "cannot open " + path.string());
  std::vector<unsigned char> bytes;
  unsigned char buf[1 << 16];
  for (;;) {
    const int n = gzread(file.get(), buf, sizeof buf);
    if (n < 0) throw IdxError(IdxErrorCode::Truncated, "corrupt compressed stream in " + path.string());
    if (n == 0) break;
    bytes.insert(bytes.end(), buf, buf + n);
  }
  return bytes;
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset, const std::string& name) {
  if (offset + 4 > bytes.size()) throw IdxError(IdxErrorCode::Truncated, name + ": truncated header");
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::ofstream& os, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                     static_cast<char>(v)};
  os.write(b, 4);
}

}  // namespace

std::uint64_t content_hash(const Tensor& images, const std::vector<int>& labels) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto eat = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  eat(images.raw(), images.size() * sizeof(float));
  for (int label : labels) {
    const auto v = static_cast<std::uint32_t>(label);
    const unsigned char le[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                 static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    eat(le, 4);
  }
  return h;
}

Dataset make_dataset(Tensor images, std::vector<int> labels, std::string split) {
  if (images.rank() != 4 || images.dim(0) != labels.size()) {
    throw ShapeError("dataset images " + to_string(images.shape()) + " do not match " +
                     std::to_string(labels.size()) + " labels");
  }
  Dataset d;
  d.content_hash = content_hash(images, labels);
  d.images = std::move(images);
  d.labels = std::move(labels);
  d.split = std::move(split);
  return d;
}

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 std::string split) {
  const auto img = read_all(images_path);
  const auto lab = read_all(labels_path);
  const std::string img_name = images_path.string(), lab_name = labels_path.string();

  if (read_be32(img, 0, img_name) != kImageMagic) {
    throw IdxError(IdxErrorCode::BadMagic, img_name + ": not an IDX image file");
  }
  if (read_be32(lab, 0, lab_name) != kLabelMagic) {
    throw IdxError(IdxErrorCode::BadMagic, lab_name + ": not an IDX label file");
  }
  const std::uint32_t count = read_be32(img, 4, img_name);
  const std::uint32_t rows = read_be32(img, 8, img_name);
  const std::uint32_t cols = read_be32(img, 12, img_name);
  const std::uint32_t label_count = read_be32(lab, 4, lab_name);
  if (rows == 0 || cols == 0 || count == 0 || rows > 4096 || cols > 4096) {
    throw IdxError(IdxErrorCode::BadDimensions, img_name + ": implausible dimensions");
  }
  if (count != label_count) {
    throw IdxError(IdxErrorCode::CountMismatch, img_name + " has " + std::to_string(count) + " images but " +
                                                    lab_name + " has " + std::to_string(label_count) + " labels");
  }
  const std::size_t pixels = std::size_t{count} * rows * cols;
  if (img.size() < 16 + pixels) throw IdxError(IdxErrorCode::Truncated, img_name + ": truncated pixel data");
  if (lab.size() < 8 + std::size_t{count}) throw IdxError(IdxErrorCode::Truncated, lab_name + ": truncated labels");

  Tensor images({count, 1, rows, cols});
  for (std::size_t i = 0; i < pixels; ++i) images[i] = static_cast<float>(img[16 + i]) / 255.0f;
  std::vector<int> labels(count);
  for (std::size_t i = 0; i < count; ++i) labels[i] = lab[8 + i];
  return make_dataset(std::move(images), std::move(labels), std::move(split));
}

Dataset load_mnist(const std::filesystem::path& dir, const std::string& split) {
  const std::string prefix = split == "train" ? "train" : split == "test" ? "t10k" : "";
  if (prefix.empty()) throw std::invalid_argument("MNIST split must be 'train' or 'test', got '" + split + "'");
  return load_idx(dir / (prefix + "-images-idx3-ubyte"), dir / (prefix + "-labels-idx1-ubyte"), split);
}

void write_idx(const Dataset& data, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path) {
  std::ofstream img(images_path, std::ios::binary);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!img || !lab) throw IdxError(IdxErrorCode::WriteFailed, "cannot write IDX output");
  const auto n = static_cast<std::uint32_t>(data.size());
  put_be32(img, kImageMagic);
  put_be32(img, n);
  put_be32(img, static_cast<std::uint32_t>(data.height()));
  put_be32(img, static_cast<std::uint32_t>(data.width()));
  std::vector<char> bytes(data.images.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const float v = std::clamp(data.images[i], 0.0f, 1.0f);
    bytes[i] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0f)));
  }
  img.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  put_be32(lab, kLabelMagic);
  put_be32(lab, n);
  for (int label : data.labels) lab.put(static_cast<char>(label));
  if (!img || !lab) throw IdxError(IdxErrorCode::WriteFailed, "short write on IDX output");
}

Dataset slice(const Dataset& data, std::size_t first, std::size_t count) {
  if (first + count > data.size() || count == 0) throw std::out_of_range("dataset slice out of range");
  const std::size_t plane = data.images.size() / data.size();
  Shape shape = data.images.shape();
  shape[0] = count;
  std::vector<float> px(data.images.raw() + first * plane, data.images.raw() + (first + count) * plane);
  std::vector<int> labels(data.labels.begin() + static_cast<std::ptrdiff_t>(first),
                          data.labels.begin() + static_cast<std::ptrdiff_t>(first + count));
  Dataset out = make_dataset(Tensor(std::move(shape), std::move(px)), std::move(labels), data.split);
  out.occlusion = data.occlusion;
  return out;
}

}  // namespace bordernet
