#include "bordernet/filter_bank.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "bordernet/rng.hpp"

namespace bordernet {

std::string_view to_string(Orientation o) {
  switch (o) {
    case Orientation::Horizontal: return "horizontal";
    case Orientation::Vertical: return "vertical";
    case Orientation::DiagonalMain: return "diagonal_main";
    case Orientation::DiagonalAnti: return "diagonal_anti";
  }
  return "?";
}

std::string_view to_string(FilterKind k) { return k == FilterKind::Oriented ? "oriented" : "random"; }

std::string_view to_string(FilterNormalization n) {
  return n == FilterNormalization::RawOnes ? "raw" : "l1";
}

Tensor make_oriented_filter(Orientation orientation, std::size_t size, std::size_t stripe_width) {
  if (size == 0 || size % 2 == 0) throw std::invalid_argument("oriented filter size must be odd and positive");
  if (stripe_width == 0 || stripe_width > size) {
    throw std::invalid_argument("stripe width must lie in [1, size]");
  }
  const auto n = static_cast<long>(size);
  const long centre = (n - 1) / 2;
  const long half = (static_cast<long>(stripe_width) - 1) / 2;
  Tensor filter({size, size});
  for (long r = 0; r < n; ++r) {
    for (long c = 0; c < n; ++c) {
      long dist = 0;
      switch (orientation) {
        case Orientation::Horizontal: dist = std::labs(r - centre); break;
        case Orientation::Vertical: dist = std::labs(c - centre); break;
        case Orientation::DiagonalMain: dist = std::labs(r - c); break;
        case Orientation::DiagonalAnti: dist = std::labs(r + c - (n - 1)); break;
      }
      if (dist <= half) filter[static_cast<std::size_t>(r * n + c)] = 1.0f;
    }
  }
  return filter;
}

FilterBank make_oriented_filter_bank() {
  FilterBank bank;
  for (std::size_t k = 0; k < 4; ++k) {
    bank.kernels[k] = make_oriented_filter(kOrientations[k]).reshaped({1, 1, kFilterSize, kFilterSize});
  }
  bank.kind = FilterKind::Oriented;
  return bank;
}

FilterBank make_random_filter_bank(std::uint64_t seed) {
  FilterBank bank;
  for (std::size_t k = 0; k < 4; ++k) {
    Rng rng(seed, k);
    Tensor kernel({1, 1, kFilterSize, kFilterSize});
    for (auto& v : kernel.data()) v = rng.uniform01();
    bank.kernels[k] = std::move(kernel);
  }
  bank.kind = FilterKind::Random;
  bank.seed = seed;
  return bank;
}

FilterBank normalize_l1(const FilterBank& bank) {
  FilterBank out = bank;
  for (auto& kernel : out.kernels) {
    double l1 = 0.0;
    for (float v : kernel.data()) l1 += std::fabs(v);
    if (l1 == 0.0) throw std::domain_error("normalize_l1: kernel has zero L1 norm");
    for (auto& v : kernel.data()) v = static_cast<float>(v / l1);
  }
  out.normalization = FilterNormalization::L1Normalized;
  return out;
}

void write_filter_bank(std::ostream& os, const FilterBank& bank) {
  os << "filterbank 1\n";
  os << "kind " << to_string(bank.kind) << '\n';
  os << "normalization " << to_string(bank.normalization) << '\n';
  os << "seed " << (bank.seed ? std::to_string(*bank.seed) : std::string("none")) << '\n';
  char buf[32];
  for (std::size_t k = 0; k < 4; ++k) {
    os << "kernel " << k << '\n';
    const Tensor& kernel = bank.kernels[k];
    for (std::size_t r = 0; r < kFilterSize; ++r) {
      for (std::size_t c = 0; c < kFilterSize; ++c) {
        std::snprintf(buf, sizeof buf, "%a", static_cast<double>(kernel[r * kFilterSize + c]));
        os << (c ? " " : "") << buf;
      }
      os << '\n';
    }
  }
}

FilterBank read_filter_bank(std::istream& is) {
  auto fail = [](const std::string& why) { return std::runtime_error("filter bank parse error: " + why); };
  std::string key, value;
  int version = 0;
  if (!(is >> key >> version) || key != "filterbank" || version != 1) throw fail("bad header");
  FilterBank bank;
  if (!(is >> key >> value) || key != "kind") throw fail("missing kind");
  if (value == "oriented") bank.kind = FilterKind::Oriented;
  else if (value == "random") bank.kind = FilterKind::Random;
  else throw fail("unknown kind '" + value + "'");
  if (!(is >> key >> value) || key != "normalization") throw fail("missing normalization");
  if (value == "raw") bank.normalization = FilterNormalization::RawOnes;
  else if (value == "l1") bank.normalization = FilterNormalization::L1Normalized;
  else throw fail("unknown normalization '" + value + "'");
  if (!(is >> key >> value) || key != "seed") throw fail("missing seed");
  if (value != "none") bank.seed = std::stoull(value);
  for (std::size_t k = 0; k < 4; ++k) {
    std::size_t index = 0;
    if (!(is >> key >> index) || key != "kernel" || index != k) throw fail("expected kernel " + std::to_string(k));
    Tensor kernel({1, 1, kFilterSize, kFilterSize});
    for (auto& v : kernel.data()) {
      if (!(is >> value)) throw fail("truncated kernel " + std::to_string(k));
      char* end = nullptr;
      v = static_cast<float>(std::strtod(value.c_str(), &end));
      if (end == value.c_str() || *end != '\0') throw fail("bad number '" + value + "'");
    }
    bank.kernels[k] = std::move(kernel);
  }
  return bank;
}

std::string format_kernel(const Tensor& kernel) {
  const std::size_t side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(kernel.size()))));
  if (side * side != kernel.size()) throw ShapeError("format_kernel: kernel is not square");
  std::ostringstream os;
  char buf[32];
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      std::snprintf(buf, sizeof buf, "%.6f", static_cast<double>(kernel[r * side + c]));
      os << (c ? " " : "") << buf;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace bordernet
