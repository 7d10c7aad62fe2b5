#include "bordernet/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace bordernet {

void write_pgm(std::ostream& os, std::span<const float> values, std::size_t height, std::size_t width, float lo,
               float hi) {
  if (values.size() != height * width) throw std::invalid_argument("write_pgm: value count does not match size");
  os << "P5\n" << width << ' ' << height << "\n255\n";
  std::vector<unsigned char> px(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    double level = 127.0;
    if (hi > lo) level = 255.0 * (static_cast<double>(values[i]) - lo) / (static_cast<double>(hi) - lo);
    px[i] = static_cast<unsigned char>(std::lround(std::clamp(level, 0.0, 255.0)));
  }
  os.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
}

void write_pgm(const std::filesystem::path& path, std::span<const float> values, std::size_t height,
               std::size_t width, float lo, float hi) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write_pgm(os, values, height, width, lo, hi);
  if (!os) throw std::runtime_error("short write on " + path.string());
}

namespace {

// Next header token, skipping whitespace and '#' comments.
std::size_t header_number(std::istream& is) {
  for (;;) {
    const int c = is.peek();
    if (c == '#') {
      std::string comment;
      std::getline(is, comment);
    } else if (std::isspace(c)) {
      is.get();
    } else {
      break;
    }
  }
  long value = -1;
  if (!(is >> value) || value <= 0) throw std::runtime_error("read_pgm: malformed header");
  return static_cast<std::size_t>(value);
}

}  // namespace

Tensor read_pgm(std::istream& is) {
  char magic[2] = {};
  if (!is.read(magic, 2) || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '2')) {
    throw std::runtime_error("read_pgm: not a P5/P2 graymap");
  }
  const std::size_t width = header_number(is), height = header_number(is), maxval = header_number(is);
  if (maxval > 65535) throw std::runtime_error("read_pgm: maxval out of range");
  Tensor image({height, width});
  if (magic[1] == '2') {
    for (auto& v : image.data()) {
      long level = -1;
      if (!(is >> level) || level < 0 || static_cast<std::size_t>(level) > maxval) {
        throw std::runtime_error("read_pgm: bad pixel");
      }
      v = static_cast<float>(static_cast<double>(level) / static_cast<double>(maxval));
    }
    return image;
  }
  is.get();  // single whitespace after maxval
  const std::size_t bytes = maxval < 256 ? 1 : 2;
  std::vector<unsigned char> raw(image.size() * bytes);
  if (!is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw std::runtime_error("read_pgm: truncated pixel data");
  }
  for (std::size_t i = 0; i < image.size(); ++i) {
    const unsigned level = bytes == 1 ? raw[i] : (unsigned{raw[2 * i]} << 8) | raw[2 * i + 1];
    image[i] = static_cast<float>(static_cast<double>(level) / static_cast<double>(maxval));
  }
  return image;
}

Tensor read_pgm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  return read_pgm(is);
}

}  // namespace bordernet
