#include "bordernet/grid.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "bordernet/image_io.hpp"
#include "bordernet/training.hpp"

namespace bordernet {
namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

}  // namespace

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

AccuracyGrid evaluate_grid(const Network& net, const Dataset& clean_test, std::string model_id, std::size_t workers,
                           StripeDirection direction) {
  if (clean_test.occlusion) throw std::invalid_argument("evaluate_grid expects the clean test set");
  const auto specs = occlusion_grid(1, kGridSide, 1, kGridSide, direction);
  std::vector<double> results(specs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < specs.size(); i = next++) {
      results[i] = evaluate(net, apply_occlusion(clean_test, specs[i]));
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, specs.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  AccuracyGrid grid;
  for (std::size_t i = 0; i < specs.size(); ++i) grid.at(specs[i].width, specs[i].spacing) = results[i];
  grid.model_id = std::move(model_id);
  grid.seed = net.spec().seed;
  grid.dataset_hash = clean_test.content_hash;
  grid.timestamp = utc_timestamp();
  grid.clean_accuracy = evaluate(net, clean_test);
  return grid;
}

AccuracyGrid diff_grid(const AccuracyGrid& a, const AccuracyGrid& b) {
  AccuracyGrid d;
  for (int w = 1; w <= kGridSide; ++w) {
    for (int s = 1; s <= kGridSide; ++s) d.at(w, s) = a.at(w, s) - b.at(w, s);
  }
  d.model_id = a.model_id + "-" + b.model_id;
  d.seed = a.seed;
  d.dataset_hash = a.dataset_hash;
  d.timestamp = utc_timestamp();
  if (a.clean_accuracy && b.clean_accuracy) d.clean_accuracy = *a.clean_accuracy - *b.clean_accuracy;
  return d;
}

double mean_over_mild(const AccuracyGrid& g) {
  double sum = 0.0;
  int n = 0;
  for (int w = 1; w <= kGridSide; ++w) {
    for (int s = w; s <= kGridSide; ++s, ++n) sum += g.at(w, s);
  }
  return sum / n;
}

double mean_over_severe(const AccuracyGrid& g) {
  double sum = 0.0;
  int n = 0;
  for (int w = 2; w <= kGridSide; ++w) {
    for (int s = 1; s < w; ++s, ++n) sum += g.at(w, s);
  }
  return sum / n;
}

void export_csv(const AccuracyGrid& grid, const std::filesystem::path& path) {
  auto os = open_out(path);
  os << "w\\s";
  for (int s = 1; s <= kGridSide; ++s) os << ',' << s;
  os << '\n';
  char buf[32];
  for (int w = 1; w <= kGridSide; ++w) {
    os << w;
    for (int s = 1; s <= kGridSide; ++s) {
      std::snprintf(buf, sizeof buf, "%.6f", grid.at(w, s));
      os << ',' << buf;
    }
    os << '\n';
  }
  if (!os) throw std::runtime_error("short write on " + path.string());
}

AccuracyGrid read_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  auto fail = [&](const std::string& why) { return std::runtime_error(path.string() + ": " + why); };
  std::string line;
  if (!std::getline(is, line) || line.rfind("w\\s,", 0) != 0) throw fail("missing 'w\\s' header");
  AccuracyGrid grid;
  for (int w = 1; w <= kGridSide; ++w) {
    if (!std::getline(is, line)) throw fail("expected " + std::to_string(kGridSide) + " data rows");
    std::istringstream row(line);
    std::string cell;
    if (!std::getline(row, cell, ',') || std::stoi(cell) != w) throw fail("row " + std::to_string(w) + " mislabelled");
    for (int s = 1; s <= kGridSide; ++s) {
      if (!std::getline(row, cell, ',')) throw fail("short row " + std::to_string(w));
      grid.at(w, s) = std::stod(cell);
    }
  }
  grid.model_id = path.stem().string();
  return grid;
}

void export_metadata(const AccuracyGrid& grid, const std::filesystem::path& path) {
  auto os = open_out(path);
  os << "model_id = " << grid.model_id << '\n';
  os << "seed = " << grid.seed << '\n';
  os << "dataset_hash = " << std::hex << grid.dataset_hash << std::dec << '\n';
  os << "timestamp = " << grid.timestamp << '\n';
  if (grid.clean_accuracy) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", *grid.clean_accuracy);
    os << "clean_accuracy = " << buf << '\n';
  }
}

void read_metadata(AccuracyGrid& grid, const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq), value = line.substr(eq + 3);
    if (key == "model_id") grid.model_id = value;
    else if (key == "seed") grid.seed = std::stoull(value);
    else if (key == "dataset_hash") grid.dataset_hash = std::stoull(value, nullptr, 16);
    else if (key == "timestamp") grid.timestamp = value;
    else if (key == "clean_accuracy") grid.clean_accuracy = std::stod(value);
  }
}

void export_heatmap_pgm(const AccuracyGrid& grid, const std::filesystem::path& path) {
  std::vector<float> px;
  for (const auto& row : grid.values) {
    for (double v : row) px.push_back(static_cast<float>(v));
  }
  const auto [lo, hi] = std::minmax_element(px.begin(), px.end());
  write_pgm(path, px, kGridSide, kGridSide, *lo, *hi);
  auto sidecar = path;
  sidecar += ".txt";
  auto os = open_out(sidecar);
  char buf[96];
  std::snprintf(buf, sizeof buf, "min = %.6f\nmax = %.6f\n", static_cast<double>(*lo), static_cast<double>(*hi));
  os << "mapping = linear [min,max] -> [0,255]\n" << buf << "rows = w 1..10 (top to bottom)\n"
     << "cols = s 1..10 (left to right)\n";
}

}  // namespace bordernet
