// bordernet: train the three LeNet variants, sweep the occlusion grid and
// export filters, masks and orientation maps as plain files.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "bordernet/checkpoint.hpp"
#include "bordernet/dataset.hpp"
#include "bordernet/filter_bank.hpp"
#include "bordernet/grid.hpp"
#include "bordernet/image_io.hpp"
#include "bordernet/occlusion.hpp"
#include "bordernet/orientation_map.hpp"
#include "bordernet/training.hpp"

namespace fs = std::filesystem;
using namespace bordernet;

namespace {

constexpr const char* kDataEnv = "BORDERNET_MNIST_DIR";

fs::path data_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kDataEnv); env && *env) return env;
  throw std::runtime_error(std::string("no MNIST directory: pass --data or set ") + kDataEnv);
}

std::size_t default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!(os << text)) throw std::runtime_error("cannot write " + path.string());
}

std::string with_suffix(const fs::path& p, const std::string& suffix) { return p.string() + suffix; }

const std::map<std::string, StripeDirection> kDirections{{"anti", StripeDirection::Anti},
                                                          {"main", StripeDirection::Main}};

// --- train ---------------------------------------------------------------

struct TrainArgs {
  std::string variant = "vanilla";
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> filter_seed;
  bool trainable_front = false;
  bool raw_filters = false;
  int epochs = 10;
  std::size_t batch_size = 64;
  float lr = 1e-3f;
  std::size_t threads = 1;
  std::size_t limit = 0;
  std::string data;
  std::string out;
};

void run_train(const TrainArgs& a) {
  TrainConfig config;
  config.variant = *parse_variant(a.variant);
  config.seed = a.seed;
  config.filter_seed = a.filter_seed;
  config.front_trainable = a.trainable_front;
  config.normalize_filters = !a.raw_filters;
  config.epochs = a.epochs;
  config.batch_size = a.batch_size;
  config.learning_rate = a.lr;
  config.threads = a.threads;
  config.deterministic = a.threads <= 1;
  config.limit = a.limit;

  const Dataset data = load_mnist(data_dir(a.data), "train");
  const fs::path out = a.out.empty() ? fs::path(a.variant + "_s" + std::to_string(a.seed) + ".bnet") : fs::path(a.out);
  std::printf("training %s seed %llu on %zu images, %zu batches/epoch\n", a.variant.c_str(),
              static_cast<unsigned long long>(a.seed), a.limit ? std::min(a.limit, data.size()) : data.size(),
              batches_per_epoch(a.limit ? std::min(a.limit, data.size()) : data.size(), a.batch_size));

  const auto start = std::chrono::steady_clock::now();
  const TrainResult result = train(config, data, [&](const EpochLog& e) {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("epoch %2d  loss %.5f  train_acc %.4f  (%.0fs)\n", e.epoch, e.mean_loss, e.train_accuracy, secs);
    std::fflush(stdout);
  });

  save_checkpoint(result.network, out);
  auto extra = config.describe();
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(data.content_hash));
  extra["train_hash"] = hash;
  for (const auto& e : result.epochs) {
    char line[96];
    std::snprintf(line, sizeof line, "loss %.6f acc %.6f", e.mean_loss, e.train_accuracy);
    extra["epoch_" + std::string(e.epoch < 10 ? "0" : "") + std::to_string(e.epoch)] = line;
  }
  std::ofstream side(with_suffix(out, ".txt"));
  write_sidecar(side, result.network, extra);
  if (!side) throw std::runtime_error("cannot write sidecar for " + out.string());
  std::printf("wrote %s\n", out.string().c_str());
}

// --- eval-grid -----------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string out;
  std::string data;
  std::string direction = "anti";
  std::size_t workers = default_workers();
  std::size_t limit = 0;
};

void run_eval_grid(const EvalArgs& a) {
  const Network net = load_checkpoint(a.checkpoint);
  Dataset test = load_mnist(data_dir(a.data), "test");
  if (a.limit && a.limit < test.size()) test = slice(test, 0, a.limit);

  AccuracyGrid grid = evaluate_grid(net, test, fs::path(a.checkpoint).stem().string(), a.workers,
                                    kDirections.at(a.direction));
  const fs::path prefix = a.out;
  export_csv(grid, with_suffix(prefix, ".csv"));
  export_heatmap_pgm(grid, with_suffix(prefix, ".pgm"));
  grid.timestamp = utc_timestamp();
  export_metadata(grid, with_suffix(prefix, ".meta.txt"));
  std::printf("clean %.4f  mild %.4f  severe %.4f\n", grid.clean_accuracy.value_or(0.0), mean_over_mild(grid),
              mean_over_severe(grid));
  std::printf("wrote %s.{csv,pgm,pgm.txt,meta.txt}\n", prefix.string().c_str());
}

// --- diff ----------------------------------------------------------------

void load_meta_if_present(AccuracyGrid& grid, const fs::path& csv) {
  fs::path meta = csv;
  meta.replace_extension(".meta.txt");
  if (fs::exists(meta)) read_metadata(grid, meta);
}

void run_diff(const std::string& a_path, const std::string& b_path, const std::string& out) {
  AccuracyGrid a = read_csv(a_path), b = read_csv(b_path);
  load_meta_if_present(a, a_path);
  load_meta_if_present(b, b_path);
  AccuracyGrid d = diff_grid(a, b);
  d.timestamp = utc_timestamp();
  export_csv(d, out);
  fs::path base = out;
  base.replace_extension();
  export_heatmap_pgm(d, with_suffix(base, ".pgm"));
  std::ostringstream meta;
  meta << "a = " << a.model_id << "\nb = " << b.model_id << '\n';
  export_metadata(d, with_suffix(base, ".meta.txt"));
  std::ofstream(with_suffix(base, ".meta.txt"), std::ios::app) << meta.str();
  std::printf("%s: mild %+.4f  severe %+.4f\n", d.model_id.c_str(), mean_over_mild(d), mean_over_severe(d));
}

// --- occlude -------------------------------------------------------------

struct OccludeArgs {
  int w = 1, s = 1, phase = 0;
  std::string direction = "anti";
  std::string preview;
  std::optional<std::size_t> index;
  std::string export_prefix;
  std::string data;
};

void run_occlude(const OccludeArgs& a) {
  OcclusionSpec spec{a.w, a.s, kDirections.at(a.direction), a.phase};
  spec.validate();
  const auto mask = occlusion_mask(spec, 28, 28);
  std::size_t count = 0;
  for (auto m : mask) count += m;
  std::printf("%s: %zu of 784 pixels occluded (%.1f%%)\n", spec.label().c_str(), count, 100.0 * count / 784.0);

  const bool need_data = a.index.has_value() || !a.export_prefix.empty();
  std::optional<Dataset> occluded;
  if (need_data) occluded = apply_occlusion(load_mnist(data_dir(a.data), "test"), spec);

  if (!a.preview.empty()) {
    std::vector<float> px(784);
    if (a.index) {
      if (*a.index >= occluded->size()) throw std::out_of_range("--index beyond the test set");
      std::copy_n(occluded->images.raw() + *a.index * 784, 784, px.begin());
    } else {
      for (std::size_t i = 0; i < 784; ++i) px[i] = mask[i] ? 0.0f : 1.0f;
    }
    write_pgm(a.preview, px, 28, 28, 0.0f, 1.0f);
    std::printf("wrote %s\n", a.preview.c_str());
  }
  if (!a.export_prefix.empty()) {
    write_idx(*occluded, a.export_prefix + "-images-idx3-ubyte", a.export_prefix + "-labels-idx1-ubyte");
    std::printf("wrote %s-{images-idx3,labels-idx1}-ubyte\n", a.export_prefix.c_str());
  }
}

// --- filters -------------------------------------------------------------

void export_bank(const FilterBank& bank, const fs::path& dir, const std::string& tag) {
  std::ofstream all(dir / (tag + ".bank"));
  write_filter_bank(all, bank);
  if (!all) throw std::runtime_error("cannot write to " + dir.string());
  for (std::size_t k = 0; k < 4; ++k) {
    const std::string name = tag + "_" +
                             (bank.kind == FilterKind::Oriented ? std::string(to_string(kOrientations[k]))
                                                                : std::to_string(k));
    const Tensor& kernel = bank.kernels[k];
    write_text(dir / (name + ".txt"), format_kernel(kernel));
    float lo = kernel[0], hi = kernel[0];
    for (float v : kernel.data()) lo = std::min(lo, v), hi = std::max(hi, v);
    write_pgm(dir / (name + ".pgm"), kernel.data(), kFilterSize, kFilterSize, std::min(lo, 0.0f), hi);
  }
}

void run_filters(const std::string& dir, std::uint64_t random_seed, bool normalized) {
  fs::create_directories(dir);
  FilterBank oriented = make_oriented_filter_bank(), random = make_random_filter_bank(random_seed);
  if (normalized) oriented = normalize_l1(oriented), random = normalize_l1(random);
  export_bank(oriented, dir, "oriented");
  export_bank(random, dir, "random");
  std::printf("wrote oriented and random banks to %s\n", dir.c_str());
}

// --- orientmap -----------------------------------------------------------

struct OrientArgs {
  std::string image;
  std::optional<std::size_t> index;
  std::string out;
  std::string scheme = "central";
  std::size_t angles = 0;
  double eps = kRegularityThreshold;
  std::string data;
};

void run_orientmap(const OrientArgs& a) {
  Tensor image;
  if (!a.image.empty()) {
    image = read_pgm(a.image);
  } else {
    const Dataset test = load_mnist(data_dir(a.data), "test");
    if (*a.index >= test.size()) throw std::out_of_range("--index beyond the test set");
    image = Tensor({28, 28}, std::vector<float>(test.images.raw() + *a.index * 784, test.images.raw() + (*a.index + 1) * 784));
  }
  const auto grad = gradient(image, a.scheme == "sobel" ? GradientScheme::Sobel : GradientScheme::Central);
  const OrientationMap map =
      a.angles ? orientation_map_bruteforce(grad, a.angles, a.eps) : orientation_map_closed_form(grad, a.eps);
  const fs::path prefix = a.out;
  std::ofstream csv(with_suffix(prefix, ".csv"));
  write_orientation_csv(csv, map);
  std::ofstream ppm(with_suffix(prefix, ".ppm"), std::ios::binary);
  write_orientation_ppm(ppm, map);
  if (!csv || !ppm) throw std::runtime_error("cannot write " + prefix.string() + ".{csv,ppm}");
  std::printf("%zu of %zu points regular; wrote %s.{csv,ppm}\n", map.regular_count(), image.size(),
              prefix.string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BorderNet occlusion-robustness benchmark"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "train a model on clean MNIST and write a checkpoint");
  train_cmd->add_option("--variant", ta.variant)->check(CLI::IsMember({"vanilla", "bordernet", "randomnet"}));
  train_cmd->add_option("--seed", ta.seed, "initialisation and shuffling seed");
  train_cmd->add_option("--filter-seed", ta.filter_seed, "random front seed (randomnet; default --seed)");
  train_cmd->add_flag("--trainable-front", ta.trainable_front, "let ADAM update the front filters");
  train_cmd->add_flag("--raw-filters", ta.raw_filters, "keep front stripes at 1 instead of L1-normalising");
  train_cmd->add_option("--epochs", ta.epochs)->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch-size", ta.batch_size)->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", ta.lr)->check(CLI::PositiveNumber);
  train_cmd->add_option("--threads", ta.threads, "shard each batch over N threads (not bit-reproducible across N)")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--limit", ta.limit, "use only the first N training images");
  train_cmd->add_option("--data", ta.data, std::string("MNIST directory (default $") + kDataEnv + ")");
  train_cmd->add_option("--out", ta.out, "checkpoint path (default <variant>_s<seed>.bnet)");

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval-grid", "accuracy over the 10x10 occlusion grid");
  eval_cmd->add_option("--checkpoint", ea.checkpoint)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", ea.out, "output prefix")->required();
  eval_cmd->add_option("--data", ea.data);
  eval_cmd->add_option("--direction", ea.direction)->check(CLI::IsMember({"anti", "main"}));
  eval_cmd->add_option("--workers", ea.workers)->check(CLI::PositiveNumber);
  eval_cmd->add_option("--limit", ea.limit, "use only the first N test images");

  std::string diff_a, diff_b, diff_out;
  auto* diff_cmd = app.add_subcommand("diff", "elementwise difference a - b of two grid CSVs");
  diff_cmd->add_option("--a", diff_a)->required()->check(CLI::ExistingFile);
  diff_cmd->add_option("--b", diff_b)->required()->check(CLI::ExistingFile);
  diff_cmd->add_option("--out", diff_out, "output CSV")->required();

  OccludeArgs oa;
  auto* occ_cmd = app.add_subcommand("occlude", "render or export one occlusion pattern");
  occ_cmd->add_option("--w", oa.w)->required()->check(CLI::Range(1, 28));
  occ_cmd->add_option("--s", oa.s)->required()->check(CLI::Range(1, 28));
  occ_cmd->add_option("--phase", oa.phase);
  occ_cmd->add_option("--direction", oa.direction)->check(CLI::IsMember({"anti", "main"}));
  occ_cmd->add_option("--preview", oa.preview, "PGM of the mask, or of test digit --index");
  occ_cmd->add_option("--index", oa.index, "test image to occlude in the preview");
  occ_cmd->add_option("--export", oa.export_prefix, "write the occluded test set as IDX files with this prefix");
  occ_cmd->add_option("--data", oa.data);

  std::string filters_dir;
  std::uint64_t filters_seed = 0;
  bool filters_normalized = false;
  auto* filt_cmd = app.add_subcommand("filters", "export the oriented and random front filters");
  filt_cmd->add_option("--export", filters_dir, "output directory")->required();
  filt_cmd->add_option("--seed", filters_seed, "random bank seed");
  filt_cmd->add_flag("--normalized", filters_normalized, "export L1-normalised kernels");

  OrientArgs ra;
  auto* orient_cmd = app.add_subcommand("orientmap", "orientation map of an image");
  auto* image_opt = orient_cmd->add_option("--image", ra.image, "PGM input")->check(CLI::ExistingFile);
  auto* index_opt = orient_cmd->add_option("--index", ra.index, "MNIST test image instead of --image");
  image_opt->excludes(index_opt);
  orient_cmd->add_option("--out", ra.out, "output prefix")->required();
  orient_cmd->add_option("--scheme", ra.scheme)->check(CLI::IsMember({"central", "sobel"}));
  orient_cmd->add_option("--angles", ra.angles, "brute-force over N angles instead of the closed form");
  orient_cmd->add_option("--eps", ra.eps, "gradient magnitude below which a point is irregular");
  orient_cmd->add_option("--data", ra.data);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) run_train(ta);
    else if (*eval_cmd) run_eval_grid(ea);
    else if (*diff_cmd) run_diff(diff_a, diff_b, diff_out);
    else if (*occ_cmd) run_occlude(oa);
    else if (*filt_cmd) run_filters(filters_dir, filters_seed, filters_normalized);
    else if (*orient_cmd) {
      if (ra.image.empty() && !ra.index) throw CLI::ValidationError("orientmap", "need --image or --index");
      run_orientmap(ra);
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
