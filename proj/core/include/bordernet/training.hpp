#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bordernet/dataset.hpp"
#include "bordernet/network.hpp"

namespace bordernet {

/// Defaults reproduce the reference protocol: ADAM, lr 1e-3, 10 epochs, batch 64.
struct TrainConfig {
  Variant variant = Variant::Vanilla;
  std::uint64_t seed = 0;
  /// Seed of the RandomNet filter bank; falls back to `seed`.
  std::optional<std::uint64_t> filter_seed;
  int epochs = 10;
  std::size_t batch_size = 64;
  float learning_rate = 1e-3f;
  bool front_trainable = false;
  bool normalize_filters = true;
  /// Deterministic mode computes each batch in one pass. Otherwise the batch is
  /// split across `threads` workers and the shard gradients are summed in
  /// shard order, which is reproducible only for the same thread count.
  bool deterministic = true;
  std::size_t threads = 1;
  /// Use only the first N training images (0 = all); for smoke runs.
  std::size_t limit = 0;

  std::map<std::string, std::string> describe() const;
};

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
  double train_accuracy = 0.0;
  std::size_t batches = 0;
};

struct TrainResult {
  Network network;
  std::vector<EpochLog> epochs;
};

/// Untrained network for `config`, with the front filter bank it asks for.
Network make_network(const TrainConfig& config);

std::size_t batches_per_epoch(std::size_t samples, std::size_t batch_size);

/// Mini-batch ADAM with a fresh seeded shuffle every epoch; the last partial
/// batch is kept. Throws std::invalid_argument for an occluded dataset.
TrainResult train(const TrainConfig& config, const Dataset& train_data,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

/// Row-wise argmax; ties go to the smallest class index.
std::vector<int> argmax_rows(const Tensor& logits);
double accuracy(std::span<const int> predictions, std::span<const int> labels);

std::vector<int> predict(const Network& net, const Dataset& data, std::size_t batch_size = 500);
/// Fraction of argmax-correct predictions.
double evaluate(const Network& net, const Dataset& data, std::size_t batch_size = 500);

}  // namespace bordernet
