#include "bordernet/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "bordernet/adam.hpp"
#include "bordernet/ops.hpp"
#include "bordernet/rng.hpp"

namespace bordernet {
namespace {

constexpr std::uint64_t kShuffleStream = 0x5348554646ULL;

Tensor gather_images(const Dataset& data, std::span<const std::size_t> indices) {
  const std::size_t plane = data.images.size() / data.size();
  Shape shape = data.images.shape();
  shape[0] = indices.size();
  Tensor batch(shape);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const float* src = data.images.raw() + indices[i] * plane;
    std::copy(src, src + plane, batch.raw() + i * plane);
  }
  return batch;
}

struct ShardResult {
  double loss_sum = 0.0;  // sum over samples, not the mean
  std::size_t correct = 0;
};

// Forward + backward over one shard; gradients are scaled so that summing
// shards reproduces the mean over the full batch.
ShardResult run_shard(Network& net, const Dataset& data, std::span<const std::size_t> indices,
                      std::size_t batch_total) {
  std::vector<int> labels(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) labels[i] = data.labels[indices[i]];
  ForwardTrace trace;
  const Tensor logits = net.forward(gather_images(data, indices), trace);
  auto loss = ops::softmax_cross_entropy(logits, labels);
  if (indices.size() != batch_total) {
    const float scale = static_cast<float>(indices.size()) / static_cast<float>(batch_total);
    for (auto& g : loss.grad_logits.data()) g *= scale;
  }
  net.backward(trace, loss.grad_logits);
  const auto predicted = argmax_rows(logits);
  ShardResult out;
  out.loss_sum = static_cast<double>(loss.loss) * static_cast<double>(indices.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out.correct += predicted[i] == labels[i] ? 1 : 0;
  return out;
}

}  // namespace

std::map<std::string, std::string> TrainConfig::describe() const {
  std::ostringstream lr;
  lr << learning_rate;
  return {
      {"train.variant", std::string(to_string(variant))},
      {"train.seed", std::to_string(seed)},
      {"train.filter_seed", std::to_string(filter_seed.value_or(seed))},
      {"train.epochs", std::to_string(epochs)},
      {"train.batch_size", std::to_string(batch_size)},
      {"train.learning_rate", lr.str()},
      {"train.optimizer", "adam(beta1=0.9,beta2=0.999,eps=1e-8)"},
      {"train.front_trainable", front_trainable ? "true" : "false"},
      {"train.normalize_filters", normalize_filters ? "true" : "false"},
      {"train.deterministic", deterministic ? "true" : "false"},
      {"train.threads", std::to_string(deterministic ? 1 : threads)},
      {"train.limit", std::to_string(limit)},
  };
}

Network make_network(const TrainConfig& config) {
  switch (config.variant) {
    case Variant::Vanilla:
      return build_vanilla(config.seed);
    case Variant::BorderNet: {
      FilterBank bank = make_oriented_filter_bank();
      if (config.normalize_filters) bank = normalize_l1(bank);
      return build_bordernet(config.seed, bank, config.front_trainable);
    }
    case Variant::RandomNet: {
      FilterBank bank = make_random_filter_bank(config.filter_seed.value_or(config.seed));
      if (config.normalize_filters) bank = normalize_l1(bank);
      return build_randomnet(config.seed, bank, config.front_trainable);
    }
  }
  throw std::invalid_argument("unknown variant");
}

std::size_t batches_per_epoch(std::size_t samples, std::size_t batch_size) {
  return (samples + batch_size - 1) / batch_size;
}

TrainResult train(const TrainConfig& config, const Dataset& train_data,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  if (train_data.occlusion) {
    throw std::invalid_argument("refusing to train on an occluded dataset (" + train_data.occlusion->label() + ")");
  }
  if (config.epochs < 0 || config.batch_size == 0) throw std::invalid_argument("invalid epochs or batch size");
  const std::size_t samples = config.limit ? std::min(config.limit, train_data.size()) : train_data.size();
  if (samples == 0) throw std::invalid_argument("empty training set");

  TrainResult result{make_network(config), {}};
  Network& net = result.network;
  AdamState adam(AdamConfig{.learning_rate = config.learning_rate});

  const std::size_t shards =
      config.deterministic ? 1 : std::max<std::size_t>(1, std::min(config.threads, config.batch_size));
  std::vector<Network> workers;
  for (std::size_t s = 1; s < shards; ++s) workers.push_back(net);

  std::vector<std::size_t> order(samples);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(config.seed ^ kShuffleStream, static_cast<std::uint64_t>(epoch));
    for (std::size_t i = samples - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

    EpochLog log{epoch, 0.0, 0.0, 0};
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < samples; start += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, samples - start);
      const std::span<const std::size_t> batch(order.data() + start, count);
      if (shards == 1) {
        const ShardResult r = run_shard(net, train_data, batch, count);
        loss_sum += r.loss_sum;
        correct += r.correct;
      } else {
        const std::size_t used = std::min(shards, count);
        std::vector<ShardResult> parts(used);
        std::vector<std::thread> threads;
        auto bounds = [&](std::size_t s) { return s * count / used; };
        for (std::size_t s = 1; s < used; ++s) {
          workers[s - 1].load_values(net.parameters());
          threads.emplace_back([&, s] {
            parts[s] = run_shard(workers[s - 1], train_data, batch.subspan(bounds(s), bounds(s + 1) - bounds(s)), count);
          });
        }
        parts[0] = run_shard(net, train_data, batch.subspan(0, bounds(1)), count);
        for (auto& t : threads) t.join();
        auto params = net.parameters();
        for (std::size_t s = 1; s < used; ++s) {
          const auto theirs = workers[s - 1].parameters();
          for (std::size_t p = 0; p < params.size(); ++p) {
            for (std::size_t i = 0; i < params[p].grad.size(); ++i) params[p].grad[i] += theirs[p].grad[i];
          }
        }
        for (const auto& part : parts) {
          loss_sum += part.loss_sum;
          correct += part.correct;
        }
      }
      adam_step(net.parameters(), adam);
      ++log.batches;
    }
    log.mean_loss = loss_sum / static_cast<double>(samples);
    log.train_accuracy = static_cast<double>(correct) / static_cast<double>(samples);
    if (!std::isfinite(log.mean_loss)) throw std::runtime_error("training diverged: non-finite loss");
    result.epochs.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return result;
}

std::vector<int> argmax_rows(const Tensor& logits) {
  if (logits.rank() != 2) throw ShapeError("argmax_rows expects [N,K] logits, got " + to_string(logits.shape()));
  const std::size_t rows = logits.dim(0), classes = logits.dim(1);
  std::vector<int> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const float* z = logits.raw() + r * classes;
    std::size_t best = 0;
    for (std::size_t k = 1; k < classes; ++k) {
      if (z[k] > z[best]) best = k;
    }
    out[r] = static_cast<int>(best);
  }
  return out;
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size() || labels.empty()) {
    throw std::invalid_argument("accuracy: prediction/label counts differ or are empty");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += predictions[i] == labels[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

std::vector<int> predict(const Network& net, const Dataset& data, std::size_t batch_size) {
  std::vector<int> out;
  out.reserve(data.size());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t count = std::min(batch_size, data.size() - start);
    idx.resize(count);
    std::iota(idx.begin(), idx.end(), start);
    const auto pred = argmax_rows(net.forward(gather_images(data, idx)));
    out.insert(out.end(), pred.begin(), pred.end());
  }
  return out;
}

double evaluate(const Network& net, const Dataset& data, std::size_t batch_size) {
  return accuracy(predict(net, data, batch_size), data.labels);
}

}  // namespace bordernet
