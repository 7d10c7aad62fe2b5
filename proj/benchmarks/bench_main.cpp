#include <benchmark/benchmark.h>

#include <vector>

#include "bordernet/adam.hpp"
#include "bordernet/filter_bank.hpp"
#include "bordernet/grid.hpp"
#include "bordernet/network.hpp"
#include "bordernet/occlusion.hpp"
#include "bordernet/ops.hpp"
#include "bordernet/orientation_map.hpp"
#include "bordernet/rng.hpp"
#include "bordernet/training.hpp"

using namespace bordernet;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform01();
  return t;
}

Network make(Variant v) {
  switch (v) {
    case Variant::Vanilla: return build_vanilla(0);
    case Variant::BorderNet: return build_bordernet(0, normalize_l1(make_oriented_filter_bank()));
    default: return build_randomnet(0, normalize_l1(make_random_filter_bank(0)));
  }
}

// conv1 of LeNet: 64 x 1 x 28x28 -> 6 x 28x28
void BM_Conv1Forward(benchmark::State& state) {
  const Tensor x = random_tensor({64, 1, 28, 28}, 1), k = random_tensor({6, 1, 5, 5}, 2), b = random_tensor({6}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(ops::conv2d_forward(x, k, &b, 2));
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_Conv1Forward)->Unit(benchmark::kMicrosecond);

void BM_Conv2Backward(benchmark::State& state) {
  const Tensor x = random_tensor({64, 6, 14, 14}, 1), k = random_tensor({16, 6, 5, 5}, 2);
  const Tensor up = random_tensor({64, 16, 10, 10}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(ops::conv2d_backward(up, x, k, 0));
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_Conv2Backward)->Unit(benchmark::kMicrosecond);

void BM_FrontFilterPass(benchmark::State& state) {
  const Tensor x = random_tensor({64, 1, 28, 28}, 1);
  const FilterBank bank = normalize_l1(make_oriented_filter_bank());
  for (auto _ : state) {
    Tensor y = x;
    for (const Tensor& k : bank.kernels) y = ops::conv2d_forward(y, k, nullptr, 3);
    benchmark::DoNotOptimize(y);
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_FrontFilterPass)->Unit(benchmark::kMicrosecond);

// One ADAM step on a batch of 64: forward, loss, backward, update.
void BM_TrainStep(benchmark::State& state) {
  Network net = make(static_cast<Variant>(state.range(0)));
  AdamState adam{AdamConfig{}};
  const Tensor x = random_tensor({64, 1, 28, 28}, 4);
  std::vector<int> labels(64);
  for (std::size_t i = 0; i < 64; ++i) labels[i] = static_cast<int>(i % 10);
  for (auto _ : state) {
    ForwardTrace trace;
    const auto loss = ops::softmax_cross_entropy(net.forward(x, trace), labels);
    net.backward(trace, loss.grad_logits);
    adam_step(net.parameters(), adam);
  }
  state.SetItemsProcessed(state.iterations() * 64);
  state.SetLabel(std::string(to_string(net.spec().variant)));
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

// Inference cost of one grid cell per test image.
void BM_Inference(benchmark::State& state) {
  const Network net = make(static_cast<Variant>(state.range(0)));
  const Tensor x = random_tensor({500, 1, 28, 28}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x));
  state.SetItemsProcessed(state.iterations() * 500);
  state.SetLabel(std::string(to_string(net.spec().variant)));
}
BENCHMARK(BM_Inference)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_OcclusionMask(benchmark::State& state) {
  for (auto _ : state) {
    for (const auto& spec : occlusion_grid()) benchmark::DoNotOptimize(occlusion_mask(spec, 28, 28));
  }
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_OcclusionMask);

void BM_ApplyOcclusion(benchmark::State& state) {
  const Dataset data = make_dataset(random_tensor({1000, 1, 28, 28}, 6), std::vector<int>(1000, 1), "test");
  for (auto _ : state) benchmark::DoNotOptimize(apply_occlusion(data, OcclusionSpec{3, 4}));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_ApplyOcclusion)->Unit(benchmark::kMicrosecond);

void BM_OrientationMap(benchmark::State& state) {
  const Tensor image = random_tensor({28, 28}, 7);
  const auto grad = gradient(image);
  const auto angles = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    if (angles == 0) benchmark::DoNotOptimize(orientation_map_closed_form(grad));
    else benchmark::DoNotOptimize(orientation_map_bruteforce(grad, angles));
  }
  state.SetLabel(angles == 0 ? "closed form" : std::to_string(angles) + " angles");
}
BENCHMARK(BM_OrientationMap)->Arg(0)->Arg(360)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
