#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bordernet/checkpoint.hpp"
#include "bordernet/network.hpp"
#include "bordernet/ops.hpp"
#include "support/oracles.hpp"

using namespace bordernet;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "bordernet_test_models";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<unsigned char> read_bytes(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

CheckpointErrorCode load_error(const fs::path& p, std::optional<Variant> expected = std::nullopt) {
  try {
    load_checkpoint(p, expected);
  } catch (const CheckpointError& e) {
    return e.code();
  }
  FAIL("checkpoint loaded unexpectedly");
  return CheckpointErrorCode::Malformed;
}

}  // namespace

TEST_CASE("vanilla LeNet layer shapes") {
  const Network net = build_vanilla(0);
  ForwardTrace trace;
  const Tensor logits = net.forward(Tensor({1, 1, 28, 28}, 0.5f), trace);
  CHECK(trace.pool1_input_shape == Shape{1, 6, 28, 28});
  CHECK(trace.conv2_input.shape() == Shape{1, 6, 14, 14});
  CHECK(trace.pool2_input_shape == Shape{1, 16, 10, 10});
  CHECK(trace.fc1_input.shape() == Shape{1, 400});
  CHECK(trace.fc2_input.shape() == Shape{1, 120});
  CHECK(trace.fc3_input.shape() == Shape{1, 84});
  CHECK(logits.shape() == Shape{1, 10});
}

TEST_CASE("parameter counts") {
  const Network vanilla = build_vanilla(1);
  CHECK(vanilla.trainable_parameter_count() == 156 + 2416 + 48120 + 10164 + 850);
  CHECK(vanilla.parameter_count() == 61706);

  const Network border = build_bordernet(1, make_oriented_filter_bank());
  const Network random = build_randomnet(1, make_random_filter_bank(5));
  CHECK(border.parameter_count() == 61902);
  CHECK(random.parameter_count() == border.parameter_count());
  CHECK(border.trainable_parameter_count() == 61706);
  CHECK(build_bordernet(1, make_oriented_filter_bank(), true).trainable_parameter_count() == 61902);
}

TEST_CASE("front convolutions keep 28x28 and every variant yields [N,10]") {
  const FilterBank bank = normalize_l1(make_oriented_filter_bank());
  const Network border = build_bordernet(3, bank, true);
  ForwardTrace trace;
  border.forward(Tensor({2, 1, 28, 28}, 1.0f), trace);
  REQUIRE(trace.front_inputs.size() == 4);
  for (const auto& t : trace.front_inputs) CHECK(t.shape() == Shape{2, 1, 28, 28});
  CHECK(trace.conv1_input.shape() == Shape{2, 1, 28, 28});

  for (const Network& net : {build_vanilla(0), border, build_randomnet(0, make_random_filter_bank(1))}) {
    for (std::size_t n : {1u, 64u}) CHECK(net.forward(Tensor({n, 1, 28, 28})).shape() == Shape{n, 10});
  }
  CHECK_THROWS_AS(border.forward(Tensor({1, 1, 32, 32})), ShapeError);
}

TEST_CASE("front convolutions compose in order H, V, D-main, D-anti") {
  const FilterBank bank = make_oriented_filter_bank();
  const Network border = build_bordernet(0, bank);
  Rng rng(4);
  const Tensor x = bordernet::testing::random_tensor(rng, {1, 1, 28, 28}, 0.0f, 1.0f);
  ForwardTrace trace;
  border.forward(x, trace);
  Tensor expect = x;
  for (const auto& k : bank.kernels) expect = bordernet::testing::conv2d_reference(expect, k, nullptr, 3);
  CHECK(max_abs_diff(trace.conv1_input, expect) <= 1e-2f);  // raw stripes reach ~1e5 in magnitude
  float peak = 0.0f;
  for (float v : expect.data()) peak = std::max(peak, v);
  CHECK(max_abs_diff(trace.conv1_input, expect) <= peak * 1e-6f);
}

TEST_CASE("bank kind is enforced") {
  CHECK_THROWS_AS(build_bordernet(0, make_random_filter_bank(1)), std::invalid_argument);
  CHECK_THROWS_AS(build_randomnet(0, make_oriented_filter_bank()), std::invalid_argument);
  NetworkSpec spec;
  spec.front_filters = make_oriented_filter_bank();
  CHECK_THROWS_AS(Network{spec}, std::invalid_argument);
}

TEST_CASE("initialisation is seeded and bounded") {
  CHECK(bit_identical(build_vanilla(9), build_vanilla(9)));
  CHECK_FALSE(bit_identical(build_vanilla(9), build_vanilla(10)));
  const FilterBank bank = make_random_filter_bank(3);
  CHECK(bit_identical(build_randomnet(2, bank), build_randomnet(2, make_random_filter_bank(3))));

  const Network net = build_vanilla(0);
  const float bound = std::sqrt(1.0f / 400.0f);
  for (float v : net.parameter("fc1.weight").value.data()) CHECK(std::fabs(v) <= bound);
  for (float v : net.parameter("fc1.bias").value.data()) CHECK(v == 0.0f);
}

TEST_CASE("end-to-end gradient matches finite differences on sampled parameters") {
  const FilterBank bank = normalize_l1(make_random_filter_bank(6));
  Network net = build_randomnet(11, bank, true);
  Rng rng(12);
  const Tensor x = bordernet::testing::random_tensor(rng, {2, 1, 28, 28}, 0.0f, 1.0f);
  const std::vector<int> labels{3, 7};
  ForwardTrace trace;
  const auto loss = ops::softmax_cross_entropy(net.forward(x, trace), labels);
  net.backward(trace, loss.grad_logits);

  auto objective = [&] { return bordernet::testing::cross_entropy_reference(net.forward(x), labels); };
  bordernet::testing::GradCheck check;
  for (auto& p : net.parameters()) {
    for (int i = 0; i < 6; ++i) {
      const std::size_t idx = rng.below(p.value.size());
      const double analytic = p.grad[idx];
      // small step keeps ReLU and max-pool switches out of the stencil
      const double numeric = bordernet::testing::central_difference(p.value[idx], 1e-4f, objective);
      check.record(analytic, numeric);
      if (!bordernet::testing::gradient_matches(analytic, numeric, 1e-2, 2e-5)) {
        FAIL_CHECK(p.name << "[" << idx << "] analytic " << analytic << " numeric " << numeric);
      }
    }
  }
  CHECK(check.checked > 10);
}

TEST_CASE("checkpoint round trip is byte-identical") {
  for (const Network& net : {build_vanilla(4), build_bordernet(5, normalize_l1(make_oriented_filter_bank()), true),
                             build_randomnet(6, make_random_filter_bank(8))}) {
    const fs::path a = temp_path("a.bnet"), b = temp_path("b.bnet");
    save_checkpoint(net, a);
    const Network loaded = load_checkpoint(a);
    CHECK(bit_identical(net, loaded));
    CHECK(loaded.spec().front_filters == net.spec().front_filters);
    save_checkpoint(loaded, b);
    CHECK(read_bytes(a) == read_bytes(b));
  }
}

TEST_CASE("checkpoint errors are distinct") {
  const fs::path p = temp_path("err.bnet");
  save_checkpoint(build_vanilla(0), p);
  const auto good = read_bytes(p);

  CHECK(load_error(p, Variant::BorderNet) == CheckpointErrorCode::VariantMismatch);

  auto bytes = good;
  bytes.pop_back();
  write_bytes(p, bytes);
  CHECK(load_error(p) == CheckpointErrorCode::Truncated);

  bytes = good;
  bytes[0] = 'X';
  write_bytes(p, bytes);
  CHECK(load_error(p) == CheckpointErrorCode::BadMagic);

  bytes = good;
  bytes[4] = 9;
  write_bytes(p, bytes);
  CHECK(load_error(p) == CheckpointErrorCode::VersionMismatch);

  // first tensor header: 36 bytes of preamble, then name length, name, rank, dims
  bytes = good;
  const std::size_t dims = 36 + 4 + std::string("conv1.weight").size() + 4;
  bytes[dims + 3] = 0x7f;
  bytes[dims + 4 + 3] = 0x7f;
  write_bytes(p, bytes);
  CHECK(load_error(p) == CheckpointErrorCode::DimensionOverflow);

  CHECK(load_error(temp_path("missing.bnet")) == CheckpointErrorCode::OpenFailed);
}

TEST_CASE("sidecar lists variant and hyperparameters") {
  std::ostringstream os;
  write_sidecar(os, build_bordernet(2, normalize_l1(make_oriented_filter_bank())), {{"train.epochs", "10"}});
  const std::string text = os.str();
  CHECK(text.find("variant = bordernet") != std::string::npos);
  CHECK(text.find("parameters = 61902") != std::string::npos);
  CHECK(text.find("front_normalization = l1") != std::string::npos);
  CHECK(text.find("train.epochs = 10") != std::string::npos);
}
