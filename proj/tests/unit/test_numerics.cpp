#include "doctest.h"

#include <cmath>
#include <cstring>

#include "bordernet/adam.hpp"
#include "bordernet/filter_bank.hpp"
#include "bordernet/ops.hpp"
#include "support/oracles.hpp"

using namespace bordernet;
using bordernet::testing::check_gradient;
using bordernet::testing::GradCheck;
using bordernet::testing::project;
using bordernet::testing::random_tensor;
using bordernet::testing::cross_entropy_reference;

TEST_CASE("tensor shape bookkeeping") {
  Tensor t({2, 3, 4});
  CHECK(t.size() == 24);
  CHECK(t.rank() == 3);
  t.at({1, 2, 3}) = 5.0f;
  CHECK(t[23] == 5.0f);
  CHECK_THROWS_AS(Tensor({2, 0}), ShapeError);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<float>(3)), ShapeError);
  CHECK_THROWS_AS(t.reshaped({5, 5}), ShapeError);
  CHECK(t.reshaped({24}).dim(0) == 24);
  CHECK_THROWS_AS(t.at({0, 0}), ShapeError);
}

TEST_CASE("conv2d forward: ones and identity") {
  const Tensor ones({1, 1, 3, 3}, 1.0f);
  const Tensor y = ops::conv2d_forward(ones, ones, nullptr, 0);
  CHECK(y.shape() == Shape{1, 1, 1, 1});
  CHECK(y[0] == 9.0f);

  Rng rng(3);
  const Tensor x = random_tensor(rng, {2, 1, 5, 6});
  const Tensor identity({1, 1, 1, 1}, 1.0f);
  CHECK(bit_identical(ops::conv2d_forward(x, identity, nullptr, 0), x));
}

TEST_CASE("conv2d forward: impulse response is the reflected filter") {
  Tensor impulse({1, 1, 5, 5});
  impulse.at({0, 0, 2, 2}) = 1.0f;
  const Tensor stripe = make_oriented_filter(Orientation::DiagonalMain).reshaped({1, 1, 7, 7});
  // use an asymmetric kernel too, otherwise reflection is invisible
  Tensor ramp({1, 1, 7, 7});
  for (std::size_t i = 0; i < 49; ++i) ramp[i] = static_cast<float>(i);

  for (const Tensor* kernel : std::initializer_list<const Tensor*>{&stripe, &ramp}) {
    const Tensor y = ops::conv2d_forward(impulse, *kernel, nullptr, 3);
    REQUIRE(y.shape() == Shape{1, 1, 5, 5});
    for (std::size_t r = 0; r < 5; ++r) {
      for (std::size_t c = 0; c < 5; ++c) {
        // reflected kernel k'(a,b) = k(6-a,6-b) with its centre (3,3) on the impulse at (2,2)
        CHECK(y.at({0, 0, r, c}) == kernel->at({0, 0, 5 - r, 5 - c}));
      }
    }
  }
}

TEST_CASE("conv2d forward matches the definition on random shapes") {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng.below(2), c = 1 + rng.below(3), o = 1 + rng.below(3);
    const std::size_t h = 3 + rng.below(7), w = 3 + rng.below(7);
    const std::size_t kh = 1 + rng.below(3), kw = 1 + rng.below(3), pad = rng.below(3);
    const Tensor x = random_tensor(rng, {n, c, h, w});
    const Tensor k = random_tensor(rng, {o, c, kh, kw});
    const Tensor b = random_tensor(rng, {o});
    const Tensor y = ops::conv2d_forward(x, k, &b, pad);
    CHECK(max_abs_diff(y, bordernet::testing::conv2d_reference(x, k, &b, pad)) <= 1e-5f);
  }
}

TEST_CASE("conv2d shape errors") {
  const Tensor x({1, 2, 5, 5});
  CHECK_THROWS_AS(ops::conv2d_forward(x, Tensor({1, 3, 3, 3}), nullptr, 0), ShapeError);
  CHECK_THROWS_AS(ops::conv2d_forward(x, Tensor({1, 2, 9, 9}), nullptr, 1), ShapeError);
  const Tensor bad_bias({4});
  CHECK_THROWS_AS(ops::conv2d_forward(x, Tensor({1, 2, 3, 3}), &bad_bias, 0), ShapeError);
  CHECK_THROWS_AS(ops::conv2d_backward(Tensor({1, 1, 4, 4}), x, Tensor({1, 2, 3, 3}), 0), ShapeError);
}

TEST_CASE("conv2d backward: zero upstream and linearity") {
  Rng rng(5);
  Tensor x = random_tensor(rng, {2, 2, 6, 6});
  const Tensor k = random_tensor(rng, {3, 2, 3, 3});
  const Tensor zero({2, 3, 6, 6});
  const auto g0 = ops::conv2d_backward(zero, x, k, 1);
  for (const Tensor* t : {&g0.input, &g0.kernels, &g0.bias}) {
    for (float v : t->data()) CHECK(v == 0.0f);
  }
  const Tensor up = random_tensor(rng, {2, 3, 6, 6});
  Tensor up2 = up;
  for (auto& v : up2.data()) v *= 2.0f;
  const auto g1 = ops::conv2d_backward(up, x, k, 1);
  const auto g2 = ops::conv2d_backward(up2, x, k, 1);
  for (std::size_t i = 0; i < g1.input.size(); ++i) CHECK(g2.input[i] == doctest::Approx(2.0 * g1.input[i]).epsilon(1e-6));
  for (std::size_t i = 0; i < g1.kernels.size(); ++i)
    CHECK(g2.kernels[i] == doctest::Approx(2.0 * g1.kernels[i]).epsilon(1e-6));
}

TEST_CASE("conv2d backward matches finite differences") {
  Rng rng(21);
  GradCheck check;
  for (int trial = 0; trial < 25; ++trial) {
    Tensor x = random_tensor(rng, {1, 2, 4, 4});
    Tensor k = random_tensor(rng, {2, 2, 3, 3});
    Tensor b = random_tensor(rng, {2});
    const std::size_t pad = rng.below(2);
    const Tensor probe = random_tensor(rng, ops::conv2d_forward(x, k, &b, pad).shape());
    auto loss = [&] { return project(ops::conv2d_forward(x, k, &b, pad), probe); };
    const auto g = ops::conv2d_backward(probe, x, k, pad);
    // the layer is linear in each argument, so a wide step is exact and beats float rounding
    check_gradient(check, x, g.input, loss, 0.25f);
    check_gradient(check, k, g.kernels, loss, 0.25f);
    check_gradient(check, b, g.bias, loss, 0.25f);
  }
  INFO("worst relative error " << check.worst_rel);
  CHECK(check.ok());
}

TEST_CASE("conv2d backward honours the gradient request") {
  Rng rng(2);
  const Tensor x = random_tensor(rng, {1, 1, 5, 5});
  const Tensor k = random_tensor(rng, {1, 1, 3, 3});
  const auto g = ops::conv2d_backward(Tensor({1, 1, 3, 3}, 1.0f), x, k, 0, {.input = false, .weights = true, .bias = false});
  CHECK(g.input.empty());
  CHECK(g.bias.empty());
  CHECK(g.kernels.shape() == k.shape());
}

TEST_CASE("maxpool picks the maximum and routes the gradient") {
  Tensor x({1, 1, 2, 2}, std::vector<float>{1, 2, 3, 4});
  auto pooled = ops::maxpool2x2_forward(x);
  CHECK(pooled.output[0] == 4.0f);
  auto g = ops::maxpool2x2_backward(Tensor({1, 1, 1, 1}, 1.0f), pooled.argmax, x.shape());
  CHECK(g.at({0, 0, 1, 1}) == 1.0f);
  CHECK(g.at({0, 0, 0, 0}) == 0.0f);

  const Tensor constant({1, 2, 4, 4}, 0.5f);
  pooled = ops::maxpool2x2_forward(constant);
  for (float v : pooled.output.data()) CHECK(v == 0.5f);
  g = ops::maxpool2x2_backward(Tensor(pooled.output.shape(), 1.0f), pooled.argmax, constant.shape());
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t q = 0; q < 4; ++q) CHECK(g.at({0, c, r, q}) == ((r % 2 == 0 && q % 2 == 0) ? 1.0f : 0.0f));

  CHECK_THROWS_AS(ops::maxpool2x2_forward(Tensor({1, 1, 3, 4})), ShapeError);
}

TEST_CASE("maxpool backward matches finite differences away from ties") {
  Rng rng(8);
  GradCheck check;
  for (int trial = 0; trial < 25; ++trial) {
    Tensor x = random_tensor(rng, {1, 1, 4, 4});
    const Tensor probe = random_tensor(rng, {1, 1, 2, 2});
    auto pooled = ops::maxpool2x2_forward(x);
    const Tensor g = ops::maxpool2x2_backward(probe, pooled.argmax, x.shape());
    auto loss = [&] { return project(ops::maxpool2x2_forward(x).output, probe); };
    for (std::size_t i = 0; i < x.size(); ++i) {
      // skip elements within a step of another element in their window
      const std::size_t r = i / 4, c = i % 4;
      bool near_tie = false;
      for (std::size_t dr = 0; dr < 2; ++dr)
        for (std::size_t dc = 0; dc < 2; ++dc) {
          const std::size_t j = ((r / 2) * 2 + dr) * 4 + (c / 2) * 2 + dc;
          if (j != i && std::fabs(x[j] - x[i]) < 4e-3f) near_tie = true;
        }
      if (near_tie) continue;
      check.record(g[i], bordernet::testing::central_difference(x[i], 1e-3f, loss));
    }
  }
  CHECK(check.ok());
}

TEST_CASE("dense layer") {
  Tensor eye({3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye.at({i, i}) = 1.0f;
  Rng rng(4);
  const Tensor x = random_tensor(rng, {2, 3});
  CHECK(bit_identical(ops::dense_forward(x, eye, Tensor({3})), x));

  const Tensor b({4}, std::vector<float>{1, -2, 3, 0.5f});
  const Tensor y = ops::dense_forward(x, Tensor({4, 3}), b);
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t o = 0; o < 4; ++o) CHECK(y.at({n, o}) == b[o]);

  CHECK_THROWS_AS(ops::dense_forward(x, Tensor({4, 2}), b), ShapeError);
  CHECK_THROWS_AS(ops::dense_forward(x, Tensor({4, 3}), Tensor({3})), ShapeError);

  GradCheck check;
  for (int trial = 0; trial < 25; ++trial) {
    Tensor in = random_tensor(rng, {3, 4});
    Tensor w = random_tensor(rng, {5, 4});
    Tensor bias = random_tensor(rng, {5});
    const Tensor probe = random_tensor(rng, {3, 5});
    auto loss = [&] { return project(ops::dense_forward(in, w, bias), probe); };
    const auto g = ops::dense_backward(probe, in, w);
    check_gradient(check, in, g.input, loss, 0.25f);
    check_gradient(check, w, g.weights, loss, 0.25f);
    check_gradient(check, bias, g.bias, loss, 0.25f);
  }
  CHECK(check.ok());
}

TEST_CASE("relu") {
  const Tensor x({3}, std::vector<float>{-1, 0, 2});
  const Tensor y = ops::relu_forward(x);
  CHECK(y[0] == 0.0f);
  CHECK(y[1] == 0.0f);
  CHECK(y[2] == 2.0f);
  const Tensor g = ops::relu_backward(Tensor({3}, 5.0f), x);
  CHECK(g[0] == 0.0f);
  CHECK(g[1] == 0.0f);  // subgradient at zero
  CHECK(g[2] == 5.0f);
}

TEST_CASE("softmax cross-entropy") {
  const std::vector<int> label{3};
  auto uniform = ops::softmax_cross_entropy(Tensor({1, 10}), label);
  CHECK(uniform.loss == doctest::Approx(std::log(10.0)).epsilon(1e-6));

  Tensor peaked({1, 10});
  peaked[3] = 100.0f;
  CHECK(ops::softmax_cross_entropy(peaked, label).loss == doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS_AS(ops::softmax_cross_entropy(Tensor({1, 10}), std::vector<int>{10}), std::out_of_range);
  CHECK_THROWS_AS(ops::softmax_cross_entropy(Tensor({1, 10}), std::vector<int>{-1}), std::out_of_range);
  CHECK_THROWS_AS(ops::softmax_cross_entropy(Tensor({2, 10}), label), ShapeError);

  Rng rng(13);
  GradCheck check;
  for (int trial = 0; trial < 25; ++trial) {
    Tensor z = random_tensor(rng, {2, 10}, -3.0f, 3.0f);
    const std::vector<int> labels{static_cast<int>(rng.below(10)), static_cast<int>(rng.below(10))};
    const auto result = ops::softmax_cross_entropy(z, labels);
    // softmax implied by the gradient: p = N*g + onehot
    for (std::size_t r = 0; r < 2; ++r) {
      double row = 0.0;
      for (std::size_t k = 0; k < 10; ++k) {
        const double p = 2.0 * result.grad_logits.at({r, k}) + (static_cast<int>(k) == labels[r] ? 1.0 : 0.0);
        CHECK(p >= -1e-7);
        row += p;
      }
      CHECK(row == doctest::Approx(1.0).epsilon(1e-5));
    }
    CHECK(result.loss == doctest::Approx(cross_entropy_reference(z, labels)).epsilon(1e-6));
    check_gradient(check, z, result.grad_logits, [&] { return cross_entropy_reference(z, labels); });
  }
  CHECK(check.ok());
}

TEST_CASE("ops stay finite on large finite inputs") {
  Tensor z({2, 10});
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = (i % 2 ? 1.0f : -1.0f) * 1e4f;
  const auto r = ops::softmax_cross_entropy(z, std::vector<int>{0, 1});
  CHECK(std::isfinite(r.loss));
  CHECK(r.grad_logits.all_finite());
  CHECK(ops::softmax(z).all_finite());
}

TEST_CASE("adam: zero gradients leave parameters unchanged") {
  std::vector<Parameter> params{Parameter("w", Tensor({3}, 0.25f))};
  AdamState state;
  adam_step(params, state);
  for (float v : params[0].value.data()) CHECK(v == 0.25f);
  CHECK(state.step_count == 1);
}

TEST_CASE("adam: first step with unit gradient moves by the learning rate") {
  std::vector<Parameter> params{Parameter("w", Tensor({1}, 1.0f))};
  params[0].grad[0] = 1.0f;
  AdamState state(AdamConfig{.learning_rate = 0.001f});
  adam_step(params, state);
  // bias-corrected moments are both 1, so the step is lr / (1 + eps)
  const double expected = 1.0 - 0.001f / (1.0 + 1e-8);
  CHECK(params[0].value[0] == doctest::Approx(expected).epsilon(1e-7));
  CHECK(params[0].grad[0] == 0.0f);
}

TEST_CASE("adam: frozen parameters are bit-identical and steps are deterministic") {
  Rng rng(1);
  auto make = [&] {
    Rng local(99);
    std::vector<Parameter> ps{Parameter("a", random_tensor(local, {4, 4})), Parameter("b", random_tensor(local, {7}), false)};
    for (auto& p : ps) p.grad = random_tensor(local, p.value.shape());
    return ps;
  };
  auto p1 = make();
  auto p2 = make();
  const Tensor frozen_before = p1[1].value;
  AdamState s1, s2;
  for (int i = 0; i < 5; ++i) {
    adam_step(p1, s1);
    adam_step(p2, s2);
    for (auto* ps : {&p1, &p2}) {
      Rng g(static_cast<std::uint64_t>(i));
      for (auto& p : *ps) p.grad = random_tensor(g, p.value.shape());
    }
  }
  CHECK(bit_identical(p1[1].value, frozen_before));
  CHECK(bit_identical(p1[0].value, p2[0].value));
  CHECK_FALSE(bit_identical(p1[0].value, make()[0].value));
  CHECK(s1.step_count == 5);
  CHECK(s1.first_moment[1].empty());
}

TEST_CASE("adam rejects inconsistent parameter lists") {
  std::vector<Parameter> params{Parameter("w", Tensor({2}))};
  AdamState state;
  adam_step(params, state);
  params.emplace_back("v", Tensor({2}));
  CHECK_THROWS_AS(adam_step(params, state), ShapeError);
  CHECK_THROWS_AS(AdamState(AdamConfig{.learning_rate = 0.0f}), std::invalid_argument);
}
