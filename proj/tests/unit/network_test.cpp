#include <gtest/gtest.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <random>

#include "oracles.hpp"
#include "rulforge/error.hpp"
#include "rulforge/grad_check.hpp"
#include "rulforge/network.hpp"

namespace rulforge {
namespace {

using testing::random_tensor;

ConvNetTemplate small_template() {
  ConvNetTemplate t;
  t.input_shape = {12, 5, 1};
  t.conv_blocks = 2;
  t.block_size = 1;
  t.kernel_rows = 3;
  t.kernel_cols = 1;
  t.filters = 3;
  t.fc1 = 6;
  return t;
}

std::size_t count_kind(const NetworkSpec& s, LayerKind k) {
  return static_cast<std::size_t>(std::count_if(s.layers.begin(), s.layers.end(),
                                                [k](const LayerSpec& l) { return l.kind == k; }));
}

TEST(BuildNetwork, FollowsTemplate) {
  auto t = small_template();
  t.fc2 = 4;
  t.dropout = 0.2;
  const auto spec = build_network(t);
  EXPECT_NO_THROW(spec.validate());
  EXPECT_EQ(count_kind(spec, LayerKind::conv2d), 2u);
  EXPECT_EQ(count_kind(spec, LayerKind::maxpool2d), 2u);
  EXPECT_EQ(count_kind(spec, LayerKind::dense), 3u);
  EXPECT_EQ(count_kind(spec, LayerKind::dropout), 1u);
  const auto shapes = spec.output_shapes();
  EXPECT_EQ(shapes.back(), (Shape{1}));
  EXPECT_EQ(spec.layers.back().fn, Activation::relu);
  EXPECT_EQ(spec.dense_layers().size(), 3u);
}

TEST(BuildNetwork, SkipsPoolsOnShortTimeAxis) {
  auto t = small_template();
  t.input_shape = {3, 5, 1};
  const auto spec = build_network(t);
  EXPECT_EQ(count_kind(spec, LayerKind::maxpool2d), 1u);
  EXPECT_NO_THROW(spec.validate());
}

TEST(NetworkSpec, ValidateEnforcesRegressionHead) {
  NetworkSpec s;
  s.input_shape = {4, 4, 1};
  s.layers = {LayerSpec::flatten(), LayerSpec::dense_layer(1)};
  EXPECT_THROW(s.validate(), ShapeError);
  s.layers.push_back(LayerSpec::act(Activation::relu));
  EXPECT_NO_THROW(s.validate());
  s.layers.insert(s.layers.begin(), LayerSpec::conv(5, 1, 2));
  EXPECT_THROW(s.validate(), ShapeError);
}

TEST(NetworkSpec, ParamCountMatchesInit) {
  const auto spec = build_network(small_template());
  EXPECT_EQ(init_params(spec, 1).count(), spec.param_count());
}

TEST(NetworkSpec, JsonRoundTrip) {
  auto t = small_template();
  t.fc2 = 3;
  t.l1 = 0.01;
  const auto spec = build_network(t);
  const nlohmann::json j = spec;
  EXPECT_EQ(j.get<NetworkSpec>(), spec);
}

TEST(Forward, InferIsPureAndNonNegative) {
  std::mt19937_64 rng(2);
  const auto spec = build_network(small_template());
  const auto params = init_params(spec, 3);
  for (int i = 0; i < 20; ++i) {
    const auto x = random_tensor(spec.input_shape, rng, -3, 3);
    const double a = predict(spec, params, x);
    EXPECT_EQ(a, predict(spec, params, x));
    EXPECT_EQ(a, forward(spec, params, x, Mode::infer).yhat);
    EXPECT_GE(a, 0.0);
  }
}

TEST(Forward, InitIsDeterministicInSeed) {
  const auto spec = build_network(small_template());
  EXPECT_EQ(init_params(spec, 5), init_params(spec, 5));
  EXPECT_NE(init_params(spec, 5), init_params(spec, 6));
}

TEST(Forward, TrainDropoutNeedsRng) {
  auto t = small_template();
  t.dropout = 0.5;
  const auto spec = build_network(t);
  const auto params = init_params(spec, 1);
  EXPECT_THROW(forward(spec, params, Tensor(spec.input_shape, 0.1), Mode::train), UsageError);
}

TEST(Forward, DropoutPreservesExpectation) {
  NetworkSpec spec;
  spec.input_shape = {4, 3, 1};
  spec.layers = {LayerSpec::flatten(), LayerSpec::dropout(0.4), LayerSpec::dense_layer(1),
                 LayerSpec::act(Activation::relu)};
  auto params = init_params(spec, 1);
  for (auto& w : params.layers[2].weights.values()) w = std::abs(w) + 0.1;
  std::mt19937_64 rng(11);
  const auto x = random_tensor(spec.input_shape, rng, 0.5, 2.0);
  const double infer = predict(spec, params, x);

  const int draws = 20000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double y = forward(spec, params, x, Mode::train, &rng).yhat;
    sum += y;
    sq += y * y;
  }
  const double mean = sum / draws;
  const double se = std::sqrt((sq / draws - mean * mean) / draws);
  EXPECT_LT(std::abs(mean - infer), 3 * se);
}

TEST(Forward, TapReturnsDenseActivation) {
  auto t = small_template();
  t.fc2 = 4;
  const auto spec = build_network(t);
  const auto params = init_params(spec, 1);
  const Tensor x(spec.input_shape, 0.3);
  const auto fwd = forward(spec, params, x, Mode::infer);
  EXPECT_EQ(predict_tap(spec, params, x, 0).shape(), (Shape{6}));
  EXPECT_EQ(predict_tap(spec, params, x, 1).shape(), (Shape{4}));
  EXPECT_EQ(predict_tap(spec, params, x, 0), fwd.tape.tap(spec, 0));
}

TEST(Backward, RejectsForeignTape) {
  const auto spec = build_network(small_template());
  auto params = init_params(spec, 1);
  const auto fwd = forward(spec, params, Tensor(spec.input_shape, 0.2), Mode::infer);
  const auto other = init_params(spec, 2);
  EXPECT_THROW(backward(spec, other, fwd.tape, 1.0), UsageError);
}

TEST(Penalty, AppliesToWeightsOnly) {
  NetworkSpec spec;
  spec.input_shape = {1, 2, 1};
  spec.layers = {LayerSpec::flatten(), LayerSpec::dense_layer(1), LayerSpec::act(Activation::relu)};
  spec.l1 = 0.5;
  spec.l2 = 0.25;
  auto params = init_params(spec, 1);
  params.layers[1].weights = Tensor({1, 2}, std::vector<double>{1.0, -2.0});
  params.layers[1].bias = Tensor({1}, std::vector<double>{10.0});
  EXPECT_DOUBLE_EQ(penalty(spec, params), 0.5 * 3.0 + 0.25 * 5.0);
  auto grads = params.zeros_like();
  add_penalty_gradients(spec, params, grads);
  EXPECT_DOUBLE_EQ(grads.layers[1].weights[0], 0.5 + 0.5);
  EXPECT_DOUBLE_EQ(grads.layers[1].weights[1], -0.5 - 1.0);
  EXPECT_EQ(grads.layers[1].bias[0], 0.0);
}

TEST(GradCheck, SmallArchitectures) {
  std::mt19937_64 rng(4);
  for (auto fn : {Activation::tanh, Activation::relu, Activation::leaky_relu}) {
    auto t = small_template();
    t.conv_fn = fn;
    t.fc_fn = fn;
    t.fc2 = 3;
    t.dilation = 2;
    t.l1 = 1e-3;
    t.l2 = 1e-3;
    const auto spec = build_network(t);
    const auto x = random_tensor(spec.input_shape, rng);
    const auto report = grad_check(spec, x, 8);
    EXPECT_LT(report.max_rel_error, 1e-4) << to_string(fn);
    EXPECT_GT(report.checked, spec.param_count() / 2);
  }
}

TEST(GradCheck, ValidPaddingAndWideKernel) {
  auto t = small_template();
  t.padding = Padding::valid;
  t.kernel_rows = 3;
  t.kernel_cols = 3;
  t.input_shape = {14, 6, 2};
  std::mt19937_64 rng(6);
  const auto spec = build_network(t);
  EXPECT_LT(grad_check(spec, random_tensor(spec.input_shape, rng), 3).max_rel_error, 1e-4);
}

}  // namespace
}  // namespace rulforge
