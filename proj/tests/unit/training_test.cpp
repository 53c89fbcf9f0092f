#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rulforge/error.hpp"
#include "rulforge/optimizer.hpp"
#include "rulforge/training.hpp"

namespace rulforge {
namespace {

using testing::random_tensor;

NetworkSpec tiny_net() {
  NetworkSpec s;
  s.input_shape = {3, 2, 1};
  s.layers = {LayerSpec::flatten(), LayerSpec::dense_layer(4), LayerSpec::act(Activation::tanh),
              LayerSpec::dense_layer(1), LayerSpec::act(Activation::relu)};
  return s;
}

TensorSource tiny_data(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  TensorSource src({3, 2, 1});
  for (std::size_t i = 0; i < n; ++i) {
    auto x = random_tensor({3, 2, 1}, rng);
    const double y = 2.0 + x[0] - 0.5 * x[3];
    src.add(std::move(x), y);
  }
  return src;
}

TrainRecord run_with_losses(const std::vector<double>& losses, TrainConfig cfg) {
  const auto train = tiny_data(1, 8);
  const auto val = tiny_data(2, 4);
  TrainHooks hooks;
  hooks.val_loss_override = [&](int epoch, double) { return losses.at(static_cast<std::size_t>(epoch - 1)); };
  return train_model(tiny_net(), cfg, train, val, hooks).record;
}

TEST(Plateau, EarlyStopFixture) {
  TrainConfig cfg;
  cfg.max_epochs = 100;
  cfg.early_stop_patience = 8;
  const auto rec = run_with_losses({5, 4, 4, 4, 4, 4, 4, 4, 4, 4}, cfg);
  EXPECT_EQ(rec.stopped_epoch, 10);
  EXPECT_EQ(rec.best_epoch, 2);
  EXPECT_EQ(rec.best_val_loss, 4.0);
  EXPECT_EQ(rec.val_loss.size(), 10u);
}

TEST(Plateau, LearningRateFixture) {
  TrainConfig cfg;
  cfg.lr = 0.01;
  cfg.max_epochs = 5;
  cfg.lr_patience = 3;
  const auto rec = run_with_losses({5, 4, 4.1, 4.2, 4.3}, cfg);
  ASSERT_EQ(rec.lr.size(), 5u);
  for (std::size_t e = 0; e < 4; ++e) EXPECT_EQ(rec.lr[e], 0.01) << e;
  EXPECT_EQ(rec.lr[4], 0.01 * 0.1);
}

TEST(Plateau, TiesDoNotCountAsImprovement) {
  TrainConfig cfg;
  cfg.early_stop_patience = 2;
  cfg.lr_patience = 10;
  PlateauSchedule s(cfg, 1.0);
  EXPECT_TRUE(s.update(3.0).improved);
  EXPECT_FALSE(s.update(3.0).improved);
  const auto d = s.update(3.0);
  EXPECT_TRUE(d.stop);
  EXPECT_EQ(s.best_epoch(), 1);
}

TEST(Plateau, LearningRateRespectsFloor) {
  TrainConfig cfg;
  cfg.lr_patience = 1;
  cfg.early_stop_patience = 100;
  cfg.lr_floor = 1e-3;
  PlateauSchedule s(cfg, 0.05);
  s.update(1.0);
  for (int i = 0; i < 5; ++i) s.update(2.0);
  EXPECT_EQ(s.lr(), 1e-3);
}

TEST(RmseLoss, GradientMatchesCentralDifferences) {
  const std::vector<double> y{1.0, 4.0, -2.0};
  std::vector<double> yhat{1.5, 3.0, 0.0};
  const auto l = rmse_loss(y, yhat);
  for (std::size_t i = 0; i < y.size(); ++i) {
    auto up = yhat, down = yhat;
    up[i] += 1e-6;
    down[i] -= 1e-6;
    EXPECT_NEAR(l.grad[i], (rmse_loss(y, up).loss - rmse_loss(y, down).loss) / 2e-6, 1e-8);
  }
  const auto zero = rmse_loss(y, y);
  EXPECT_EQ(zero.loss, 0.0);
  for (double g : zero.grad) EXPECT_EQ(g, 0.0);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  const auto spec = tiny_net();
  auto params = init_params(spec, 1);
  const auto before = params;
  auto grads = params.zeros_like();
  grads.layers[1].weights[0] = 0.3;
  grads.layers[1].weights[1] = -2.0;
  adam_update(params, grads, 0.01, 1);
  EXPECT_NEAR(params.layers[1].weights[0], before.layers[1].weights[0] - 0.01, 1e-9);
  EXPECT_NEAR(params.layers[1].weights[1], before.layers[1].weights[1] + 0.01, 1e-9);
  EXPECT_EQ(params.layers[1].weights[2], before.layers[1].weights[2]);
  EXPECT_GT(params.generation, before.generation);
  EXPECT_EQ(adam_step(before, grads, 0.01, 1).layers, params.layers);
}

TEST(TrainModel, DeterministicAndReproducesBestLoss) {
  TrainConfig cfg;
  cfg.max_epochs = 15;
  cfg.batch_size = 3;
  cfg.lr = 0.02;
  cfg.seed = 4;
  const auto train = tiny_data(1, 24);
  const auto val = tiny_data(2, 8);
  const auto a = train_model(tiny_net(), cfg, train, val);
  const auto b = train_model(tiny_net(), cfg, train, val);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.record.val_loss, b.record.val_loss);
  EXPECT_EQ(a.record.train_loss, b.record.train_loss);

  const auto yhat = predict_all(tiny_net(), a.params, val);
  double acc = 0.0;
  for (std::size_t i = 0; i < yhat.size(); ++i) acc += (yhat[i] - val.label(i)) * (yhat[i] - val.label(i));
  EXPECT_EQ(std::sqrt(acc / static_cast<double>(yhat.size())), a.record.best_val_loss);
  EXPECT_LT(a.record.best_val_loss, a.record.val_loss.front() + 1e-12);
}

TEST(TrainModel, NonFiniteLossRaisesWithEpoch) {
  TrainConfig cfg;
  cfg.max_epochs = 5;
  TrainHooks hooks;
  hooks.val_loss_override = [](int epoch, double v) { return epoch == 3 ? NAN : v; };
  try {
    train_model(tiny_net(), cfg, tiny_data(1, 4), tiny_data(2, 2), hooks);
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_EQ(e.epoch(), 3);
  }
}

TEST(TrainModel, RejectsShapeMismatch) {
  TensorSource wrong({2, 2, 1});
  wrong.add(Tensor({2, 2, 1}), 1.0);
  EXPECT_THROW(train_model(tiny_net(), {}, wrong, wrong), ShapeError);
}

}  // namespace
}  // namespace rulforge
