#pragma once

#include "oracles.hpp"
#include "rulforge/cross_validation.hpp"
#include "rulforge/search_space.hpp"

namespace rulforge::testing {

/// Level-1 configuration small enough to train in well under a second.
inline HyperParams shrunk_l1() {
  HyperParams hp = reference_level1_hyperparams();
  hp.window = 16;
  hp.batch_size = 32;
  hp.block_size = 1;
  hp.conv_blocks = 1;
  hp.kernel = {3, 3};
  hp.dilation = 1;
  hp.fc1 = 6;
  hp.dropout = 0.0;
  hp.lr = 1e-3;
  return hp;
}

inline HyperParams shrunk_l2() {
  HyperParams hp = shrunk_l1();
  hp.level = Level::l2;
  hp.window = HyperParams{}.window;
  hp.fc2 = 4;
  hp.channels = 2;
  hp.step = 8;
  hp.kernel = {3, 1};
  return hp;
}

inline LevelContext quick_context(Level level, std::uint64_t seed = 0) {
  LevelContext ctx;
  ctx.level = level;
  ctx.filters = 2;
  ctx.max_epochs = 2;
  ctx.train_stride = 8;
  ctx.eval_stride = 8;
  ctx.seed = seed;
  ctx.threads = 1;
  return ctx;
}

/// Search space narrowed to nets that train in a few seconds.
inline SearchSpace shrunk_space(Level level) {
  auto s = level_space(level);
  if (level == Level::l1) s.set_range("L_w", 16, 32);
  s.set_range("C_bs", 1, 2);
  s.set_range("N_cb", 1, 2);
  s.set_range("fc_1", 8, 16);
  s.set_range("d_rate", 1, 2);
  s.set_choices("K_s", {"3x3", "10x1"});
  if (level == Level::l2) {
    s.set_range("fc_2", 4, 8);
    s.set_range("channels", 1, 2);
    s.set_range("step", 8, 32);
  }
  return s;
}

}  // namespace rulforge::testing
