#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "rulforge/error.hpp"
#include "rulforge/preprocess.hpp"

namespace rulforge {
namespace {

using testing::make_unit;
using testing::tiny_profile;

std::array<std::pair<double, double>, kNumVariables> moments(const Fleet& f) {
  std::array<std::pair<double, double>, kNumVariables> out{};
  std::size_t n = 0;
  for (const auto& u : f.units()) {
    for (const auto& fr : u.frames) {
      ++n;
      for (std::size_t v = 0; v < kNumVariables; ++v) out[v].first += fr.values[v];
    }
  }
  for (auto& m : out) m.first /= static_cast<double>(n);
  for (const auto& u : f.units()) {
    for (const auto& fr : u.frames) {
      for (std::size_t v = 0; v < kNumVariables; ++v) {
        const double d = fr.values[v] - out[v].first;
        out[v].second += d * d;
      }
    }
  }
  for (auto& m : out) m.second = std::sqrt(m.second / static_cast<double>(n));
  return out;
}

TEST(Normalizer, StandardizesTrainingFleet) {
  const auto fleet = synthesize_fleet(6, 1, tiny_profile());
  const auto norm = fit_normalizer(fleet);
  const auto m = moments(apply_normalizer(norm, fleet));
  for (std::size_t v = 0; v < kNumVariables; ++v) {
    if (norm.is_constant(v)) {
      EXPECT_EQ(m[v].first, 0.0) << kVariableNames[v];
      EXPECT_EQ(m[v].second, 0.0) << kVariableNames[v];
    } else {
      EXPECT_LT(std::abs(m[v].first), 1e-9) << kVariableNames[v];
      EXPECT_LT(std::abs(m[v].second - 1.0), 1e-9) << kVariableNames[v];
    }
  }
}

TEST(Normalizer, ConstantColumnMapsToZero) {
  Fleet fleet("f", {make_unit(1, 4, 5, FlightClass::long_haul), make_unit(2, 4, 5, FlightClass::long_haul)});
  const auto norm = fit_normalizer(fleet);
  EXPECT_TRUE(norm.is_constant(kFlightClassIndex));
  const auto applied = apply_normalizer(norm, fleet);
  for (const auto& u : applied.units()) {
    for (const auto& f : u.frames) EXPECT_EQ(f.values[kFlightClassIndex], 0.0);
  }
}

TEST(Normalizer, ValidationKeepsTrainingStatistics) {
  // Validation units run on a shifted signal, so reusing the training
  // statistics must not re-center them.
  Fleet train("t", {make_unit(1, 5, 6), make_unit(2, 5, 6)});
  auto shifted = make_unit(3, 5, 6);
  for (auto& f : shifted.frames) f.values[4] += 5.0;
  Fleet val("v", {shifted});

  const auto norm = fit_normalizer(train);
  const auto reused = moments(apply_normalizer(norm, val));
  const auto refit = moments(apply_normalizer(fit_normalizer(val), val));
  EXPECT_GT(std::abs(reused[4].first), 1.0);
  EXPECT_LT(std::abs(refit[4].first), 1e-9);
  EXPECT_NE(reused[4].first, refit[4].first);
  EXPECT_EQ(norm, fit_normalizer(train));
}

TEST(Labels, AreTulMinusCycle) {
  const auto u = make_unit(1, 4, 5);
  EXPECT_EQ(label_rul(u, 0.0), 3.0);
  EXPECT_EQ(label_rul(u, 7.0), 2.0);
  EXPECT_EQ(label_rul(u, 19.0), 0.0);
  for (std::size_t i = 1; i < u.size(); ++i) EXPECT_LE(label_rul_at_frame(u, i), label_rul_at_frame(u, i - 1));
}

TEST(WindowEnds, CountsAtStrideOneAndTen) {
  EXPECT_EQ(window_ends(300, 161, 1).size(), 139u);
  const auto strided = window_ends(300, 161, 10);
  EXPECT_EQ(strided.size(), 14u);
  EXPECT_EQ(strided.back(), 299u);
  EXPECT_EQ(strided.front(), 169u);
  EXPECT_TRUE(window_ends(161, 161, 1).empty());
  EXPECT_EQ(window_ends(162, 161, 1), (std::vector<std::size_t>{161}));
  EXPECT_THROW(window_ends(10, 0, 1), ArgumentError);
  EXPECT_THROW(window_ends(10, 2, 0), ArgumentError);
}

TEST(Windows, SampleCountLawAndLabels) {
  const auto fleet = synthesize_fleet(7, 4, tiny_profile());
  const auto norm = apply_normalizer(fit_normalizer(fleet), fleet);
  for (std::size_t lw : {5u, 37u, 400u}) {
    std::size_t expect = 0;
    for (const auto& u : fleet.units()) expect += u.size() > lw ? u.size() - lw : 0;
    auto stream = window_samples(norm, lw);
    EXPECT_EQ(stream.size(), expect) << lw;
    int unit = -1;
    double prev = 0.0;
    while (auto s = stream.next()) {
      const auto& u = norm.unit(s->unit_id);
      EXPECT_EQ(s->y, u.total_useful_life_cycles - u.frames[u.frame_index_at(s->t_end)].cycle);
      if (s->unit_id == unit) EXPECT_LE(s->y, prev);
      unit = s->unit_id;
      prev = s->y;
    }
  }
}

TEST(Windows, SlabIsVerbatimFrames) {
  Fleet fleet("f", {make_unit(1, 3, 7)});
  const auto stream = window_samples(fleet, 4, 3);
  const auto& u = fleet.units()[0];
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const auto s = stream.at(i);
    const auto end = stream.refs()[i].end_frame;
    ASSERT_EQ(s.x.size(), 4 * kNumVariables);
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t v = 0; v < kNumVariables; ++v) {
        EXPECT_EQ(s.x[r * kNumVariables + v], u.frames[end - 3 + r].values[v]);
      }
    }
  }
}

TEST(Windows, CopyWindowRepeatsFirstFrameBeforeStart) {
  const auto u = make_unit(1, 2, 3);
  std::vector<double> buf(5 * kNumVariables);
  copy_window(u, 1, 5, buf);
  for (std::size_t r = 0; r < 4; ++r) EXPECT_EQ(buf[r * kNumVariables], u.frames[0].values[0]);
  EXPECT_EQ(buf[4 * kNumVariables], u.frames[1].values[0]);
  std::vector<double> small(3);
  EXPECT_THROW(copy_window(u, 1, 5, small), ShapeError);
}

}  // namespace
}  // namespace rulforge
