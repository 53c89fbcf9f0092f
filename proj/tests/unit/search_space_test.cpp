#include <gtest/gtest.h>

#include <map>
#include <nlohmann/json.hpp>
#include <random>

#include "rulforge/error.hpp"
#include "rulforge/search_space.hpp"

namespace rulforge {
namespace {

TEST(SearchSpace, LevelDimensions) {
  const auto l1 = level_space(Level::l1);
  const auto l2 = level_space(Level::l2);
  EXPECT_TRUE(l1.find("L_w"));
  EXPECT_FALSE(l1.find("step"));
  EXPECT_FALSE(l2.find("L_w"));
  EXPECT_TRUE(l2.find("fc_2"));
  EXPECT_EQ(l1.dim("K_s").choices, (std::vector<std::string>{"3x3", "10x1", "10x3"}));
  EXPECT_EQ(l1.dim("lr").kind, DimKind::log_real);
  EXPECT_EQ(l2.size(), l1.size() + 2);
}

TEST(SearchSpace, DrawsStayInDomainAndCoverKernels) {
  for (Level level : {Level::l1, Level::l2}) {
    const auto space = level_space(level);
    std::mt19937_64 rng(1);
    std::map<std::string, int> kernels;
    for (int i = 0; i < 500; ++i) {
      const auto p = space.sample(rng);
      ASSERT_TRUE(space.contains(p));
      const auto hp = to_hyperparams(space, p, level);
      EXPECT_EQ(to_point(space, hp), p);
      ++kernels[to_string(hp.kernel)];
      EXPECT_GE(hp.lr, 1e-5);
      EXPECT_LE(hp.lr, 1e-3);
    }
    EXPECT_EQ(kernels.size(), 3u);
  }
}

TEST(SearchSpace, LogDimensionIsLogUniform) {
  const auto space = level_space(Level::l1);
  const auto i = space.index_of("lr");
  std::mt19937_64 rng(2);
  int below = 0;
  for (int n = 0; n < 4000; ++n) below += space.sample(rng)[i] < 1e-4 ? 1 : 0;
  EXPECT_NEAR(below / 4000.0, 0.5, 0.04);
}

TEST(SearchSpace, EncodeDecodeRoundTrip) {
  const auto space = level_space(Level::l2);
  std::mt19937_64 rng(3);
  for (int n = 0; n < 100; ++n) {
    const auto p = space.sample(rng);
    const auto u = space.encode(p);
    ASSERT_EQ(u.size(), space.encoded_size());
    for (double v : u) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    const auto back = space.decode(u);
    for (std::size_t d = 0; d < p.size(); ++d) EXPECT_NEAR(back[d], p[d], 1e-9 * std::max(1.0, std::abs(p[d])));
  }
}

TEST(SearchSpace, DecodeClampsAndRounds) {
  SearchSpace s({{"n", DimKind::integer, 1, 4, {}}, {"c", DimKind::categorical, 0, 0, {"a", "b", "c"}}});
  const std::vector<double> u{1.7, 0.1, 0.8, 0.3};
  EXPECT_EQ(s.decode(u), (Point{4, 1}));
}

TEST(SearchSpace, OverridesValidate) {
  auto s = level_space(Level::l1);
  s.set_range("fc_1", 8, 16);
  EXPECT_EQ(s.dim("fc_1").lo, 8);
  s.set_choices("K_s", {"3x3"});
  EXPECT_EQ(s.dim("K_s").choices.size(), 1u);
  EXPECT_THROW(s.set_range("K_s", 0, 1), ConfigError);
  EXPECT_THROW(s.set_range("fc_1", 5, 2), ConfigError);
  EXPECT_THROW(s.set_range("fc_1", 1.5, 3), ConfigError);
  EXPECT_THROW(s.set_range("lr", 0, 1), ConfigError);
  EXPECT_THROW(s.set_choices("conv_activation", {"sigmoid"}), ConfigError);
  EXPECT_THROW(s.set_range("nope", 0, 1), ConfigError);
}

TEST(SearchSpace, PointJsonRoundTrip) {
  const auto space = level_space(Level::l2);
  std::mt19937_64 rng(4);
  const auto p = space.sample(rng);
  EXPECT_EQ(space.point_from_json(space.point_to_json(p)), p);
}

TEST(HyperParams, ReferenceConfigurationsAreInDomain) {
  EXPECT_NO_THROW(to_point(level_space(Level::l1), reference_level1_hyperparams()));
  EXPECT_NO_THROW(to_point(level_space(Level::l2), reference_level2_hyperparams()));
  auto hp = reference_level1_hyperparams();
  hp.window = 40;
  EXPECT_THROW(to_point(level_space(Level::l1), hp), ConfigError);
}

TEST(HyperParams, JsonRoundTrip) {
  for (const auto& hp : {reference_level1_hyperparams(), reference_level2_hyperparams()}) {
    const nlohmann::json j = hp;
    EXPECT_EQ(j.get<HyperParams>(), hp);
  }
  nlohmann::json j = reference_level2_hyperparams();
  j.erase("step");
  EXPECT_THROW(j.get<HyperParams>(), ConfigError);
}

TEST(HyperParams, TemplateRealizesLevel) {
  const auto l1 = make_template(reference_level1_hyperparams(), {161, 20, 1}, 8);
  EXPECT_EQ(l1.fc2, 0u);
  EXPECT_EQ(l1.dilation, 2u);
  EXPECT_EQ(l1.kernel_rows, 10u);
  const auto l2 = make_template(reference_level2_hyperparams(), {100, 247, 3}, 8);
  EXPECT_EQ(l2.fc2, 105u);
}

TEST(KernelSize, StringRoundTrip) {
  EXPECT_EQ(kernel_from_string("10x3"), (KernelSize{10, 3}));
  EXPECT_EQ(to_string(KernelSize{3, 3}), "3x3");
  EXPECT_THROW(kernel_from_string("10"), ArgumentError);
}

}  // namespace
}  // namespace rulforge
