#include <gtest/gtest.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <sstream>

#include "fixtures.hpp"
#include "rulforge/error.hpp"

namespace rulforge {
namespace {

using testing::quick_context;
using testing::shrunk_l1;
using testing::shrunk_l2;
using testing::tiny_profile;

ScoreReport with_combined(double s) {
  ScoreReport r;
  r.combined = s;
  return r;
}

TEST(FoldStatistics, MeanAndPopulationStd) {
  const std::vector<ScoreReport> folds{with_combined(5.9), with_combined(6.1), with_combined(6.3),
                                       with_combined(6.5), with_combined(6.7)};
  const auto [mean, sd] = fold_statistics(folds);
  EXPECT_NEAR(mean, 6.30, 1e-12);
  EXPECT_NEAR(sd, std::sqrt(0.08), 1e-12);
  const std::vector<ScoreReport> one{with_combined(4.2)};
  EXPECT_EQ(fold_statistics(one).second, 0.0);
  EXPECT_THROW(fold_statistics({}), ArgumentError);
}

class CrossValidation : public ::testing::Test {
 protected:
  Fleet fleet = synthesize_fleet(8, 21, tiny_profile());
  FoldPlan plan = make_folds(fleet, 2, 0.3, 5);
};

TEST_F(CrossValidation, ProducesOneModelPerFoldAndIsDeterministic) {
  const auto ctx = quick_context(Level::l1, 3);
  const auto a = cross_validate(shrunk_l1(), fleet, plan, ctx);
  const auto b = cross_validate(shrunk_l1(), fleet, plan, ctx);
  ASSERT_EQ(a.folds.size(), 2u);
  ASSERT_EQ(a.trial.folds.size(), 2u);
  for (std::size_t f = 0; f < 2; ++f) {
    EXPECT_EQ(a.trial.folds[f], b.trial.folds[f]);
    EXPECT_EQ(a.folds[f].model, b.folds[f].model);
    EXPECT_TRUE(a.folds[f].model.params.first_moment.empty());
    const auto split = split_fold(plan, f, fleet);
    EXPECT_EQ(a.folds[f].normalizer, fit_normalizer(split.train));
  }
  EXPECT_EQ(a.trial.mean, fold_statistics(a.trial.folds).first);
  EXPECT_TRUE(std::isfinite(a.trial.mean));
  EXPECT_FALSE(a.trial.failed);
}

TEST_F(CrossValidation, ParallelFoldsMatchSerial) {
  auto serial = quick_context(Level::l1, 3);
  auto parallel = serial;
  parallel.threads = 2;
  const auto a = cross_validate(shrunk_l1(), fleet, plan, serial);
  const auto b = cross_validate(shrunk_l1(), fleet, plan, parallel);
  for (std::size_t f = 0; f < 2; ++f) EXPECT_EQ(a.folds[f].model, b.folds[f].model);
}

TEST_F(CrossValidation, ErrorsNameTheFold) {
  auto hp = shrunk_l1();
  hp.window = 100000;
  try {
    cross_validate(hp, fleet, plan, quick_context(Level::l1));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), Error::Category::data);
    EXPECT_EQ(std::string(e.what()).rfind("fold 0: ", 0), 0u) << e.what();
  }
}

TEST_F(CrossValidation, LevelTwoNeedsMatchingLevelOne) {
  EXPECT_THROW(cross_validate(shrunk_l2(), fleet, plan, quick_context(Level::l2)), ConfigError);
  EXPECT_THROW(cross_validate(shrunk_l2(), fleet, plan, quick_context(Level::l1)), ConfigError);

  const auto l1ctx = quick_context(Level::l1);
  const auto l1 = make_ensemble(cross_validate(shrunk_l1(), fleet, plan, l1ctx), plan, l1ctx);
  auto ctx = quick_context(Level::l2);
  ctx.l1 = &l1;
  const auto cv = cross_validate(shrunk_l2(), fleet, plan, ctx);
  const auto l2 = make_ensemble(cv, plan, ctx);
  EXPECT_TRUE(l2.has_l2());
  EXPECT_EQ(l2.members[0].l1, l1.members[0].l1);
  EXPECT_EQ(l2.config.step, 8u);

  const auto other = make_folds(fleet, 2, 0.3, 6);
  EXPECT_THROW(cross_validate(shrunk_l2(), fleet, other, ctx), ConfigError);
}

TEST(TrialJson, HistoryRoundTrip) {
  Trial ok;
  ok.index = 0;
  ok.origin = TrialOrigin::seed;
  ok.hp = reference_level1_hyperparams();
  ok.folds = {with_combined(3.0), with_combined(4.0)};
  ok.best_epochs = {2, 5};
  ok.mean = 3.5;
  ok.std = 0.5;
  Trial bad;
  bad.index = 1;
  bad.hp = reference_level1_hyperparams();
  bad.failed = true;
  bad.mean = INFINITY;
  bad.error = "fold 1: diverged";
  std::stringstream ss;
  write_trial(ss, ok);
  write_trial(ss, bad);
  const auto back = read_history(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].hp, ok.hp);
  EXPECT_EQ(back[0].origin, TrialOrigin::seed);
  EXPECT_EQ(back[0].mean, 3.5);
  EXPECT_EQ(back[0].best_epochs, ok.best_epochs);
  EXPECT_TRUE(back[1].failed);
  EXPECT_TRUE(std::isinf(back[1].mean));
  EXPECT_EQ(back[1].error, bad.error);
}

TEST(TrialJson, RejectsOutOfOrderAndMalformedLines) {
  Trial t;
  t.index = 1;
  t.hp = reference_level1_hyperparams();
  std::stringstream ss;
  write_trial(ss, t);
  EXPECT_THROW(read_history(ss), DataError);
  std::stringstream junk("{not json}\n");
  EXPECT_THROW(read_history(junk), ParseError);
}

}  // namespace
}  // namespace rulforge
