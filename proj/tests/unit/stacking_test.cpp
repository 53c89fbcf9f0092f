#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "rulforge/ensemble_io.hpp"
#include "rulforge/error.hpp"
#include "rulforge/stacking.hpp"

namespace rulforge {
namespace {

using testing::make_unit;
using testing::shrunk_l1;
using testing::shrunk_l2;

Model l1_model(std::uint64_t seed) {
  Model m;
  m.spec = build_network(make_template(shrunk_l1(), {16, kNumVariables, 1}, 2));
  m.params = init_params(m.spec, seed);
  return m;
}

Model l2_model(std::uint64_t seed) {
  Model m;
  m.spec = build_network(make_template(shrunk_l2(), l2_input_shape(6, 2), 2));
  m.params = init_params(m.spec, seed);
  return m;
}

FoldEnsemble ensemble(std::size_t k, bool with_l2) {
  const Fleet fleet("f", {make_unit(1, 6, 12), make_unit(2, 5, 10)});
  FoldEnsemble e;
  e.config = {16, 0, 2, 8};
  e.plan.k = k;
  for (std::size_t m = 0; m < k; ++m) {
    EnsembleMember member{l1_model(m + 1), fit_normalizer(fleet), std::nullopt};
    if (with_l2) member.l2 = l2_model(m + 10);
    e.members.push_back(std::move(member));
    e.plan.validation.push_back({1});
    e.plan.training.push_back({2});
  }
  return e;
}

EncodingSeries ramp_series(std::size_t n, double dt) {
  EncodingSeries s;
  s.width = 1;
  for (std::size_t i = 0; i < n; ++i) {
    s.times.push_back(100.0 + static_cast<double>(i) * dt);
    s.frames.push_back(i);
    s.values.push_back(static_cast<double>(i));
  }
  return s;
}

TEST(Encodings, OnePerWindowWithTapWidth) {
  const auto unit = make_unit(4, 5, 10);
  const auto model = l1_model(1);
  const Fleet fleet("f", {unit});
  const auto norm = fit_normalizer(fleet);
  const auto s = extract_encodings(model, norm, unit, {16, 0, true}, 1);
  EXPECT_EQ(s.size(), unit.size() - 16);
  EXPECT_EQ(s.width, shrunk_l1().fc1);
  EXPECT_EQ(s.values.size(), s.size() * s.width);
  EXPECT_EQ(s.frames.back(), unit.size() - 1);

  const auto normalized = apply_normalizer(norm, fleet).units()[0];
  Tensor x(model.spec.input_shape);
  copy_window(normalized, static_cast<std::ptrdiff_t>(s.frames[3]), 16, x.values());
  const auto direct = predict_tap(model.spec, model.params, x, 0);
  for (std::size_t w = 0; w < s.width; ++w) EXPECT_EQ(s.at(3)[w], direct[w]);
}

TEST(Encodings, ShortUnitPadsOrFails) {
  const auto unit = make_unit(4, 2, 5);
  const Fleet fleet("f", {unit});
  const auto norm = fit_normalizer(fleet);
  const auto s = extract_encodings(l1_model(1), norm, unit, {16, 0, true}, 1);
  EXPECT_EQ(s.size(), 1u);
  EXPECT_EQ(s.frames[0], unit.size() - 1);
  EXPECT_THROW(extract_encodings(l1_model(1), norm, unit, {16, 0, false}, 1), DataError);
}

TEST(AssembleL2, ContiguousSliceAtStepOne) {
  const auto s = ramp_series(150, 1.0);
  const auto x = assemble_l2_input(s, s.times.back(), 1, 1);
  EXPECT_EQ(x.shape(), (Shape{100, 1, 1}));
  for (std::size_t j = 0; j < 100; ++j) EXPECT_EQ(x.at(j, 0, 0), 149.0 - static_cast<double>(j));
  EXPECT_EQ(clamped_entries(s, s.times.back(), 1, 1), 0u);
}

TEST(AssembleL2, ChannelsContinueFurtherBack) {
  const auto s = ramp_series(400, 1.0);
  const auto x = assemble_l2_input(s, s.times.back(), 3, 1);
  EXPECT_EQ(x.shape(), (Shape{100, 1, 3}));
  EXPECT_EQ(x.at(0, 0, 1), 299.0);
  EXPECT_EQ(x.at(99, 0, 2), 100.0);
}

TEST(AssembleL2, EarlyQueriesClampToFirstEncoding) {
  const auto s = ramp_series(30, 1.0);
  const auto x = assemble_l2_input(s, s.times[5], 3, 989);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t j = 0; j < 100; ++j) {
      if (c == 0 && j == 0) continue;
      EXPECT_EQ(x.at(j, 0, c), 0.0);
    }
  }
  EXPECT_EQ(x.at(0, 0, 0), 5.0);
  EXPECT_EQ(clamped_entries(s, s.times[5], 3, 989), 299u);
  EXPECT_THROW(assemble_l2_input(EncodingSeries{}, 0.0, 1, 1), DataError);
}

TEST(AssembleL2, ClampedEntriesFormOldestSuffix) {
  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t channels = 1 + rng() % 3, step = 1 + rng() % 20;
    const auto s = ramp_series(50 + rng() % 400, 1.0 + static_cast<double>(rng() % 3));
    const double t_end = s.times[rng() % s.size()];
    const std::size_t n = channels * kEncodingsPerChannel;
    std::vector<bool> clamped(n);
    for (std::size_t i = 0; i < n; ++i) clamped[i] = t_end - static_cast<double>(i * step) < s.times.front();
    const auto first = std::find(clamped.begin(), clamped.end(), true);
    EXPECT_TRUE(std::all_of(first, clamped.end(), [](bool b) { return b; }));
    EXPECT_EQ(clamped_entries(s, t_end, channels, step), static_cast<std::size_t>(clamped.end() - first));
    if (t_end - s.times.front() >= static_cast<double>(n * step)) {
      EXPECT_EQ(clamped_entries(s, t_end, channels, step), 0u);
    }
  }
}

TEST(L2QueryFrames, StepGridNewestLast) {
  EXPECT_EQ(l2_query_frames(100, 16, 1, 30), (std::vector<std::size_t>{40, 70, 100}));
  EXPECT_EQ(l2_query_frames(10, 16, 1, 30), (std::vector<std::size_t>{10}));
  EXPECT_EQ(l2_query_frames(1000, 16, 1, 1).size(), 100u);
}

TEST(MemberInterval, ThreeSigmaFixture) {
  const std::vector<double> p{10, 12, 11, 13, 14};
  const auto i = member_interval(p);
  EXPECT_EQ(i.mean, 12.0);
  EXPECT_NEAR(i.lo, 12 - 3 * std::sqrt(2.0), 1e-9);
  EXPECT_NEAR(i.hi, 12 + 3 * std::sqrt(2.0), 1e-9);
  EXPECT_NEAR(i.lo, 7.757, 5e-4);
  EXPECT_NEAR(i.hi, 16.243, 5e-4);
}

TEST(MemberInterval, DegenerateAndFloored) {
  const std::vector<double> one{4.5};
  const auto a = member_interval(one);
  EXPECT_EQ(a.lo, 4.5);
  EXPECT_EQ(a.hi, 4.5);
  const std::vector<double> same{0.1, 0.1, 0.1};
  const auto b = member_interval(same);
  EXPECT_EQ(b.mean, 0.1);
  EXPECT_EQ(b.lo, 0.1);
  const std::vector<double> low{0, 0, 6};
  EXPECT_EQ(member_interval(low).lo, 0.0);
  EXPECT_THROW(member_interval({}), ArgumentError);
}

TEST(EnsemblePredict, MeanIsMemberAverage) {
  for (bool l2 : {false, true}) {
    const auto e = ensemble(3, l2);
    const auto unit = make_unit(1, 6, 12);
    for (double t : {0.0, 20.0, 71.0}) {
      const auto p = ensemble_predict(e, unit, t);
      ASSERT_EQ(p.members.size(), 3u);
      double sum = 0.0;
      for (double v : p.members) {
        EXPECT_GE(v, 0.0);
        sum += v;
      }
      EXPECT_EQ(p.interval.mean, sum / 3.0);
      EXPECT_GE(p.interval.lo, 0.0);
      EXPECT_LE(p.interval.lo, p.interval.mean);
      EXPECT_GE(p.interval.hi, p.interval.mean);
    }
  }
}

TEST(EnsemblePredict, ErrorsNameTheMember) {
  auto e = ensemble(2, false);
  e.members[1].l1.spec = build_network(make_template(shrunk_l1(), {8, kNumVariables, 1}, 2));
  e.members[1].l1.params = init_params(e.members[1].l1.spec, 1);
  try {
    ensemble_predict(e, make_unit(1, 6, 12), 40.0);
    FAIL() << "expected an error";
  } catch (const Error& ex) {
    EXPECT_EQ(std::string(ex.what()).rfind("ensemble member 1: ", 0), 0u) << ex.what();
  }
}

TEST(ScorePredictions, EnsembleNeverWorseThanMemberMean) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 100);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = 1 + rng() % 20, k = 1 + rng() % 6;
    std::vector<double> truth(n);
    for (auto& v : truth) v = u(rng);
    std::vector<std::vector<double>> preds(k, std::vector<double>(n));
    for (auto& p : preds) {
      for (auto& v : p) v = u(rng);
    }
    const auto s = score_predictions(truth, preds);
    double mean = 0.0;
    for (const auto& r : s.members) mean += r.combined / static_cast<double>(k);
    EXPECT_LE(s.ensemble.combined, mean + 1e-9 * std::max(1.0, mean));
  }
  const std::vector<double> truth{3, 4};
  const auto same = score_predictions(truth, {{5, 1}, {5, 1}});
  EXPECT_EQ(same.ensemble, same.members[0]);
}

TEST(ScoreEnsemble, UsesUnitLabels) {
  const auto e = ensemble(2, false);
  const Fleet fleet("f", {make_unit(1, 6, 12), make_unit(2, 5, 10)});
  const auto pts = final_time_points(fleet);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_EQ(pts[1].t_s, 49.0);
  const auto s = score_ensemble(e, fleet, pts);
  EXPECT_EQ(s.members.size(), 2u);
  EXPECT_EQ(s.ensemble.m, 2u);
}

class EnsembleIo : public ::testing::Test {
 protected:
  std::filesystem::path dir = std::filesystem::temp_directory_path() / "rulforge_ensemble_io_test";
  void SetUp() override { std::filesystem::remove_all(dir); }
  void TearDown() override { std::filesystem::remove_all(dir); }

  static std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }
};

TEST_F(EnsembleIo, RoundTripsBitExactly) {
  for (bool l2 : {false, true}) {
    auto e = ensemble(2, l2);
    e.l1_hyperparams = shrunk_l1();
    if (l2) e.l2_hyperparams = shrunk_l2();
    e.l1_trial = 4;
    const auto manifest = dir / (l2 ? "two" : "one") / "manifest.json";
    save_ensemble(e, manifest);
    const auto back = load_ensemble(manifest);
    EXPECT_EQ(back, e);
    const auto first = slurp(manifest);
    const auto model = slurp(manifest.parent_path() / "member_0_l1.rfm");
    save_ensemble(back, manifest);
    EXPECT_EQ(slurp(manifest), first);
    EXPECT_EQ(slurp(manifest.parent_path() / "member_0_l1.rfm"), model);
  }
}

TEST_F(EnsembleIo, MissingMemberFileIsNamed) {
  const auto manifest = dir / "manifest.json";
  save_ensemble(ensemble(2, true), manifest);
  std::filesystem::remove(dir / "member_1_l2.rfm");
  try {
    load_ensemble(manifest);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("member_1_l2.rfm"), std::string::npos);
  }
}

TEST_F(EnsembleIo, RejectsForeignManifest) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "m.json") << R"({"format": "other"})";
  EXPECT_THROW(load_ensemble(dir / "m.json"), SchemaError);
  EXPECT_THROW(load_ensemble(dir / "absent.json"), DataError);
}

TEST(PredictionCsv, RoundTripAndRounding) {
  const std::vector<PredictionRow> rows{{1, 12.5, {10.25, 7.0, 13.5}, {9.5, 11.0}},
                                        {7, 3.0, {0.1 + 0.2, 0.0, 1.0 / 3.0}, {0.5, 0.1}}};
  std::stringstream ss;
  write_predictions(ss, rows);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "unit,t_s,rul_mean,rul_lo,rul_hi,member_0,member_1");
  EXPECT_EQ(read_predictions(ss), rows);

  std::stringstream rounded;
  write_predictions(rounded, rows, true);
  const auto back = read_predictions(rounded);
  EXPECT_EQ(back[0].rul.mean, 10.0);
  EXPECT_EQ(back[0].members[0], 10.0);
  EXPECT_EQ(back[0].t_s, 12.5);
}

TEST(PredictionCsv, ReportsBadRows) {
  std::stringstream ss("unit,t_s,rul_mean,rul_lo,rul_hi\n1,2,3,4,5\n1,2,x,4,5\n");
  try {
    read_predictions(ss);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 3u);
  }
  std::stringstream header("unit,time,rul_mean\n");
  EXPECT_THROW(read_predictions(header), SchemaError);
}

TEST(TruthCsv, RoundTrip) {
  const std::vector<TruthRow> rows{{1, 10.0, 4.0, FlightClass::short_haul}, {2, 3.5, 0.0, FlightClass::long_haul}};
  std::stringstream ss;
  write_truth(ss, rows);
  EXPECT_EQ(read_truth(ss), rows);
  std::stringstream bad("unit,t_s,rul,flight_class\n1,1,1,9\n");
  EXPECT_THROW(read_truth(bad), ParseError);
}

}  // namespace
}  // namespace rulforge
