#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"
#include "rulforge/data.hpp"
#include "rulforge/error.hpp"

namespace rulforge {
namespace {

using testing::make_unit;
using testing::tiny_profile;

TEST(Fleet, SortsUnitsAndRejectsDuplicates) {
  Fleet f("f", {make_unit(3, 2, 5), make_unit(1, 2, 5)});
  EXPECT_EQ(f.unit_ids(), (std::vector<int>{1, 3}));
  EXPECT_TRUE(f.contains(3));
  EXPECT_FALSE(f.contains(2));
  EXPECT_THROW(f.unit(2), ArgumentError);
  EXPECT_EQ(f.total_frames(), 20u);
  EXPECT_THROW(Fleet("f", {make_unit(1, 2, 5), make_unit(1, 2, 5)}), ArgumentError);
}

TEST(Fleet, SplitUnitsIsAPartition) {
  Fleet f("f", {make_unit(1, 2, 4), make_unit(2, 2, 4), make_unit(3, 2, 4)});
  const std::vector<int> ids{2};
  const auto [a, b] = split_units(f, ids);
  EXPECT_EQ(a.unit_ids(), (std::vector<int>{2}));
  EXPECT_EQ(b.unit_ids(), (std::vector<int>{1, 3}));
}

TEST(UnitRecord, FrameIndexAtPicksActiveFrame) {
  const auto u = make_unit(1, 3, 10);
  EXPECT_EQ(u.frame_index_at(0.0), 0u);
  EXPECT_EQ(u.frame_index_at(12.5), 12u);
  EXPECT_EQ(u.frame_index_at(29.0), 29u);
  EXPECT_THROW(u.frame_index_at(-1.0), ArgumentError);
  EXPECT_THROW(u.frame_index_at(30.0), ArgumentError);
}

TEST(UnitRecord, ValidateCatchesBrokenInvariants) {
  auto u = make_unit(1, 3, 4);
  EXPECT_NO_THROW(u.validate());
  auto backwards = u;
  backwards.frames[5].time_s = backwards.frames[4].time_s;
  EXPECT_THROW(backwards.validate(), OrderingError);
  auto tul = u;
  tul.total_useful_life_cycles = 4;
  EXPECT_THROW(tul.validate(), DataError);
}

TEST(FleetCsv, RoundTripsExactly) {
  const auto fleet = synthesize_fleet(4, 11, tiny_profile());
  std::stringstream ss;
  write_fleet_csv(fleet, ss);
  const auto back = read_fleet_csv(ss, fleet.name());
  EXPECT_EQ(back, fleet);
}

TEST(FleetCsv, HeaderIsFixed) {
  std::stringstream ss("unit,cycle,time_s,alt\n");
  EXPECT_THROW(read_fleet_csv(ss), SchemaError);
}

TEST(FleetCsv, ReportsBadRow) {
  std::string text(fleet_csv_header());
  text += '\n';
  std::string zeros;
  for (std::size_t v = 0; v < kNumVariables; ++v) zeros += v == kFlightClassIndex ? ",1" : ",0";
  text += "1,1,0" + zeros + "\n";
  text += "1,1,abc" + zeros + "\n";
  std::stringstream ss(text);
  try {
    read_fleet_csv(ss);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 2u);
    EXPECT_NE(std::string(e.what()).find("time_s"), std::string::npos);
  }
}

TEST(Synth, IsPureInItsArguments) {
  EXPECT_EQ(synthesize_fleet(5, 3, tiny_profile()), synthesize_fleet(5, 3, tiny_profile()));
  EXPECT_NE(synthesize_fleet(5, 3, tiny_profile()), synthesize_fleet(5, 4, tiny_profile()));
}

TEST(Synth, UnitsSatisfyInvariants) {
  const auto p = tiny_profile();
  const auto fleet = synthesize_fleet(12, 5, p);
  ASSERT_EQ(fleet.size(), 12u);
  for (const auto& u : fleet.units()) {
    EXPECT_NO_THROW(u.validate());
    EXPECT_GE(u.total_useful_life_cycles, p.tul_min);
    EXPECT_LE(u.total_useful_life_cycles, p.tul_max);
    EXPECT_EQ(u.frames.back().cycle, u.total_useful_life_cycles);
    for (const auto& f : u.frames) {
      EXPECT_EQ(f.values[kFlightClassIndex], to_int(u.flight_class));
    }
  }
}

TEST(Synth, LastCycleIsTulAndFrameCountsAddUp) {
  const auto fleet = synthesize_fleet(6, 8, tiny_profile());
  for (const auto& u : fleet.units()) {
    std::vector<std::size_t> per_cycle(static_cast<std::size_t>(u.total_useful_life_cycles) + 1, 0);
    for (const auto& f : u.frames) ++per_cycle[static_cast<std::size_t>(f.cycle)];
    std::size_t sum = 0;
    for (std::size_t c = 1; c < per_cycle.size(); ++c) {
      EXPECT_GT(per_cycle[c], 0u);
      sum += per_cycle[c];
    }
    EXPECT_EQ(sum, u.size());
  }
}

TEST(TruncateFleet, CutsAtRecordedRul) {
  const auto fleet = synthesize_fleet(8, 2, tiny_profile());
  const auto cut = truncate_fleet(fleet, 9);
  ASSERT_EQ(cut.true_rul.size(), fleet.size());
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    const auto& full = fleet.units()[i];
    const auto& t = cut.fleet.units()[i];
    const auto [id, rul] = cut.true_rul[i];
    EXPECT_EQ(id, full.unit_id);
    EXPECT_EQ(t.frames.back().cycle + rul, full.total_useful_life_cycles);
    EXPECT_GE(rul, 1.0);
    EXPECT_EQ(t.total_useful_life_cycles, t.frames.back().cycle);
  }
}

TEST(FlightClass, IntRoundTripAndRange) {
  for (int c = 1; c <= 3; ++c) EXPECT_EQ(to_int(flight_class_from_int(c)), c);
  EXPECT_THROW(flight_class_from_int(0), ArgumentError);
  EXPECT_THROW(flight_class_from_int(4), ArgumentError);
}

}  // namespace
}  // namespace rulforge
