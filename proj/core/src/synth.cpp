#include <algorithm>
#include <cmath>
#include <random>

#include "rulforge/data.hpp"
#include "rulforge/error.hpp"

namespace rulforge {
namespace {

// Nominal sensor levels, roughly the magnitudes seen in turbofan exports.
constexpr std::array<double, kNumSensorVars> kSensorBaseline = {
    2.5, 2200.0, 8500.0, 600.0, 1450.0, 1800.0, 1300.0,
    15.0, 10.0, 15.5, 20.0, 300.0, 310.0, 12.0};

// Order in which sensors pick up degradation (T48, T50, T30, Wf, Ps30, Nc, ...).
constexpr std::array<std::size_t, kNumSensorVars> kDegradationOrder = {
    5, 6, 4, 0, 11, 2, 3, 1, 12, 10, 13, 7, 9, 8};

// Direction of the drift for each sensor (+1 rises with wear).
constexpr std::array<double, kNumSensorVars> kDegradationSign = {
    +1, -1, -1, +1, +1, +1, +1, -1, -1, -1, -1, -1, -1, -1};

// Smooth climb / cruise / descent shape over one cycle, phase in [0, 1).
double flight_shape(double phase) {
  constexpr double kClimb = 0.2;
  constexpr double kDescent = 0.8;
  if (phase < kClimb) return phase / kClimb;
  if (phase > kDescent) return (1.0 - phase) / (1.0 - kDescent);
  return 1.0;
}

void check_profile(const SynthProfile& p) {
  if (p.tul_min < 2 || p.tul_max < p.tul_min) throw ArgumentError("invalid TUL range in profile");
  if (p.cycle_seconds_min < 3 || p.cycle_seconds_max < p.cycle_seconds_min) {
    throw ArgumentError("invalid cycle duration range in profile");
  }
  if (p.degraded_sensors < 0 || p.degraded_sensors > static_cast<int>(kNumSensorVars)) {
    throw ArgumentError("degraded_sensors must lie in [0, 14]");
  }
  if (p.noise < 0 || p.degradation_exponent <= 0) throw ArgumentError("invalid noise/exponent");
  double total = 0;
  for (double w : p.class_weights) {
    if (w < 0) throw ArgumentError("class weights must be non-negative");
    total += w;
  }
  if (total <= 0) throw ArgumentError("class weights sum to zero");
}

}  // namespace

Fleet synthesize_fleet(int n_units, std::uint64_t seed, const SynthProfile& profile) {
  if (n_units < 1) throw ArgumentError("n_units must be >= 1");
  check_profile(profile);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit_interval(0.0, 1.0);

  // Fleet-wide sensitivity of each sensor to the four scenario variables.
  std::array<std::array<double, kNumScenarioVars>, kNumSensorVars> coupling{};
  for (auto& row : coupling) {
    for (auto& c : row) c = unit_interval(rng) * 2.0 - 1.0;
  }

  std::discrete_distribution<int> class_dist(profile.class_weights.begin(),
                                             profile.class_weights.end());
  std::uniform_int_distribution<int> tul_dist(profile.tul_min, profile.tul_max);
  const double band = (profile.cycle_seconds_max - profile.cycle_seconds_min) / 3.0;

  std::vector<UnitRecord> units;
  units.reserve(static_cast<std::size_t>(n_units));
  for (int k = 0; k < n_units; ++k) {
    UnitRecord unit;
    unit.unit_id = k + 1;
    const int cls = class_dist(rng) + 1;
    unit.flight_class = flight_class_from_int(cls);
    unit.total_useful_life_cycles = tul_dist(rng);
    const double onset = 0.2 + 0.3 * unit_interval(rng);

    std::array<double, kNumSensorVars> baseline{};
    for (std::size_t s = 0; s < kNumSensorVars; ++s) {
      baseline[s] = kSensorBaseline[s] * (1.0 + 0.01 * gauss(rng));
    }

    const int lo = profile.cycle_seconds_min + static_cast<int>(std::floor(band * (cls - 1)));
    const int hi = std::max(lo, profile.cycle_seconds_min + static_cast<int>(std::floor(band * cls)));
    std::uniform_int_distribution<int> duration_dist(lo, hi);

    double t = 0.0;
    const int tul = unit.total_useful_life_cycles;
    for (int cycle = 1; cycle <= tul; ++cycle) {
      const int duration = duration_dist(rng);
      const double cruise_alt = 25000.0 + 10000.0 * unit_interval(rng) + 1500.0 * cls;
      const double ambient = 5.0 * gauss(rng);
      const double life = static_cast<double>(cycle) / tul;
      const double wear = std::pow(life, profile.degradation_exponent);
      const double hs = life < onset ? 1.0 : 0.0;

      for (int s = 0; s < duration; ++s) {
        const double shape = flight_shape(static_cast<double>(s) / duration);
        SensorFrame f;
        f.time_s = t;
        f.cycle = cycle;
        const double alt = cruise_alt * shape;
        const double mach = 0.25 + 0.55 * shape;
        const double tra = 55.0 + 30.0 * shape;
        const double t2 = 518.67 - 0.0036 * alt + ambient;
        f.values[0] = alt;
        f.values[1] = mach;
        f.values[2] = tra;
        f.values[3] = t2;

        const std::array<double, kNumScenarioVars> scaled = {alt / 35000.0, mach, tra / 100.0,
                                                             t2 / 520.0};
        for (std::size_t sidx = 0; sidx < kNumSensorVars; ++sidx) {
          double response = 0.0;
          for (std::size_t j = 0; j < kNumScenarioVars; ++j) response += coupling[sidx][j] * scaled[j];
          double rel = profile.operating_coupling * response;
          f.values[kNumScenarioVars + sidx] = baseline[sidx] * (1.0 + rel);
        }
        for (int d = 0; d < profile.degraded_sensors; ++d) {
          const std::size_t sidx = kDegradationOrder[static_cast<std::size_t>(d)];
          f.values[kNumScenarioVars + sidx] +=
              baseline[sidx] * kDegradationSign[sidx] * profile.degradation_scale * wear;
        }
        if (profile.noise > 0) {
          for (std::size_t sidx = 0; sidx < kNumSensorVars; ++sidx) {
            f.values[kNumScenarioVars + sidx] += baseline[sidx] * profile.noise * gauss(rng);
          }
        }
        f.values[kFlightClassIndex] = cls;
        f.values[kHealthStateIndex] = hs;
        unit.frames.push_back(f);
        t += 1.0;
      }
    }
    units.push_back(std::move(unit));
  }
  return Fleet("synthetic", std::move(units));
}

TruncatedFleet truncate_fleet(const Fleet& fleet, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TruncatedFleet out;
  std::vector<UnitRecord> units;
  for (const auto& u : fleet.units()) {
    const int tul = u.total_useful_life_cycles;
    if (tul < 2) throw DataError("unit " + std::to_string(u.unit_id) + " too short to truncate");
    std::uniform_int_distribution<int> cut_dist(1, tul - 1);
    const int cut = cut_dist(rng);
    UnitRecord t = u;
    auto end = std::find_if(t.frames.begin(), t.frames.end(),
                            [cut](const SensorFrame& f) { return f.cycle > cut; });
    t.frames.erase(end, t.frames.end());
    t.total_useful_life_cycles = cut;
    out.true_rul.emplace_back(u.unit_id, static_cast<double>(tul - cut));
    units.push_back(std::move(t));
  }
  out.fleet = Fleet(fleet.name() + "_truncated", std::move(units));
  return out;
}

}  // namespace rulforge
