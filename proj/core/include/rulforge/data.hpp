#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rulforge {

inline constexpr std::size_t kNumScenarioVars = 4;   // alt, Mach, TRA, T2
inline constexpr std::size_t kNumSensorVars = 14;    // Wf .. P50
inline constexpr std::size_t kNumAuxVars = 2;        // Fc, hs
inline constexpr std::size_t kNumVariables = kNumScenarioVars + kNumSensorVars + kNumAuxVars;

/// Model input variables in their fixed column order.
inline constexpr std::array<std::string_view, kNumVariables> kVariableNames = {
    "alt", "Mach", "TRA", "T2",                                     //
    "Wf",  "Nf",   "Nc",  "T24", "T30", "T48", "T50", "P15", "P2",  //
    "P21", "P24",  "Ps30", "P40", "P50",                            //
    "Fc",  "hs"};

inline constexpr std::size_t kFlightClassIndex = kNumScenarioVars + kNumSensorVars;
inline constexpr std::size_t kHealthStateIndex = kFlightClassIndex + 1;

enum class FlightClass : std::uint8_t { short_haul = 1, medium_haul = 2, long_haul = 3 };

int to_int(FlightClass c);
FlightClass flight_class_from_int(int value);

struct SensorFrame {
  double time_s = 0.0;
  int cycle = 1;
  std::array<double, kNumVariables> values{};

  std::span<const double, kNumScenarioVars> scenario() const {
    return std::span<const double, kNumVariables>(values).first<kNumScenarioVars>();
  }
  std::span<const double, kNumSensorVars> sensors() const {
    return std::span<const double, kNumVariables>(values).subspan<kNumScenarioVars, kNumSensorVars>();
  }
  std::span<const double, kNumAuxVars> aux() const {
    return std::span<const double, kNumVariables>(values).last<kNumAuxVars>();
  }

  friend bool operator==(const SensorFrame&, const SensorFrame&) = default;
};

/// Run-to-failure history of one engine unit.
struct UnitRecord {
  int unit_id = 0;
  FlightClass flight_class = FlightClass::short_haul;
  std::vector<SensorFrame> frames;
  int total_useful_life_cycles = 0;

  std::size_t size() const { return frames.size(); }

  /// Index of the last frame whose time is <= t_s. Throws ArgumentError when
  /// t_s lies outside the unit's time range.
  std::size_t frame_index_at(double t_s) const;

  /// Throws DataError when an invariant (ordering, cycle range, finiteness)
  /// does not hold.
  void validate() const;

  friend bool operator==(const UnitRecord&, const UnitRecord&) = default;
};

class Fleet {
 public:
  Fleet() = default;
  /// Units are sorted by id; duplicate ids raise ArgumentError.
  Fleet(std::string name, std::vector<UnitRecord> units);

  const std::string& name() const { return name_; }
  std::span<const UnitRecord> units() const { return units_; }
  std::size_t size() const { return units_.size(); }
  bool empty() const { return units_.empty(); }

  std::vector<int> unit_ids() const;
  bool contains(int unit_id) const;
  /// Throws ArgumentError for an unknown id.
  const UnitRecord& unit(int unit_id) const;

  std::size_t total_frames() const;

  friend bool operator==(const Fleet&, const Fleet&) = default;

 private:
  std::string name_;
  std::vector<UnitRecord> units_;
};

/// First fleet holds exactly `unit_ids`, the second the complement.
std::pair<Fleet, Fleet> split_units(const Fleet& fleet, std::span<const int> unit_ids);

// CSV ingestion. The header is fixed:
// unit,cycle,time_s,<20 variables in kVariableNames order>
std::string_view fleet_csv_header();

Fleet load_fleet_csv(const std::filesystem::path& path);
Fleet read_fleet_csv(std::istream& in, std::string name = "fleet");
void write_fleet_csv(const Fleet& fleet, const std::filesystem::path& path);
void write_fleet_csv(const Fleet& fleet, std::ostream& out);

struct SynthProfile {
  std::array<double, 3> class_weights{1.0, 1.0, 1.0};
  int tul_min = 30;
  int tul_max = 100;
  // Per-cycle duration in seconds. The range is split into three equal bands,
  // class 1 shortest and class 3 longest.
  int cycle_seconds_min = 60;
  int cycle_seconds_max = 180;
  int degraded_sensors = 6;
  double degradation_exponent = 1.5;  // gamma in (cycle/TUL)^gamma
  double degradation_scale = 0.04;    // relative drift at end of life
  double noise = 0.002;               // relative Gaussian noise level
  double operating_coupling = 0.05;   // sensor response to scenario variables
};

Fleet synthesize_fleet(int n_units, std::uint64_t seed, const SynthProfile& profile = {});

/// Cuts every unit at a random cycle in [1, TUL - 1] (seeded), returning the
/// truncated fleet and the true RUL at each unit's last retained frame.
struct TruncatedFleet {
  Fleet fleet;
  std::vector<std::pair<int, double>> true_rul;  // (unit id, RUL in cycles)
};
TruncatedFleet truncate_fleet(const Fleet& fleet, std::uint64_t seed);

}  // namespace rulforge
