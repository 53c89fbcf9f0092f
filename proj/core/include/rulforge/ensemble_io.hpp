#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rulforge/stacking.hpp"

namespace rulforge {

inline constexpr int kManifestVersion = 1;

/// Writes the manifest plus one model file per member and level next to it.
/// Model paths in the manifest are relative to the manifest's directory.
void save_ensemble(const FoldEnsemble& ensemble, const std::filesystem::path& manifest);

/// Throws DataError naming the first missing member file.
FoldEnsemble load_ensemble(const std::filesystem::path& manifest);

/// Shortest decimal form that parses back to the same double.
std::string format_number(double v);

struct PredictionRow {
  int unit_id = 0;
  double t_s = 0.0;
  Interval rul;
  std::vector<double> members;

  friend bool operator==(const PredictionRow&, const PredictionRow&) = default;
};

/// unit,t_s,rul_mean,rul_lo,rul_hi,member_0..member_{k-1}. With `round`,
/// every RUL column is rounded to whole cycles.
void write_predictions(std::ostream& out, std::span<const PredictionRow> rows, bool round = false);
std::vector<PredictionRow> read_predictions(std::istream& in);

struct TruthRow {
  int unit_id = 0;
  double t_s = 0.0;
  double rul = 0.0;
  FlightClass flight_class = FlightClass::short_haul;

  friend bool operator==(const TruthRow&, const TruthRow&) = default;
};

/// unit,t_s,rul,flight_class
void write_truth(std::ostream& out, std::span<const TruthRow> rows);
std::vector<TruthRow> read_truth(std::istream& in);

}  // namespace rulforge
