#include "rulforge/data.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "rulforge/error.hpp"

namespace rulforge {

int to_int(FlightClass c) { return static_cast<int>(c); }

FlightClass flight_class_from_int(int value) {
  if (value < 1 || value > 3) {
    throw ArgumentError("flight class must be 1, 2 or 3, got " + std::to_string(value));
  }
  return static_cast<FlightClass>(value);
}

std::size_t UnitRecord::frame_index_at(double t_s) const {
  if (frames.empty() || t_s < frames.front().time_s || t_s > frames.back().time_s) {
    std::ostringstream msg;
    msg << "time " << t_s << " s outside the range of unit " << unit_id;
    throw ArgumentError(msg.str());
  }
  auto it = std::upper_bound(frames.begin(), frames.end(), t_s,
                             [](double t, const SensorFrame& f) { return t < f.time_s; });
  return static_cast<std::size_t>(std::distance(frames.begin(), it)) - 1;
}

void UnitRecord::validate() const {
  const std::string who = "unit " + std::to_string(unit_id);
  if (frames.empty()) throw DataError(who + " has no frames");
  if (total_useful_life_cycles < 1) throw DataError(who + " has non-positive total useful life");
  int prev_cycle = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    if (i > 0 && !(f.time_s > frames[i - 1].time_s)) {
      throw OrderingError(who + ": time stamps not strictly increasing at frame " + std::to_string(i));
    }
    if (f.cycle < 1 || f.cycle < prev_cycle) {
      throw OrderingError(who + ": cycle index decreases at frame " + std::to_string(i));
    }
    prev_cycle = f.cycle;
    if (!std::isfinite(f.time_s) ||
        !std::all_of(f.values.begin(), f.values.end(), [](double v) { return std::isfinite(v); })) {
      throw DataError(who + ": non-finite value at frame " + std::to_string(i));
    }
  }
  if (frames.back().cycle != total_useful_life_cycles) {
    throw DataError(who + ": last cycle differs from total useful life");
  }
}

Fleet::Fleet(std::string name, std::vector<UnitRecord> units)
    : name_(std::move(name)), units_(std::move(units)) {
  std::sort(units_.begin(), units_.end(),
            [](const UnitRecord& a, const UnitRecord& b) { return a.unit_id < b.unit_id; });
  for (std::size_t i = 1; i < units_.size(); ++i) {
    if (units_[i].unit_id == units_[i - 1].unit_id) {
      throw ArgumentError("duplicate unit id " + std::to_string(units_[i].unit_id));
    }
  }
}

std::vector<int> Fleet::unit_ids() const {
  std::vector<int> ids;
  ids.reserve(units_.size());
  for (const auto& u : units_) ids.push_back(u.unit_id);
  return ids;
}

bool Fleet::contains(int unit_id) const {
  auto it = std::lower_bound(units_.begin(), units_.end(), unit_id,
                             [](const UnitRecord& u, int id) { return u.unit_id < id; });
  return it != units_.end() && it->unit_id == unit_id;
}

const UnitRecord& Fleet::unit(int unit_id) const {
  auto it = std::lower_bound(units_.begin(), units_.end(), unit_id,
                             [](const UnitRecord& u, int id) { return u.unit_id < id; });
  if (it == units_.end() || it->unit_id != unit_id) {
    throw ArgumentError("unknown unit id " + std::to_string(unit_id));
  }
  return *it;
}

std::size_t Fleet::total_frames() const {
  std::size_t n = 0;
  for (const auto& u : units_) n += u.frames.size();
  return n;
}

std::pair<Fleet, Fleet> split_units(const Fleet& fleet, std::span<const int> unit_ids) {
  std::set<int> wanted(unit_ids.begin(), unit_ids.end());
  std::vector<int> unknown;
  for (int id : wanted) {
    if (!fleet.contains(id)) unknown.push_back(id);
  }
  if (!unknown.empty()) {
    std::ostringstream msg;
    msg << "unknown unit ids:";
    for (int id : unknown) msg << ' ' << id;
    throw ArgumentError(msg.str());
  }
  std::vector<UnitRecord> selected;
  std::vector<UnitRecord> rest;
  for (const auto& u : fleet.units()) {
    (wanted.count(u.unit_id) ? selected : rest).push_back(u);
  }
  return {Fleet(fleet.name(), std::move(selected)), Fleet(fleet.name(), std::move(rest))};
}

}  // namespace rulforge
