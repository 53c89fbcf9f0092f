#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rulforge/data.hpp"

namespace rulforge {

/// Repeated random subsampling: each fold draws its validation units
/// independently, so folds may share validation units.
struct FoldPlan {
  std::size_t k = 0;
  double val_fraction = 0.3;
  std::uint64_t seed = 0;
  std::vector<std::vector<int>> validation;  // sorted unit ids per fold
  std::vector<std::vector<int>> training;    // sorted unit ids per fold

  friend bool operator==(const FoldPlan&, const FoldPlan&) = default;
};

/// round(val_fraction * n) validation units per fold, at least 1 and at most
/// n - 1.
std::size_t validation_size(std::size_t n_units, double val_fraction);

FoldPlan make_folds(const Fleet& fleet, std::size_t k, double val_fraction, std::uint64_t seed);

/// Throws DataError if a unit appears on both sides of a fold, a side is
/// empty, or the fold does not cover exactly the fleet's units.
void check_fold(const FoldPlan& plan, std::size_t fold, const Fleet& fleet);

struct FoldSplit {
  Fleet train;
  Fleet validation;
};

/// Checked unit-level split for one fold.
FoldSplit split_fold(const FoldPlan& plan, std::size_t fold, const Fleet& fleet);

void to_json(nlohmann::json& j, const FoldPlan& p);
void from_json(const nlohmann::json& j, FoldPlan& p);

}  // namespace rulforge
