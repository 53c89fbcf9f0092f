#include "rulforge/folds.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <random>

#include "rulforge/error.hpp"

namespace rulforge {

std::size_t validation_size(std::size_t n_units, double val_fraction) {
  const auto m = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n_units)));
  return std::clamp<std::size_t>(m, 1, n_units - 1);
}

FoldPlan make_folds(const Fleet& fleet, std::size_t k, double val_fraction, std::uint64_t seed) {
  if (fleet.size() < 2) throw ArgumentError("cross-validation needs at least 2 units");
  if (k < 1) throw ArgumentError("k must be >= 1");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ArgumentError("val_fraction must lie in (0, 1)");

  FoldPlan plan;
  plan.k = k;
  plan.val_fraction = val_fraction;
  plan.seed = seed;
  const auto ids = fleet.unit_ids();
  const std::size_t m = validation_size(ids.size(), val_fraction);
  std::mt19937_64 rng(seed);
  for (std::size_t f = 0; f < k; ++f) {
    auto shuffled = ids;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    std::vector<int> val(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(m));
    std::vector<int> train(shuffled.begin() + static_cast<std::ptrdiff_t>(m), shuffled.end());
    std::sort(val.begin(), val.end());
    std::sort(train.begin(), train.end());
    plan.validation.push_back(std::move(val));
    plan.training.push_back(std::move(train));
  }
  return plan;
}

void check_fold(const FoldPlan& plan, std::size_t fold, const Fleet& fleet) {
  if (fold >= plan.validation.size() || fold >= plan.training.size()) {
    throw DataError("fold " + std::to_string(fold) + " is not in the plan");
  }
  const auto& val = plan.validation[fold];
  const auto& train = plan.training[fold];
  const std::string where = "fold " + std::to_string(fold) + ": ";
  if (val.empty() || train.empty()) throw DataError(where + "training and validation sides must be non-empty");

  std::vector<int> both;
  std::set_intersection(val.begin(), val.end(), train.begin(), train.end(), std::back_inserter(both));
  if (!both.empty()) throw DataError(where + "unit " + std::to_string(both.front()) + " is on both sides");

  std::vector<int> all(val);
  all.insert(all.end(), train.begin(), train.end());
  std::sort(all.begin(), all.end());
  if (std::adjacent_find(all.begin(), all.end()) != all.end()) throw DataError(where + "duplicate unit ids");
  if (all != fleet.unit_ids()) throw DataError(where + "units do not match the fleet");
}

FoldSplit split_fold(const FoldPlan& plan, std::size_t fold, const Fleet& fleet) {
  check_fold(plan, fold, fleet);
  auto [val, train] = split_units(fleet, plan.validation[fold]);
  return {std::move(train), std::move(val)};
}

void to_json(nlohmann::json& j, const FoldPlan& p) {
  j = nlohmann::json{{"k", p.k},
                     {"val_fraction", p.val_fraction},
                     {"seed", p.seed},
                     {"validation", p.validation},
                     {"training", p.training}};
}

void from_json(const nlohmann::json& j, FoldPlan& p) {
  j.at("k").get_to(p.k);
  j.at("val_fraction").get_to(p.val_fraction);
  j.at("seed").get_to(p.seed);
  j.at("validation").get_to(p.validation);
  j.at("training").get_to(p.training);
  if (p.validation.size() != p.k || p.training.size() != p.k) throw DataError("fold plan has the wrong fold count");
}

}  // namespace rulforge
