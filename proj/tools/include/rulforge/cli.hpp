#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rulforge/cross_validation.hpp"
#include "rulforge/data.hpp"

namespace rulforge::cli {

inline constexpr int kConfigSchemaVersion = 1;

enum ExitCode : int { ok = 0, config_error = 2, data_error = 3, compute_error = 4 };

struct DatasetSpec {
  std::filesystem::path path;  // CSV fleet, used when !synth
  bool synth = false;
  int units = 20;
  std::uint64_t seed = 0;
  SynthProfile profile;
};

/// Parsed and validated run configuration (JSON, schema_version 1):
///
///   {
///     "schema_version": 1,
///     "dataset": {"path": "fleet.csv"} | {"synth": {"units": 20, "seed": 1, ...profile}},
///     "folds": {"k": 5, "val_fraction": 0.3, "seed": 0},
///     "training": {"max_epochs": 100, "early_stop_patience": 8, "lr_patience": 3,
///                  "lr_factor": 0.1, "lr_floor": 1e-7, "filters": 32,
///                  "train_stride": 1, "eval_stride": 1, "tap": 0, "threads": 0},
///     "search": {"budget": 100, "n_random": 10, "seed": 0, "candidates": 1000,
///                "overrides": {"l1": {"fc_1": [8, 16], "K_s": ["3x3"]}, "l2": {...}}},
///     "level": 1,
///     "out": "run"
///   }
///
/// Relative paths resolve against the config file's directory.
struct RunConfig {
  DatasetSpec dataset;
  std::size_t k = 5;
  double val_fraction = 0.3;
  std::uint64_t fold_seed = 0;
  LevelContext training;
  std::size_t budget = 100;
  std::size_t n_random = 10;
  std::uint64_t search_seed = 0;
  SuggestOptions suggest;
  SearchSpace space_l1 = level_space(Level::l1);
  SearchSpace space_l2 = level_space(Level::l2);
  int level = 1;
  std::filesystem::path out = "run";
};

RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

Fleet load_dataset(const DatasetSpec& spec);

/// Level-2 seed: the level-1 values plus level-2 extras taken from the
/// reference level-2 model, each clamped into `space`.
HyperParams level2_seed(const HyperParams& l1, const SearchSpace& space);

/// Runs the command line; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rulforge::cli
