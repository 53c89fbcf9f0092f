#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rulforge/bayes_opt.hpp"
#include "rulforge/folds.hpp"
#include "rulforge/metrics.hpp"
#include "rulforge/stacking.hpp"
#include "rulforge/training.hpp"

namespace rulforge {

/// Everything a trial needs besides its hyperparameters.
struct LevelContext {
  Level level = Level::l1;
  std::size_t filters = 32;
  int max_epochs = 100;
  int early_stop_patience = 8;
  int lr_patience = 3;
  double lr_factor = 0.1;
  double lr_floor = 1e-7;
  std::size_t train_stride = 1;  // level-1 window stride for training
  std::size_t eval_stride = 1;   // level-1 window stride for validation
  std::uint64_t seed = 0;
  std::size_t threads = 0;  // 0: worker_threads()
  // Level 2: fold members of the level-1 ensemble, aligned with the plan.
  const FoldEnsemble* l1 = nullptr;
  std::size_t tap = 0;
};

struct FoldResult {
  ScoreReport report;
  TrainRecord record;
  Model model;
  Normalizer normalizer;
};

struct Trial {
  std::size_t index = 0;
  TrialOrigin origin = TrialOrigin::random;
  HyperParams hp;
  std::vector<ScoreReport> folds;
  std::vector<int> best_epochs;
  double mean = 0.0;  // mean combined S; +inf when failed
  double std = 0.0;   // population std of combined S
  double seconds = 0.0;
  bool failed = false;
  std::string error;
};

/// Mean and population std of the folds' combined scores.
std::pair<double, double> fold_statistics(std::span<const ScoreReport> folds);

void to_json(nlohmann::json& j, const Trial& t);
void from_json(const nlohmann::json& j, Trial& t);

struct CvOutcome {
  Trial trial;
  std::vector<FoldResult> folds;
};

/// Trains and scores one model per fold. The normalizer is refit on each
/// fold's training units. Fold errors are rethrown naming the fold.
CvOutcome cross_validate(const HyperParams& hp, const Fleet& fleet, const FoldPlan& plan, const LevelContext& ctx);

/// Level-2 training samples for one unit: an input at every encoding of the
/// step-spaced series, labelled with the RUL at its newest encoding.
void add_l2_samples(const EnsembleMember& l1_member, const StackConfig& cfg, const UnitRecord& raw,
                    TensorSource& out);

/// Fold ensemble from a cross-validation run. At level 2 the level-1 models
/// and normalizers come from ctx.l1.
FoldEnsemble make_ensemble(const CvOutcome& cv, const FoldPlan& plan, const LevelContext& ctx);

struct OptimizeResult {
  std::vector<Trial> history;
  std::size_t best = 0;
  CvOutcome best_outcome;
};

/// Bayesian optimization of the mean combined S over `space`. `resume` holds
/// trials already recorded; `on_trial` sees each new trial as it completes.
/// The best trial is re-run when its models are not in memory.
OptimizeResult optimize_level(const SearchSpace& space, const Fleet& fleet, const FoldPlan& plan,
                              const LevelContext& ctx, const BayesOptConfig& bo, std::vector<Trial> resume = {},
                              const std::function<void(const Trial&)>& on_trial = {});

std::vector<Trial> read_history(std::istream& in);
void write_trial(std::ostream& out, const Trial& t);

}  // namespace rulforge
