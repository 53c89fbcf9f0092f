#include "rulforge/cross_validation.hpp"

#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <memory>
#include <nlohmann/json.hpp>
#include <numeric>
#include <ostream>

#include "rulforge/error.hpp"
#include "rulforge/parallel.hpp"

namespace rulforge {

std::pair<double, double> fold_statistics(std::span<const ScoreReport> folds) {
  if (folds.empty()) throw ArgumentError("no fold reports");
  const double n = static_cast<double>(folds.size());
  double mean = 0.0;
  for (const auto& r : folds) mean += r.combined;
  mean /= n;
  double var = 0.0;
  for (const auto& r : folds) var += (r.combined - mean) * (r.combined - mean);
  return {mean, std::sqrt(var / n)};
}

void to_json(nlohmann::json& j, const Trial& t) {
  j = nlohmann::json{{"index", t.index},
                     {"origin", to_string(t.origin)},
                     {"status", t.failed ? "failed" : "ok"},
                     {"hyperparams", t.hp},
                     {"folds", t.folds},
                     {"best_epochs", t.best_epochs},
                     {"duration_s", t.seconds}};
  if (t.failed) {
    j["mean"] = nullptr;
    j["std"] = nullptr;
    j["error"] = t.error;
  } else {
    j["mean"] = t.mean;
    j["std"] = t.std;
  }
}

void from_json(const nlohmann::json& j, Trial& t) {
  t = Trial{};
  j.at("index").get_to(t.index);
  t.origin = trial_origin_from_string(j.at("origin").get<std::string>());
  const auto status = j.at("status").get<std::string>();
  if (status != "ok" && status != "failed") throw ParseError("unknown trial status '" + status + "'", t.index);
  t.failed = status == "failed";
  j.at("hyperparams").get_to(t.hp);
  j.at("folds").get_to(t.folds);
  if (j.contains("best_epochs")) j.at("best_epochs").get_to(t.best_epochs);
  t.seconds = j.value("duration_s", 0.0);
  if (t.failed) {
    t.mean = std::numeric_limits<double>::infinity();
    t.std = 0.0;
    t.error = j.value("error", std::string{});
  } else {
    j.at("mean").get_to(t.mean);
    j.at("std").get_to(t.std);
  }
}

namespace {

std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (fold + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

TrainConfig train_config(const HyperParams& hp, const LevelContext& ctx, std::size_t fold) {
  TrainConfig tc;
  tc.batch_size = hp.batch_size;
  tc.lr = hp.lr;
  tc.max_epochs = ctx.max_epochs;
  tc.early_stop_patience = ctx.early_stop_patience;
  tc.lr_patience = ctx.lr_patience;
  tc.lr_factor = ctx.lr_factor;
  tc.lr_floor = ctx.lr_floor;
  tc.seed = fold_seed(ctx.seed, fold);
  return tc;
}

FoldResult fit_and_score(const NetworkSpec& spec, const TrainConfig& tc, const SampleSource& train,
                         const SampleSource& val) {
  FoldResult r;
  auto trained = train_model(spec, tc, train, val);
  const auto preds = predict_all(spec, trained.params, val);
  std::vector<double> labels(val.size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = val.label(i);
  r.report = challenge_score(labels, preds);
  r.record = std::move(trained.record);
  trained.params.first_moment.clear();
  trained.params.second_moment.clear();
  r.model = {spec, std::move(trained.params)};
  return r;
}

FoldResult level1_fold(const HyperParams& hp, const Fleet& fleet, const FoldPlan& plan, const LevelContext& ctx,
                       std::size_t fold) {
  auto split = split_fold(plan, fold, fleet);
  const Normalizer norm = fit_normalizer(split.train);
  const auto train_fleet = std::make_shared<const Fleet>(apply_normalizer(norm, split.train));
  const auto val_fleet = std::make_shared<const Fleet>(apply_normalizer(norm, split.validation));
  const WindowSource train(train_fleet, hp.window, ctx.train_stride);
  const WindowSource val(val_fleet, hp.window, ctx.eval_stride);
  if (train.size() == 0 || val.size() == 0) {
    throw DataError("no windows of length " + std::to_string(hp.window) + " on one side of the split");
  }
  const auto spec = build_network(make_template(hp, train.input_shape(), ctx.filters));
  auto r = fit_and_score(spec, train_config(hp, ctx, fold), train, val);
  r.normalizer = norm;
  return r;
}

StackConfig stack_config(const HyperParams& hp, const LevelContext& ctx) {
  return {ctx.l1->config.window, ctx.tap, hp.channels, hp.step};
}

std::size_t encoding_width(const Model& l1, std::size_t tap) {
  const auto dense = l1.spec.dense_layers();
  if (tap >= dense.size()) throw ConfigError("level-1 model has no dense layer " + std::to_string(tap));
  return l1.spec.layers[dense[tap]].units;
}

FoldResult level2_fold(const HyperParams& hp, const Fleet& fleet, const FoldPlan& plan, const LevelContext& ctx,
                       std::size_t fold) {
  const auto split = split_fold(plan, fold, fleet);
  const auto& member = ctx.l1->members[fold];
  const auto cfg = stack_config(hp, ctx);
  const Shape shape = l2_input_shape(encoding_width(member.l1, ctx.tap), hp.channels);
  TensorSource train(shape), val(shape);
  for (const auto& u : split.train.units()) add_l2_samples(member, cfg, u, train);
  for (const auto& u : split.validation.units()) add_l2_samples(member, cfg, u, val);
  const auto spec = build_network(make_template(hp, shape, ctx.filters));
  auto r = fit_and_score(spec, train_config(hp, ctx, fold), train, val);
  r.normalizer = member.normalizer;
  return r;
}

}  // namespace

void add_l2_samples(const EnsembleMember& l1_member, const StackConfig& cfg, const UnitRecord& raw,
                    TensorSource& out) {
  const auto series =
      extract_encodings(l1_member.l1, l1_member.normalizer, raw, {cfg.window, cfg.tap, true}, cfg.step);
  for (std::size_t i = 0; i < series.size(); ++i) {
    out.add(assemble_l2_input(series, series.times[i], cfg.channels, cfg.step),
            label_rul_at_frame(raw, series.frames[i]), raw.unit_id, series.times[i]);
  }
}

CvOutcome cross_validate(const HyperParams& hp, const Fleet& fleet, const FoldPlan& plan, const LevelContext& ctx) {
  if (plan.k == 0 || plan.validation.size() != plan.k) throw ArgumentError("fold plan is empty");
  if (hp.level != ctx.level) throw ConfigError("hyperparameter level does not match the run level");
  if (ctx.level == Level::l2) {
    if (ctx.l1 == nullptr) throw ConfigError("level-2 cross-validation needs a level-1 ensemble");
    if (ctx.l1->members.size() != plan.k) throw ConfigError("level-1 ensemble size does not match the fold plan");
    if (ctx.l1->plan != plan) throw ConfigError("level-1 ensemble was trained on a different fold plan");
  }
  for (std::size_t f = 0; f < plan.k; ++f) check_fold(plan, f, fleet);

  const auto start = std::chrono::steady_clock::now();
  CvOutcome out;
  out.folds.resize(plan.k);
  parallel_for(
      plan.k,
      [&](std::size_t f) {
        try {
          out.folds[f] = ctx.level == Level::l1 ? level1_fold(hp, fleet, plan, ctx, f)
                                                : level2_fold(hp, fleet, plan, ctx, f);
        } catch (const TrainingError& e) {
          throw TrainingError("fold " + std::to_string(f) + ": " + e.what(), e.epoch());
        } catch (const Error& e) {
          throw Error(e.category(), "fold " + std::to_string(f) + ": " + e.what());
        }
      },
      ctx.threads == 0 ? worker_threads() : ctx.threads);

  auto& t = out.trial;
  t.hp = hp;
  for (const auto& f : out.folds) {
    t.folds.push_back(f.report);
    t.best_epochs.push_back(f.record.best_epoch);
  }
  std::tie(t.mean, t.std) = fold_statistics(t.folds);
  t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

FoldEnsemble make_ensemble(const CvOutcome& cv, const FoldPlan& plan, const LevelContext& ctx) {
  FoldEnsemble e;
  e.plan = plan;
  const auto& hp = cv.trial.hp;
  if (ctx.level == Level::l1) {
    e.config = {hp.window, ctx.tap, 1, 1};
    e.l1_hyperparams = hp;
    e.l1_trial = cv.trial.index;
    for (const auto& f : cv.folds) e.members.push_back({f.model, f.normalizer, std::nullopt});
  } else {
    if (ctx.l1 == nullptr) throw ConfigError("level-2 ensemble needs a level-1 ensemble");
    e.config = stack_config(hp, ctx);
    e.l1_hyperparams = ctx.l1->l1_hyperparams;
    e.l1_trial = ctx.l1->l1_trial;
    e.l2_hyperparams = hp;
    e.l2_trial = cv.trial.index;
    for (std::size_t f = 0; f < cv.folds.size(); ++f) {
      const auto& m = ctx.l1->members.at(f);
      e.members.push_back({m.l1, m.normalizer, cv.folds[f].model});
    }
  }
  e.validate();
  return e;
}

OptimizeResult optimize_level(const SearchSpace& space, const Fleet& fleet, const FoldPlan& plan,
                              const LevelContext& ctx, const BayesOptConfig& bo, std::vector<Trial> resume,
                              const std::function<void(const Trial&)>& on_trial) {
  std::vector<BoTrial> prior;
  for (const auto& t : resume) {
    BoTrial b;
    b.index = t.index;
    b.point = to_point(space, t.hp);
    b.score = t.failed ? std::numeric_limits<double>::infinity() : t.mean;
    b.origin = t.origin;
    b.failed = t.failed;
    b.error = t.error;
    prior.push_back(std::move(b));
  }

  OptimizeResult result;
  result.history = std::move(resume);
  std::optional<CvOutcome> best;
  Trial pending;
  std::chrono::steady_clock::time_point started;

  auto objective = [&](const Point& p, std::size_t) {
    pending = Trial{};
    started = std::chrono::steady_clock::now();
    auto cv = cross_validate(to_hyperparams(space, p, ctx.level), fleet, plan, ctx);
    pending = cv.trial;
    if (!best || cv.trial.mean < best->trial.mean) best = std::move(cv);
    return pending.mean;
  };

  auto record = [&](const BoTrial& b) {
    Trial t = b.failed ? Trial{} : pending;
    t.index = b.index;
    t.origin = b.origin;
    t.hp = to_hyperparams(space, b.point, ctx.level);
    t.failed = b.failed;
    t.error = b.error;
    t.mean = b.score;
    t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (best && !b.failed && best->trial.hp == t.hp) best->trial.index = t.index;
    result.history.push_back(t);
    if (on_trial) on_trial(result.history.back());
  };

  const auto bo_result = run_bayes_opt(space, objective, bo, std::move(prior), record);
  result.best = bo_result.best;
  if (result.best >= result.history.size()) throw TrainingError("every trial failed", 0);

  const auto& winner = result.history[result.best];
  if (best && best->trial.hp == winner.hp && best->trial.mean == winner.mean) {
    result.best_outcome = std::move(*best);
  } else {
    result.best_outcome = cross_validate(winner.hp, fleet, plan, ctx);
  }
  result.best_outcome.trial.index = winner.index;
  result.best_outcome.trial.origin = winner.origin;
  return result;
}

std::vector<Trial> read_history(std::istream& in) {
  std::vector<Trial> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<Trial>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("history line " + std::to_string(row) + ": " + e.what(), row);
    }
    if (out.back().index != out.size() - 1) throw DataError("history line " + std::to_string(row) + " is out of order");
  }
  return out;
}

void write_trial(std::ostream& out, const Trial& t) { out << nlohmann::json(t).dump() << '\n'; }

}  // namespace rulforge
