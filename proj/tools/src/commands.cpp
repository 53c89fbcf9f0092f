#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <nlohmann/json.hpp>
#include <sstream>

#include "rulforge/cli.hpp"
#include "rulforge/ensemble_io.hpp"
#include "rulforge/error.hpp"
#include "rulforge/metrics.hpp"

namespace rulforge::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kPlotKinds = {"trajectory", "score_vs_rul", "class_bars"};

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

void write_json(const fs::path& path, const json& j) { open_out(path) << j.dump(2) << '\n'; }

std::string level_tag(int level) { return "l" + std::to_string(level); }

// ---- synth ----------------------------------------------------------------

struct SynthOptions {
  int units = 20;
  std::uint64_t seed = 0;
  fs::path out;
  fs::path truth;
  int tul_min = SynthProfile{}.tul_min;
  int tul_max = SynthProfile{}.tul_max;
  int cycle_min = SynthProfile{}.cycle_seconds_min;
  int cycle_max = SynthProfile{}.cycle_seconds_max;
};

int cmd_synth(const SynthOptions& o, std::ostream& out) {
  SynthProfile profile;
  profile.tul_min = o.tul_min;
  profile.tul_max = o.tul_max;
  profile.cycle_seconds_min = o.cycle_min;
  profile.cycle_seconds_max = o.cycle_max;
  if (profile.tul_min < 2 || profile.tul_max < profile.tul_min) throw ConfigError("need 2 <= --tul-min <= --tul-max");
  if (profile.cycle_seconds_min < 3 || profile.cycle_seconds_max < profile.cycle_seconds_min) {
    throw ConfigError("need 3 <= --cycle-min <= --cycle-max");
  }
  Fleet fleet = synthesize_fleet(o.units, o.seed, profile);
  if (!o.truth.empty()) {
    auto cut = truncate_fleet(fleet, o.seed);
    std::vector<TruthRow> rows;
    for (const auto& [id, rul] : cut.true_rul) {
      const auto& u = cut.fleet.unit(id);
      rows.push_back({id, u.frames.back().time_s, rul, u.flight_class});
    }
    auto t = open_out(o.truth);
    write_truth(t, rows);
    fleet = std::move(cut.fleet);
  }
  auto f = open_out(o.out);
  write_fleet_csv(fleet, f);
  out << "wrote " << fleet.size() << " units (" << fleet.total_frames() << " frames) to " << o.out.string() << '\n';
  return ok;
}

// ---- optimize / train -----------------------------------------------------

struct RunOptions {
  fs::path config;
  std::optional<int> level;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> out;
  bool resume = false;
  fs::path l1_ensemble;
  fs::path hyperparams;
};

RunConfig resolve(const RunOptions& o) {
  RunConfig c = load_run_config(o.config);
  if (o.level) c.level = *o.level;
  if (c.level != 1 && c.level != 2) throw ConfigError("--level must be 1 or 2");
  if (o.seed) {
    c.search_seed = *o.seed;
    c.training.seed = *o.seed;
  }
  if (o.out) c.out = *o.out;
  c.training.level = c.level == 1 ? Level::l1 : Level::l2;
  return c;
}

struct LevelSetup {
  Fleet fleet;
  FoldPlan plan;
  std::optional<FoldEnsemble> l1;
  const SearchSpace* space = nullptr;
};

LevelSetup setup_level(RunConfig& c, const RunOptions& o) {
  LevelSetup s;
  s.space = c.level == 1 ? &c.space_l1 : &c.space_l2;
  if (c.level == 2) {
    if (o.l1_ensemble.empty()) throw ConfigError("level 2 needs --l1-ensemble");
    s.l1 = load_ensemble(o.l1_ensemble);
    if (s.l1->has_l2()) throw ConfigError("--l1-ensemble points at a level-2 ensemble");
  }
  s.fleet = load_dataset(c.dataset);
  if (s.l1) {
    s.plan = s.l1->plan;
  } else {
    s.plan = make_folds(s.fleet, c.k, c.val_fraction, c.fold_seed);
  }
  for (std::size_t f = 0; f < s.plan.k; ++f) check_fold(s.plan, f, s.fleet);
  return s;
}

int cmd_optimize(const RunOptions& o, std::ostream& out) {
  RunConfig c = resolve(o);
  LevelSetup s = setup_level(c, o);
  c.training.l1 = s.l1 ? &*s.l1 : nullptr;

  BayesOptConfig bo;
  bo.budget = c.budget;
  bo.n_random = c.n_random;
  bo.seed = c.search_seed;
  bo.suggest = c.suggest;
  if (s.l1) {
    if (!s.l1->l1_hyperparams) throw ConfigError("level-1 ensemble carries no hyperparameters to seed from");
    bo.seed_points.push_back(to_point(*s.space, level2_seed(*s.l1->l1_hyperparams, *s.space)));
  }

  const auto tag = level_tag(c.level);
  const fs::path history_path = c.out / ("history_" + tag + ".jsonl");
  std::vector<Trial> resume;
  if (o.resume && fs::exists(history_path)) {
    auto in = open_in(history_path);
    resume = read_history(in);
    for (const auto& t : resume) {
      if (t.hp.level != c.training.level) throw DataError("history holds trials of another level");
    }
  }
  const std::size_t resumed = resume.size();
  bo.budget = std::max(bo.budget, resumed);

  fs::create_directories(c.out);
  const fs::path manifest = c.out / ("ensemble_" + tag) / "manifest.json";
  if (resumed >= bo.budget && fs::exists(manifest)) {
    out << "history already holds " << resumed << " trials; nothing to do\n";
    return ok;
  }
  if (resumed == 0) open_out(history_path);
  std::ofstream history(history_path, std::ios::binary | std::ios::app);
  if (!history) throw DataError("cannot write " + history_path.string());

  auto result = optimize_level(*s.space, s.fleet, s.plan, c.training, bo, std::move(resume), [&](const Trial& t) {
    write_trial(history, t);
    history.flush();
    out << "trial " << t.index << " [" << to_string(t.origin) << "] ";
    if (t.failed) {
      out << "failed: " << t.error << '\n';
    } else {
      out << "S=" << format_number(t.mean) << " std=" << format_number(t.std) << '\n';
    }
  });

  const auto ensemble = make_ensemble(result.best_outcome, s.plan, c.training);
  save_ensemble(ensemble, manifest);
  const auto& best = result.history[result.best];
  write_json(c.out / ("best_" + tag + ".json"),
             {{"trial", json(best)}, {"ensemble", fs::relative(manifest, c.out).generic_string()}});
  out << "evaluated " << result.history.size() - resumed << " new trials; best trial " << best.index
      << " S=" << format_number(best.mean) << '\n'
      << "ensemble: " << manifest.string() << '\n';
  return ok;
}

int cmd_train(const RunOptions& o, std::ostream& out) {
  RunConfig c = resolve(o);
  LevelSetup s = setup_level(c, o);
  c.training.l1 = s.l1 ? &*s.l1 : nullptr;

  HyperParams hp;
  if (!o.hyperparams.empty()) {
    auto in = open_in(o.hyperparams);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("hyperparameter file is not valid JSON: " + std::string(e.what()));
    }
    hp = (j.contains("trial") ? j.at("trial").at("hyperparams") : j).get<HyperParams>();
  } else if (c.level == 1) {
    hp = reference_level1_hyperparams();
  } else {
    hp = level2_seed(s.l1->l1_hyperparams.value_or(reference_level1_hyperparams()), *s.space);
  }
  if (static_cast<int>(hp.level) != c.level) throw ConfigError("hyperparameters are for another level");
  to_point(*s.space, hp);

  const auto cv = cross_validate(hp, s.fleet, s.plan, c.training);
  const auto tag = level_tag(c.level);
  const fs::path manifest = c.out / ("ensemble_" + tag) / "manifest.json";
  save_ensemble(make_ensemble(cv, s.plan, c.training), manifest);
  write_json(c.out / ("train_" + tag + ".json"), {{"trial", json(cv.trial)}});
  out << "cross-validated S=" << format_number(cv.trial.mean) << " std=" << format_number(cv.trial.std) << '\n'
      << "ensemble: " << manifest.string() << '\n';
  return ok;
}

// ---- encode ---------------------------------------------------------------

struct EncodeOptions {
  fs::path manifest;
  fs::path data;
  fs::path out;
  std::size_t member = 0;
  std::size_t stride = 1;
};

int cmd_encode(const EncodeOptions& o, std::ostream& out) {
  const auto e = load_ensemble(o.manifest);
  if (o.member >= e.members.size()) throw ConfigError("--member out of range");
  if (o.stride < 1) throw ConfigError("--stride must be >= 1");
  const Fleet fleet = load_fleet_csv(o.data);
  const auto& m = e.members[o.member];
  auto f = open_out(o.out);
  bool header = false;
  std::size_t rows = 0;
  for (const auto& u : fleet.units()) {
    const auto s = extract_encodings(m.l1, m.normalizer, u, {e.config.window, e.config.tap, true}, o.stride);
    if (!header) {
      f << "unit,t_s";
      for (std::size_t w = 0; w < s.width; ++w) f << ",e_" << w;
      f << '\n';
      header = true;
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
      f << u.unit_id << ',' << format_number(s.times[i]);
      for (double v : s.at(i)) f << ',' << format_number(v);
      f << '\n';
      ++rows;
    }
  }
  out << "wrote " << rows << " encodings to " << o.out.string() << '\n';
  return ok;
}

// ---- predict --------------------------------------------------------------

struct PredictOptions {
  fs::path manifest;
  fs::path data;
  fs::path points;
  fs::path out;
  bool round = false;
};

std::vector<EvalPoint> read_points(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty points file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "unit,t_s") throw SchemaError("points file header must be 'unit,t_s'");
  std::vector<EvalPoint> pts;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument("field count");
      std::size_t used = 0;
      const int unit = std::stoi(line.substr(0, comma), &used);
      if (used != comma) throw std::invalid_argument("unit");
      const std::string t = line.substr(comma + 1);
      const double ts = std::stod(t, &used);
      if (used != t.size() || !std::isfinite(ts)) throw std::invalid_argument("t_s");
      pts.push_back({unit, ts});
    } catch (const std::exception&) {
      throw ParseError("points row " + std::to_string(row) + " is malformed", row);
    }
  }
  return pts;
}

int cmd_predict(const PredictOptions& o, std::ostream& out) {
  const auto e = load_ensemble(o.manifest);
  const Fleet fleet = load_fleet_csv(o.data);
  const auto points = o.points.empty() ? final_time_points(fleet) : read_points(o.points);
  std::vector<PredictionRow> rows;
  for (const auto& p : points) {
    if (!fleet.contains(p.unit_id)) throw DataError("unit " + std::to_string(p.unit_id) + " is not in the dataset");
    const auto pred = ensemble_predict(e, fleet.unit(p.unit_id), p.t_s);
    rows.push_back({p.unit_id, p.t_s, pred.interval, pred.members});
  }
  auto f = open_out(o.out);
  write_predictions(f, rows, o.round);
  out << "wrote " << rows.size() << " predictions to " << o.out.string() << '\n';
  return ok;
}

// ---- score ----------------------------------------------------------------

struct ScoreOptions {
  fs::path predictions;
  fs::path truth;
  std::string group_by;
  fs::path out;
};

struct Matched {
  std::vector<double> y;
  std::vector<double> yhat;
  std::vector<FlightClass> cls;
};

Matched match_truth(const std::vector<PredictionRow>& preds, const std::vector<TruthRow>& truth) {
  std::map<std::pair<int, double>, const TruthRow*> by_key;
  std::map<int, std::vector<const TruthRow*>> by_unit;
  for (const auto& t : truth) {
    by_key[{t.unit_id, t.t_s}] = &t;
    by_unit[t.unit_id].push_back(&t);
  }
  std::set<int> pred_units;
  for (const auto& p : preds) pred_units.insert(p.unit_id);
  std::vector<int> missing, extra;
  for (int u : pred_units) {
    if (!by_unit.contains(u)) extra.push_back(u);
  }
  for (const auto& [u, _] : by_unit) {
    if (!pred_units.contains(u)) missing.push_back(u);
  }
  if (!missing.empty() || !extra.empty()) {
    std::ostringstream msg;
    msg << "unit sets differ;";
    if (!missing.empty()) {
      msg << " missing predictions for";
      for (int u : missing) msg << ' ' << u;
      msg << ';';
    }
    if (!extra.empty()) {
      msg << " no truth for";
      for (int u : extra) msg << ' ' << u;
    }
    throw DataError(msg.str());
  }
  Matched m;
  for (const auto& p : preds) {
    const TruthRow* t = nullptr;
    if (auto it = by_key.find({p.unit_id, p.t_s}); it != by_key.end()) {
      t = it->second;
    } else if (by_unit[p.unit_id].size() == 1) {
      t = by_unit[p.unit_id].front();
    } else {
      throw DataError("no truth for unit " + std::to_string(p.unit_id) + " at t_s " + format_number(p.t_s));
    }
    m.y.push_back(t->rul);
    m.yhat.push_back(p.rul.mean);
    m.cls.push_back(t->flight_class);
  }
  return m;
}

json grouped_reports(const Matched& m) {
  json groups = json::array();
  for (int c = 1; c <= 3; ++c) {
    std::vector<double> y, yhat;
    for (std::size_t i = 0; i < m.y.size(); ++i) {
      if (to_int(m.cls[i]) == c) {
        y.push_back(m.y[i]);
        yhat.push_back(m.yhat[i]);
      }
    }
    if (y.empty()) continue;
    groups.push_back({{"flight_class", c}, {"n", y.size()}, {"report", challenge_score(y, yhat)}});
  }
  return groups;
}

int cmd_score(const ScoreOptions& o, std::ostream& out) {
  if (!o.group_by.empty() && o.group_by != "flight_class") throw ConfigError("--group-by supports only flight_class");
  auto pin = open_in(o.predictions);
  auto tin = open_in(o.truth);
  const auto m = match_truth(read_predictions(pin), read_truth(tin));
  if (m.y.empty()) throw DataError("no predictions to score");
  json j{{"n", m.y.size()}, {"report", challenge_score(m.y, m.yhat)}};
  if (!o.group_by.empty()) j["groups"] = grouped_reports(m);
  const auto text = j.dump(2);
  out << text << '\n';
  if (!o.out.empty()) open_out(o.out) << text << '\n';
  return ok;
}

// ---- plot-export ----------------------------------------------------------

struct PlotOptions {
  std::string kind;
  std::vector<fs::path> predictions;
  std::vector<std::string> labels;
  fs::path truth;
  fs::path out;
};

int cmd_plot_export(const PlotOptions& o, std::ostream& out) {
  if (std::find(kPlotKinds.begin(), kPlotKinds.end(), o.kind) == kPlotKinds.end()) {
    throw ConfigError("unknown --kind '" + o.kind + "'; expected one of trajectory, score_vs_rul, class_bars");
  }
  if (o.predictions.empty()) throw ConfigError("--predictions is required");
  if (!o.labels.empty() && o.labels.size() != o.predictions.size()) {
    throw ConfigError("--label must be given once per --predictions");
  }
  auto tin = open_in(o.truth);
  const auto truth = read_truth(tin);
  auto f = open_out(o.out);
  std::size_t rows = 0;

  if (o.kind == "class_bars") {
    f << "flight_class,level,score\n";
    for (std::size_t i = 0; i < o.predictions.size(); ++i) {
      auto pin = open_in(o.predictions[i]);
      const auto m = match_truth(read_predictions(pin), truth);
      const std::string label = o.labels.empty() ? "L" + std::to_string(i + 1) : o.labels[i];
      for (const auto& g : grouped_reports(m)) {
        f << g.at("flight_class").get<int>() << ',' << label << ','
          << format_number(g.at("report").at("combined").get<double>()) << '\n';
        ++rows;
      }
    }
  } else {
    if (o.predictions.size() != 1) throw ConfigError("--kind " + o.kind + " takes one --predictions file");
    auto pin = open_in(o.predictions.front());
    const auto preds = read_predictions(pin);
    const auto m = match_truth(preds, truth);
    if (o.kind == "trajectory") {
      f << "unit,t,rul_true,rul_mean,rul_lo,rul_hi\n";
      for (std::size_t i = 0; i < preds.size(); ++i) {
        const auto& p = preds[i];
        f << p.unit_id << ',' << format_number(p.t_s) << ',' << format_number(m.y[i]) << ','
          << format_number(p.rul.mean) << ',' << format_number(p.rul.lo) << ',' << format_number(p.rul.hi) << '\n';
      }
    } else {
      f << "rul_true,score_contribution\n";
      for (std::size_t i = 0; i < preds.size(); ++i) {
        f << format_number(m.y[i]) << ',' << format_number(nasa_term(m.y[i], m.yhat[i])) << '\n';
      }
    }
    rows = preds.size();
  }
  out << "wrote " << rows << " rows to " << o.out.string() << '\n';
  return ok;
}

int exit_code(const Error& e) {
  switch (e.category()) {
    case Error::Category::config: return config_error;
    case Error::Category::data: return data_error;
    case Error::Category::compute: return compute_error;
  }
  return compute_error;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"rulforge: remaining-useful-life estimation with stacked dilated CNNs", "rulforge"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "rulforge 0.1.0");

  SynthOptions synth;
  auto* sc = app.add_subcommand("synth", "Generate a synthetic run-to-failure fleet");
  sc->add_option("--units", synth.units, "Number of units")->check(CLI::PositiveNumber)->capture_default_str();
  sc->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();
  sc->add_option("--out", synth.out, "Output fleet CSV")->required();
  sc->add_option("--truth", synth.truth,
                 "Cut every unit at a random cycle and write unit,t_s,rul,flight_class truth here");
  sc->add_option("--tul-min", synth.tul_min, "Shortest life in cycles")->capture_default_str();
  sc->add_option("--tul-max", synth.tul_max, "Longest life in cycles")->capture_default_str();
  sc->add_option("--cycle-min", synth.cycle_min, "Shortest cycle in seconds")->capture_default_str();
  sc->add_option("--cycle-max", synth.cycle_max, "Longest cycle in seconds")->capture_default_str();

  RunOptions opt;
  auto add_run_flags = [&](CLI::App* c) {
    c->add_option("--config", opt.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
    c->add_option("--level", opt.level, "1: window regressor, 2: encoding-sequence regressor")
        ->check(CLI::IsMember({1, 2}));
    c->add_option("--seed", opt.seed, "Override the search and training seed");
    c->add_option("--out", opt.out, "Override the output directory");
    c->add_option("--l1-ensemble", opt.l1_ensemble, "Level-1 ensemble manifest (level 2 only)");
  };
  auto* oc = app.add_subcommand("optimize", "Bayesian hyperparameter search with cross-validation");
  add_run_flags(oc);
  oc->add_flag("--resume", opt.resume, "Continue from the existing history file");
  auto* tc = app.add_subcommand("train", "Cross-validate fixed hyperparameters and save the fold ensemble");
  add_run_flags(tc);
  tc->add_option("--hyperparams", opt.hyperparams, "Hyperparameter JSON (or a best_*.json summary)");

  EncodeOptions enc;
  auto* ec = app.add_subcommand("encode", "Export level-1 encodings of a fleet");
  ec->add_option("--manifest", enc.manifest, "Ensemble manifest")->required();
  ec->add_option("--data", enc.data, "Fleet CSV")->required();
  ec->add_option("--out", enc.out, "Output CSV (unit,t_s,e_0..)")->required();
  ec->add_option("--member", enc.member, "Ensemble member to use")->capture_default_str();
  ec->add_option("--stride", enc.stride, "Seconds between encodings")->capture_default_str();

  PredictOptions pred;
  auto* pc = app.add_subcommand("predict", "Predict RUL with an ensemble");
  pc->add_option("--manifest", pred.manifest, "Ensemble manifest")->required();
  pc->add_option("--data", pred.data, "Fleet CSV")->required();
  pc->add_option("--points", pred.points, "CSV of unit,t_s query points (default: each unit's last frame)");
  pc->add_option("--out", pred.out, "Output prediction CSV")->required();
  pc->add_flag("--round", pred.round, "Round RULs to whole cycles (challenge submission format)");

  ScoreOptions score;
  auto* scc = app.add_subcommand("score", "Score predictions against ground truth");
  scc->add_option("--predictions", score.predictions, "Prediction CSV")->required();
  scc->add_option("--truth", score.truth, "Truth CSV (unit,t_s,rul,flight_class)")->required();
  scc->add_option("--group-by", score.group_by, "Also report per group (flight_class)");
  scc->add_option("--out", score.out, "Write the report JSON here");

  PlotOptions plot;
  auto* plc = app.add_subcommand("plot-export", "Write CSV series for plotting");
  plc->add_option("--kind", plot.kind, "trajectory | score_vs_rul | class_bars")->required();
  plc->add_option("--predictions", plot.predictions, "Prediction CSV (repeat for class_bars)")->required();
  plc->add_option("--label", plot.labels, "Level label per --predictions (class_bars)");
  plc->add_option("--truth", plot.truth, "Truth CSV")->required();
  plc->add_option("--out", plot.out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : config_error;
  }

  try {
    if (sc->parsed()) return cmd_synth(synth, out);
    if (oc->parsed()) return cmd_optimize(opt, out);
    if (tc->parsed()) return cmd_train(opt, out);
    if (ec->parsed()) return cmd_encode(enc, out);
    if (pc->parsed()) return cmd_predict(pred, out);
    if (scc->parsed()) return cmd_score(score, out);
    if (plc->parsed()) return cmd_plot_export(plot, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return data_error;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return data_error;
  }
  return config_error;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace rulforge::cli
