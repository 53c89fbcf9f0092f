#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>

#include "rulforge/cli.hpp"
#include "rulforge/error.hpp"

namespace rulforge::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void allow_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError("unknown key '" + key + "' in " + std::string(where));
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& dst, std::string_view where) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(dst);
  } catch (const json::exception&) {
    throw ConfigError(std::string(where) + "." + key + " has the wrong type");
  }
}

void apply_overrides(SearchSpace& space, const json& j, std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [name, value] : j.items()) {
    if (!space.find(name)) throw ConfigError("unknown search dimension '" + name + "' in " + std::string(where));
    const auto& d = space.dim(name);
    if (d.kind == DimKind::categorical) {
      if (!value.is_array() || !std::all_of(value.begin(), value.end(), [](const json& v) { return v.is_string(); })) {
        throw ConfigError(std::string(where) + "." + name + " must list allowed choices");
      }
      space.set_choices(name, value.get<std::vector<std::string>>());
    } else {
      if (!value.is_array() || value.size() != 2 || !value[0].is_number() || !value[1].is_number()) {
        throw ConfigError(std::string(where) + "." + name + " must be [lo, hi]");
      }
      space.set_range(name, value[0].get<double>(), value[1].get<double>());
    }
  }
}

SynthProfile parse_profile(const json& j) {
  SynthProfile p;
  read(j, "class_weights", p.class_weights, "dataset.synth");
  read(j, "tul_min", p.tul_min, "dataset.synth");
  read(j, "tul_max", p.tul_max, "dataset.synth");
  read(j, "cycle_seconds_min", p.cycle_seconds_min, "dataset.synth");
  read(j, "cycle_seconds_max", p.cycle_seconds_max, "dataset.synth");
  read(j, "degraded_sensors", p.degraded_sensors, "dataset.synth");
  read(j, "degradation_exponent", p.degradation_exponent, "dataset.synth");
  read(j, "degradation_scale", p.degradation_scale, "dataset.synth");
  read(j, "noise", p.noise, "dataset.synth");
  read(j, "operating_coupling", p.operating_coupling, "dataset.synth");
  if (p.tul_min < 2 || p.tul_max < p.tul_min) throw ConfigError("dataset.synth needs 2 <= tul_min <= tul_max");
  if (p.cycle_seconds_min < 3 || p.cycle_seconds_max < p.cycle_seconds_min) {
    throw ConfigError("dataset.synth needs 3 <= cycle_seconds_min <= cycle_seconds_max");
  }
  return p;
}

}  // namespace

RunConfig parse_run_config(const json& j, const fs::path& base_dir) {
  allow_keys(j, "config", {"schema_version", "dataset", "folds", "training", "search", "level", "out"});
  if (!j.contains("schema_version")) throw ConfigError("config is missing schema_version");
  if (!j.at("schema_version").is_number_integer() || j.at("schema_version").get<int>() != kConfigSchemaVersion) {
    throw ConfigError("unsupported config schema_version (expected " + std::to_string(kConfigSchemaVersion) + ")");
  }
  RunConfig c;

  if (!j.contains("dataset")) throw ConfigError("config is missing dataset");
  const auto& ds = j.at("dataset");
  allow_keys(ds, "dataset", {"path", "synth"});
  if (ds.contains("path") == ds.contains("synth")) throw ConfigError("dataset needs exactly one of path or synth");
  if (ds.contains("path")) {
    c.dataset.path = base_dir / ds.at("path").get<std::string>();
  } else {
    const auto& s = ds.at("synth");
    allow_keys(s, "dataset.synth",
               {"units", "seed", "class_weights", "tul_min", "tul_max", "cycle_seconds_min", "cycle_seconds_max",
                "degraded_sensors", "degradation_exponent", "degradation_scale", "noise", "operating_coupling"});
    c.dataset.synth = true;
    read(s, "units", c.dataset.units, "dataset.synth");
    read(s, "seed", c.dataset.seed, "dataset.synth");
    if (c.dataset.units < 2) throw ConfigError("dataset.synth.units must be >= 2");
    c.dataset.profile = parse_profile(s);
  }

  if (j.contains("folds")) {
    const auto& f = j.at("folds");
    allow_keys(f, "folds", {"k", "val_fraction", "seed"});
    read(f, "k", c.k, "folds");
    read(f, "val_fraction", c.val_fraction, "folds");
    read(f, "seed", c.fold_seed, "folds");
  }
  if (c.k < 1) throw ConfigError("folds.k must be >= 1");
  if (!(c.val_fraction > 0.0 && c.val_fraction < 1.0)) throw ConfigError("folds.val_fraction must lie in (0, 1)");

  auto& t = c.training;
  if (j.contains("training")) {
    const auto& tr = j.at("training");
    allow_keys(tr, "training",
               {"max_epochs", "early_stop_patience", "lr_patience", "lr_factor", "lr_floor", "filters",
                "train_stride", "eval_stride", "tap", "threads", "seed"});
    read(tr, "max_epochs", t.max_epochs, "training");
    read(tr, "early_stop_patience", t.early_stop_patience, "training");
    read(tr, "lr_patience", t.lr_patience, "training");
    read(tr, "lr_factor", t.lr_factor, "training");
    read(tr, "lr_floor", t.lr_floor, "training");
    read(tr, "filters", t.filters, "training");
    read(tr, "train_stride", t.train_stride, "training");
    read(tr, "eval_stride", t.eval_stride, "training");
    read(tr, "tap", t.tap, "training");
    read(tr, "threads", t.threads, "training");
    read(tr, "seed", t.seed, "training");
  }
  if (t.max_epochs < 1 || t.early_stop_patience < 1 || t.lr_patience < 1) {
    throw ConfigError("training epochs and patiences must be >= 1");
  }
  if (!(t.lr_factor > 0.0 && t.lr_factor < 1.0)) throw ConfigError("training.lr_factor must lie in (0, 1)");
  if (t.filters < 1 || t.train_stride < 1 || t.eval_stride < 1) {
    throw ConfigError("training filters and strides must be >= 1");
  }

  if (j.contains("search")) {
    const auto& s = j.at("search");
    allow_keys(s, "search", {"budget", "n_random", "seed", "candidates", "overrides"});
    read(s, "budget", c.budget, "search");
    read(s, "n_random", c.n_random, "search");
    read(s, "seed", c.search_seed, "search");
    read(s, "candidates", c.suggest.candidates, "search");
    if (s.contains("overrides")) {
      const auto& o = s.at("overrides");
      allow_keys(o, "search.overrides", {"l1", "l2"});
      if (o.contains("l1")) apply_overrides(c.space_l1, o.at("l1"), "search.overrides.l1");
      if (o.contains("l2")) apply_overrides(c.space_l2, o.at("l2"), "search.overrides.l2");
    }
  }
  if (c.budget < 1 || c.budget < c.n_random) throw ConfigError("search needs 1 <= n_random <= budget");
  if (c.suggest.candidates < 1) throw ConfigError("search.candidates must be >= 1");

  read(j, "level", c.level, "config");
  if (c.level != 1 && c.level != 2) throw ConfigError("level must be 1 or 2");
  if (j.contains("out")) c.out = base_dir / j.at("out").get<std::string>();
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_run_config(j, path.parent_path());
}

Fleet load_dataset(const DatasetSpec& spec) {
  if (spec.synth) return synthesize_fleet(spec.units, spec.seed, spec.profile);
  if (!fs::exists(spec.path)) throw DataError("dataset not found: " + spec.path.string());
  return load_fleet_csv(spec.path);
}

HyperParams level2_seed(const HyperParams& l1, const SearchSpace& space) {
  HyperParams hp = l1;
  const auto ref = reference_level2_hyperparams();
  hp.level = Level::l2;
  hp.fc2 = ref.fc2;
  hp.channels = ref.channels;
  hp.step = ref.step;
  const json values = hp;
  Point p(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& d = space.dims()[i];
    if (d.kind == DimKind::categorical) {
      const auto it = std::find(d.choices.begin(), d.choices.end(), values.at(d.name).get<std::string>());
      p[i] = it == d.choices.end() ? 0.0 : static_cast<double>(std::distance(d.choices.begin(), it));
    } else {
      p[i] = std::clamp(values.at(d.name).get<double>(), d.lo, d.hi);
    }
  }
  return to_hyperparams(space, p, Level::l2);
}

}  // namespace rulforge::cli
