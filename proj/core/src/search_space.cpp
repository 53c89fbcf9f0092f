#include "rulforge/search_space.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "rulforge/error.hpp"

namespace rulforge {

bool Dimension::contains(double v) const {
  if (!std::isfinite(v)) return false;
  switch (kind) {
    case DimKind::real:
    case DimKind::log_real: return v >= lo && v <= hi;
    case DimKind::integer: return v == std::round(v) && v >= lo && v <= hi;
    case DimKind::categorical:
      return v == std::round(v) && v >= 0 && v < static_cast<double>(choices.size());
  }
  return false;
}

SearchSpace::SearchSpace(std::vector<Dimension> dims) : dims_(std::move(dims)) {
  for (const auto& d : dims_) {
    if (d.kind == DimKind::categorical) {
      if (d.choices.empty()) throw ConfigError("categorical dimension '" + d.name + "' has no choices");
    } else {
      if (!(d.lo <= d.hi)) throw ConfigError("dimension '" + d.name + "' has lo > hi");
      if (d.kind == DimKind::log_real && d.lo <= 0) {
        throw ConfigError("log-scaled dimension '" + d.name + "' needs a positive lower bound");
      }
    }
  }
}

std::size_t SearchSpace::encoded_size() const {
  std::size_t n = 0;
  for (const auto& d : dims_) n += d.encoded_width();
  return n;
}

std::optional<std::size_t> SearchSpace::find(std::string_view name) const {
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (dims_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t SearchSpace::index_of(std::string_view name) const {
  auto i = find(name);
  if (!i) throw ConfigError("unknown search dimension '" + std::string(name) + "'");
  return *i;
}

bool SearchSpace::contains(const Point& p) const {
  if (p.size() != dims_.size()) return false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!dims_[i].contains(p[i])) return false;
  }
  return true;
}

Point SearchSpace::sample(std::mt19937_64& rng) const {
  Point p(dims_.size());
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    const auto& d = dims_[i];
    switch (d.kind) {
      case DimKind::real: p[i] = std::uniform_real_distribution<double>(d.lo, d.hi)(rng); break;
      case DimKind::log_real:
        p[i] = std::exp(std::uniform_real_distribution<double>(std::log(d.lo), std::log(d.hi))(rng));
        p[i] = std::clamp(p[i], d.lo, d.hi);
        break;
      case DimKind::integer:
        p[i] = static_cast<double>(std::uniform_int_distribution<long long>(
            static_cast<long long>(d.lo), static_cast<long long>(d.hi))(rng));
        break;
      case DimKind::categorical:
        p[i] = static_cast<double>(std::uniform_int_distribution<std::size_t>(0, d.choices.size() - 1)(rng));
        break;
    }
  }
  return p;
}

std::vector<double> SearchSpace::encode(const Point& p) const {
  if (p.size() != dims_.size()) throw ArgumentError("point has wrong dimension count");
  std::vector<double> u;
  u.reserve(encoded_size());
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    const auto& d = dims_[i];
    switch (d.kind) {
      case DimKind::real:
      case DimKind::integer: u.push_back(d.hi > d.lo ? (p[i] - d.lo) / (d.hi - d.lo) : 0.5); break;
      case DimKind::log_real:
        u.push_back(d.hi > d.lo ? (std::log(p[i]) - std::log(d.lo)) / (std::log(d.hi) - std::log(d.lo)) : 0.5);
        break;
      case DimKind::categorical:
        for (std::size_t c = 0; c < d.choices.size(); ++c) u.push_back(static_cast<double>(c) == p[i] ? 1.0 : 0.0);
        break;
    }
  }
  return u;
}

Point SearchSpace::decode(std::span<const double> u) const {
  if (u.size() != encoded_size()) throw ArgumentError("encoded vector has wrong size");
  Point p(dims_.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    const auto& d = dims_[i];
    if (d.kind == DimKind::categorical) {
      auto first = u.begin() + static_cast<std::ptrdiff_t>(k);
      p[i] = static_cast<double>(std::distance(first, std::max_element(first, first + static_cast<std::ptrdiff_t>(d.choices.size()))));
      k += d.choices.size();
      continue;
    }
    const double x = std::clamp(u[k++], 0.0, 1.0);
    switch (d.kind) {
      case DimKind::real: p[i] = std::clamp(d.lo + x * (d.hi - d.lo), d.lo, d.hi); break;
      case DimKind::log_real:
        p[i] = std::clamp(std::exp(std::log(d.lo) + x * (std::log(d.hi) - std::log(d.lo))), d.lo, d.hi);
        break;
      case DimKind::integer: p[i] = std::clamp(std::round(d.lo + x * (d.hi - d.lo)), d.lo, d.hi); break;
      case DimKind::categorical: break;
    }
  }
  return p;
}

void SearchSpace::set_range(std::string_view name, double lo, double hi) {
  auto& d = dims_[index_of(name)];
  if (d.kind == DimKind::categorical) throw ConfigError("'" + d.name + "' is categorical; set choices instead");
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw ConfigError("invalid range for '" + d.name + "'");
  }
  if (d.kind == DimKind::integer && (lo != std::round(lo) || hi != std::round(hi))) {
    throw ConfigError("integer dimension '" + d.name + "' needs integral bounds");
  }
  if (d.kind == DimKind::log_real && lo <= 0) throw ConfigError("'" + d.name + "' needs a positive lower bound");
  d.lo = lo;
  d.hi = hi;
}

void SearchSpace::set_choices(std::string_view name, std::vector<std::string> choices) {
  auto& d = dims_[index_of(name)];
  if (d.kind != DimKind::categorical) throw ConfigError("'" + d.name + "' is not categorical");
  if (choices.empty()) throw ConfigError("'" + d.name + "' needs at least one choice");
  for (const auto& c : choices) {
    if (std::find(d.choices.begin(), d.choices.end(), c) == d.choices.end()) {
      throw ConfigError("'" + c + "' is not a valid choice for '" + d.name + "'");
    }
  }
  d.choices = std::move(choices);
}

nlohmann::json SearchSpace::point_to_json(const Point& p) const {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    const auto& d = dims_[i];
    switch (d.kind) {
      case DimKind::categorical: j[d.name] = d.choices.at(static_cast<std::size_t>(p[i])); break;
      case DimKind::integer: j[d.name] = static_cast<long long>(p[i]); break;
      default: j[d.name] = p[i]; break;
    }
  }
  return j;
}

Point SearchSpace::point_from_json(const nlohmann::json& j) const {
  Point p(dims_.size());
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    const auto& d = dims_[i];
    if (!j.contains(d.name)) throw ConfigError("point is missing '" + d.name + "'");
    if (d.kind == DimKind::categorical) {
      const auto s = j.at(d.name).get<std::string>();
      auto it = std::find(d.choices.begin(), d.choices.end(), s);
      if (it == d.choices.end()) throw ConfigError("'" + s + "' is not a valid choice for '" + d.name + "'");
      p[i] = static_cast<double>(std::distance(d.choices.begin(), it));
    } else {
      p[i] = j.at(d.name).get<double>();
    }
  }
  return p;
}

std::string to_string(KernelSize k) { return std::to_string(k.rows) + "x" + std::to_string(k.cols); }

KernelSize kernel_from_string(std::string_view s) {
  const auto x = s.find('x');
  if (x == std::string_view::npos) throw ArgumentError("kernel size must look like RxC");
  try {
    return {std::stoul(std::string(s.substr(0, x))), std::stoul(std::string(s.substr(x + 1)))};
  } catch (const std::exception&) {
    throw ArgumentError("kernel size must look like RxC, got '" + std::string(s) + "'");
  }
}

namespace {

Dimension real_dim(std::string name, double lo, double hi, DimKind kind = DimKind::real) {
  return {std::move(name), kind, lo, hi, {}};
}
Dimension int_dim(std::string name, double lo, double hi) {
  return {std::move(name), DimKind::integer, lo, hi, {}};
}
Dimension cat_dim(std::string name, std::vector<std::string> choices) {
  return {std::move(name), DimKind::categorical, 0, 0, std::move(choices)};
}

const std::vector<std::string> kActivations = {"tanh", "relu", "leaky_relu"};
const std::vector<std::string> kKernels = {"3x3", "10x1", "10x3"};

}  // namespace

SearchSpace level_space(Level level) {
  std::vector<Dimension> dims;
  if (level == Level::l1) dims.push_back(int_dim("L_w", 100, 500));
  dims.push_back(int_dim("B_s", 31, 128));
  dims.push_back(int_dim("C_bs", 2, 4));
  dims.push_back(int_dim("N_cb", 2, 4));
  dims.push_back(real_dim("l1", 0, 1e-3));
  dims.push_back(real_dim("l2", 0, 1e-3));
  dims.push_back(real_dim("lr", 1e-5, 1e-3, DimKind::log_real));
  dims.push_back(real_dim("dropout", 0, 0.9));
  dims.push_back(int_dim("fc_1", 64, 256));
  dims.push_back(cat_dim("conv_activation", kActivations));
  dims.push_back(int_dim("d_rate", 1, 10));
  dims.push_back(cat_dim("K_s", kKernels));
  dims.push_back(cat_dim("fc_activation", kActivations));
  if (level == Level::l2) {
    dims.push_back(int_dim("fc_2", 100, 1000));
    dims.push_back(int_dim("channels", 1, 3));
    dims.push_back(int_dim("step", 64, 1024));
  }
  return SearchSpace(std::move(dims));
}

namespace {

std::size_t as_size(double v) { return static_cast<std::size_t>(std::llround(v)); }

const std::string& choice(const SearchSpace& s, std::string_view name, const Point& p) {
  const auto& d = s.dim(name);
  return d.choices.at(as_size(p[s.index_of(name)]));
}

double choice_index(const SearchSpace& s, std::string_view name, const std::string& value) {
  const auto& d = s.dim(name);
  auto it = std::find(d.choices.begin(), d.choices.end(), value);
  if (it == d.choices.end()) throw ConfigError("'" + value + "' not allowed for '" + std::string(name) + "'");
  return static_cast<double>(std::distance(d.choices.begin(), it));
}

}  // namespace

HyperParams to_hyperparams(const SearchSpace& s, const Point& p, Level level) {
  if (p.size() != s.size()) throw ArgumentError("point has wrong dimension count");
  auto num = [&](std::string_view n) { return p[s.index_of(n)]; };
  HyperParams hp;
  hp.level = level;
  if (level == Level::l1) hp.window = as_size(num("L_w"));
  hp.batch_size = as_size(num("B_s"));
  hp.block_size = as_size(num("C_bs"));
  hp.conv_blocks = as_size(num("N_cb"));
  hp.l1 = num("l1");
  hp.l2 = num("l2");
  hp.lr = num("lr");
  hp.dropout = num("dropout");
  hp.fc1 = as_size(num("fc_1"));
  hp.conv_fn = activation_from_string(choice(s, "conv_activation", p));
  hp.dilation = as_size(num("d_rate"));
  hp.kernel = kernel_from_string(choice(s, "K_s", p));
  hp.fc_fn = activation_from_string(choice(s, "fc_activation", p));
  if (level == Level::l2) {
    hp.fc2 = as_size(num("fc_2"));
    hp.channels = as_size(num("channels"));
    hp.step = as_size(num("step"));
  }
  return hp;
}

Point to_point(const SearchSpace& s, const HyperParams& hp) {
  Point p(s.size());
  auto set = [&](std::string_view n, double v) {
    if (auto i = s.find(n)) p[*i] = v;
  };
  set("L_w", static_cast<double>(hp.window));
  set("B_s", static_cast<double>(hp.batch_size));
  set("C_bs", static_cast<double>(hp.block_size));
  set("N_cb", static_cast<double>(hp.conv_blocks));
  set("l1", hp.l1);
  set("l2", hp.l2);
  set("lr", hp.lr);
  set("dropout", hp.dropout);
  set("fc_1", static_cast<double>(hp.fc1));
  set("conv_activation", choice_index(s, "conv_activation", std::string(to_string(hp.conv_fn))));
  set("d_rate", static_cast<double>(hp.dilation));
  set("K_s", choice_index(s, "K_s", to_string(hp.kernel)));
  set("fc_activation", choice_index(s, "fc_activation", std::string(to_string(hp.fc_fn))));
  set("fc_2", static_cast<double>(hp.fc2));
  set("channels", static_cast<double>(hp.channels));
  set("step", static_cast<double>(hp.step));
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!s.dims()[i].contains(p[i])) {
      throw ConfigError("hyperparameter '" + s.dims()[i].name + "' outside its search domain");
    }
  }
  return p;
}

HyperParams reference_level1_hyperparams() {
  HyperParams hp;
  hp.level = Level::l1;
  hp.window = 161;
  hp.batch_size = 116;
  hp.block_size = 4;
  hp.conv_blocks = 4;
  hp.l1 = 7.23e-4;
  hp.l2 = 0.0;
  hp.lr = 0.001;
  hp.dropout = 0.13;
  hp.fc1 = 100;
  hp.conv_fn = Activation::tanh;
  hp.dilation = 2;
  hp.kernel = {10, 1};
  hp.fc_fn = Activation::leaky_relu;
  return hp;
}

HyperParams reference_level2_hyperparams() {
  HyperParams hp = reference_level1_hyperparams();
  hp.level = Level::l2;
  hp.batch_size = 31;
  hp.l1 = 6.96e-4;
  hp.l2 = 1.73e-5;
  hp.lr = 5.53e-4;
  hp.dropout = 0.21;
  hp.fc1 = 247;
  hp.fc2 = 105;
  hp.channels = 3;
  hp.step = 989;
  return hp;
}

ConvNetTemplate make_template(const HyperParams& hp, Shape input_shape, std::size_t filters) {
  ConvNetTemplate t;
  t.input_shape = std::move(input_shape);
  t.conv_blocks = hp.conv_blocks;
  t.block_size = hp.block_size;
  t.kernel_rows = hp.kernel.rows;
  t.kernel_cols = hp.kernel.cols;
  t.dilation = hp.dilation;
  t.filters = filters;
  t.padding = Padding::same;
  t.conv_fn = hp.conv_fn;
  t.fc1 = hp.fc1;
  t.fc2 = hp.level == Level::l2 ? hp.fc2 : 0;
  t.fc_fn = hp.fc_fn;
  t.dropout = hp.dropout;
  t.l1 = hp.l1;
  t.l2 = hp.l2;
  return t;
}

void to_json(nlohmann::json& j, const HyperParams& hp) {
  j = nlohmann::json{{"level", static_cast<int>(hp.level)},
                     {"B_s", hp.batch_size},
                     {"C_bs", hp.block_size},
                     {"N_cb", hp.conv_blocks},
                     {"l1", hp.l1},
                     {"l2", hp.l2},
                     {"lr", hp.lr},
                     {"dropout", hp.dropout},
                     {"fc_1", hp.fc1},
                     {"conv_activation", to_string(hp.conv_fn)},
                     {"d_rate", hp.dilation},
                     {"K_s", to_string(hp.kernel)},
                     {"fc_activation", to_string(hp.fc_fn)}};
  if (hp.level == Level::l1) {
    j["L_w"] = hp.window;
  } else {
    j["fc_2"] = hp.fc2;
    j["channels"] = hp.channels;
    j["step"] = hp.step;
  }
}

void from_json(const nlohmann::json& j, HyperParams& hp) {
  hp = HyperParams{};
  const int level = j.value("level", 1);
  if (level != 1 && level != 2) throw ConfigError("level must be 1 or 2");
  hp.level = static_cast<Level>(level);
  if (hp.level == Level::l1) hp.window = j.at("L_w").get<std::size_t>();
  hp.batch_size = j.at("B_s").get<std::size_t>();
  hp.block_size = j.at("C_bs").get<std::size_t>();
  hp.conv_blocks = j.at("N_cb").get<std::size_t>();
  hp.l1 = j.at("l1").get<double>();
  hp.l2 = j.at("l2").get<double>();
  hp.lr = j.at("lr").get<double>();
  hp.dropout = j.at("dropout").get<double>();
  hp.fc1 = j.at("fc_1").get<std::size_t>();
  hp.conv_fn = activation_from_string(j.at("conv_activation").get<std::string>());
  hp.dilation = j.at("d_rate").get<std::size_t>();
  hp.kernel = kernel_from_string(j.at("K_s").get<std::string>());
  hp.fc_fn = activation_from_string(j.at("fc_activation").get<std::string>());
  if (hp.level == Level::l2) {
    if (!j.contains("fc_2") || !j.contains("channels") || !j.contains("step")) {
      throw ConfigError("level-2 hyperparameters need fc_2, channels and step");
    }
    hp.fc2 = j.at("fc_2").get<std::size_t>();
    hp.channels = j.at("channels").get<std::size_t>();
    hp.step = j.at("step").get<std::size_t>();
  }
}

}  // namespace rulforge
