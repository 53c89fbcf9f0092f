#include "rulforge/ensemble_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "rulforge/error.hpp"

namespace rulforge {

namespace fs = std::filesystem;

namespace {

std::string member_file(std::size_t i, const char* level) {
  return "member_" + std::to_string(i) + "_" + level + ".rfm";
}

nlohmann::json stack_json(const StackConfig& c) {
  return {{"window", c.window}, {"tap", c.tap}, {"channels", c.channels}, {"step", c.step}};
}

StackConfig stack_from_json(const nlohmann::json& j) {
  StackConfig c;
  j.at("window").get_to(c.window);
  j.at("tap").get_to(c.tap);
  j.at("channels").get_to(c.channels);
  j.at("step").get_to(c.step);
  return c;
}

Model load_member(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("missing ensemble member file: " + path.string());
  return load_model(path);
}

}  // namespace

void save_ensemble(const FoldEnsemble& e, const fs::path& manifest) {
  e.validate();
  const fs::path dir = manifest.has_parent_path() ? manifest.parent_path() : fs::path(".");
  fs::create_directories(dir);

  nlohmann::json members = nlohmann::json::array();
  for (std::size_t i = 0; i < e.members.size(); ++i) {
    const auto& m = e.members[i];
    nlohmann::json entry{{"l1_model", member_file(i, "l1")}, {"normalizer", m.normalizer}};
    save_model(dir / member_file(i, "l1"), m.l1);
    if (m.l2) {
      entry["l2_model"] = member_file(i, "l2");
      save_model(dir / member_file(i, "l2"), *m.l2);
    }
    members.push_back(std::move(entry));
  }

  nlohmann::json j{{"format", "rulforge-ensemble"},
                   {"version", kManifestVersion},
                   {"topology", e.has_l2() ? "L1+L2" : "L1"},
                   {"stack", stack_json(e.config)},
                   {"fold_plan", e.plan},
                   {"members", std::move(members)}};
  if (e.l1_hyperparams) j["l1_hyperparams"] = *e.l1_hyperparams;
  if (e.l2_hyperparams) j["l2_hyperparams"] = *e.l2_hyperparams;
  if (e.l1_trial) j["l1_trial"] = *e.l1_trial;
  if (e.l2_trial) j["l2_trial"] = *e.l2_trial;

  std::ofstream out(manifest, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + manifest.string());
  out << j.dump(2) << '\n';
}

FoldEnsemble load_ensemble(const fs::path& manifest) {
  std::ifstream in(manifest, std::ios::binary);
  if (!in) throw DataError("cannot open ensemble manifest " + manifest.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("malformed ensemble manifest: " + std::string(e.what()));
  }
  if (j.value("format", std::string{}) != "rulforge-ensemble") throw SchemaError("not an ensemble manifest");
  if (j.value("version", 0) != kManifestVersion) throw SchemaError("unsupported manifest version");

  const fs::path dir = manifest.has_parent_path() ? manifest.parent_path() : fs::path(".");
  FoldEnsemble e;
  try {
    const auto topology = j.at("topology").get<std::string>();
    if (topology != "L1" && topology != "L1+L2") throw SchemaError("unknown topology '" + topology + "'");
    e.config = stack_from_json(j.at("stack"));
    j.at("fold_plan").get_to(e.plan);
    for (const auto& m : j.at("members")) {
      EnsembleMember member;
      member.l1 = load_member(dir / m.at("l1_model").get<std::string>());
      m.at("normalizer").get_to(member.normalizer);
      if (topology == "L1+L2") member.l2 = load_member(dir / m.at("l2_model").get<std::string>());
      e.members.push_back(std::move(member));
    }
    if (j.contains("l1_hyperparams")) e.l1_hyperparams = j.at("l1_hyperparams").get<HyperParams>();
    if (j.contains("l2_hyperparams")) e.l2_hyperparams = j.at("l2_hyperparams").get<HyperParams>();
    if (j.contains("l1_trial")) e.l1_trial = j.at("l1_trial").get<std::size_t>();
    if (j.contains("l2_trial")) e.l2_trial = j.at("l2_trial").get<std::size_t>();
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError("malformed ensemble manifest: " + std::string(ex.what()));
  }
  e.validate();
  return e;
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_field(std::string_view s, std::size_t row, std::string_view column) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ParseError("row " + std::to_string(row) + ": bad " + std::string(column) + " value '" + std::string(s) + "'",
                     row);
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(v)) throw ParseError("row " + std::to_string(row) + ": non-finite " + std::string(column), row);
  }
  return v;
}

std::string trim_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

void expect_header(const std::vector<std::string_view>& got, const std::vector<std::string>& want) {
  for (std::size_t i = 0; i < want.size(); ++i) {
    if (i >= got.size()) throw SchemaError("missing column '" + want[i] + "'", want[i]);
    if (got[i] != want[i]) {
      throw SchemaError("expected column '" + want[i] + "', found '" + std::string(got[i]) + "'", want[i]);
    }
  }
}

}  // namespace

void write_predictions(std::ostream& out, std::span<const PredictionRow> rows, bool round) {
  const std::size_t k = rows.empty() ? 0 : rows.front().members.size();
  out << "unit,t_s,rul_mean,rul_lo,rul_hi";
  for (std::size_t m = 0; m < k; ++m) out << ",member_" << m;
  out << '\n';
  auto rul = [&](double v) { return format_number(round ? std::round(v) : v); };
  for (const auto& r : rows) {
    if (r.members.size() != k) throw ArgumentError("prediction rows disagree on member count");
    out << r.unit_id << ',' << format_number(r.t_s) << ',' << rul(r.rul.mean) << ',' << rul(r.rul.lo) << ','
        << rul(r.rul.hi);
    for (double v : r.members) out << ',' << rul(v);
    out << '\n';
  }
}

std::vector<PredictionRow> read_predictions(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty prediction file");
  line = trim_cr(line);
  const auto header = split_csv(line);
  expect_header(header, {"unit", "t_s", "rul_mean", "rul_lo", "rul_hi"});
  const std::size_t k = header.size() - 5;
  for (std::size_t m = 0; m < k; ++m) {
    if (header[5 + m] != "member_" + std::to_string(m)) {
      throw SchemaError("unexpected column '" + std::string(header[5 + m]) + "'", std::string(header[5 + m]));
    }
  }
  std::vector<PredictionRow> rows;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    line = trim_cr(line);
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != header.size()) throw ParseError("row " + std::to_string(row) + ": wrong field count", row);
    PredictionRow r;
    r.unit_id = parse_field<int>(f[0], row, "unit");
    r.t_s = parse_field<double>(f[1], row, "t_s");
    r.rul.mean = parse_field<double>(f[2], row, "rul_mean");
    r.rul.lo = parse_field<double>(f[3], row, "rul_lo");
    r.rul.hi = parse_field<double>(f[4], row, "rul_hi");
    for (std::size_t m = 0; m < k; ++m) r.members.push_back(parse_field<double>(f[5 + m], row, header[5 + m]));
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_truth(std::ostream& out, std::span<const TruthRow> rows) {
  out << "unit,t_s,rul,flight_class\n";
  for (const auto& r : rows) {
    out << r.unit_id << ',' << format_number(r.t_s) << ',' << format_number(r.rul) << ',' << to_int(r.flight_class)
        << '\n';
  }
}

std::vector<TruthRow> read_truth(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty truth file");
  line = trim_cr(line);
  const auto header = split_csv(line);
  expect_header(header, {"unit", "t_s", "rul", "flight_class"});
  if (header.size() > 4) throw SchemaError("unexpected column '" + std::string(header[4]) + "'", std::string(header[4]));
  std::vector<TruthRow> rows;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    line = trim_cr(line);
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 4) throw ParseError("row " + std::to_string(row) + ": wrong field count", row);
    TruthRow r;
    r.unit_id = parse_field<int>(f[0], row, "unit");
    r.t_s = parse_field<double>(f[1], row, "t_s");
    r.rul = parse_field<double>(f[2], row, "rul");
    try {
      r.flight_class = flight_class_from_int(parse_field<int>(f[3], row, "flight_class"));
    } catch (const ArgumentError& e) {
      throw ParseError("row " + std::to_string(row) + ": " + e.what(), row);
    }
    rows.push_back(r);
  }
  return rows;
}

}  // namespace rulforge
