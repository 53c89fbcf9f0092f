#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "rulforge/data.hpp"
#include "rulforge/error.hpp"

namespace rulforge {
namespace {

constexpr std::array<std::string_view, 3> kKeyColumns = {"unit", "cycle", "time_s"};
constexpr std::size_t kNumColumns = kKeyColumns.size() + kNumVariables;

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<std::string> expected_columns() {
  std::vector<std::string> cols(kKeyColumns.begin(), kKeyColumns.end());
  for (auto name : kVariableNames) cols.emplace_back(name);
  return cols;
}

void check_header(std::string_view header) {
  const auto expected = expected_columns();
  const auto got = split(header, ',');
  for (const auto& col : expected) {
    if (std::find(got.begin(), got.end(), col) == got.end()) {
      throw SchemaError("missing column '" + col + "'", col);
    }
  }
  for (auto col : got) {
    if (std::find(expected.begin(), expected.end(), col) == expected.end()) {
      throw SchemaError("unexpected column '" + std::string(col) + "'", std::string(col));
    }
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i >= got.size() || got[i] != expected[i]) {
      throw SchemaError("column '" + expected[i] + "' out of order", expected[i]);
    }
  }
  if (got.size() != expected.size()) throw SchemaError("duplicate columns in header");
}

template <typename T>
T parse_field(std::string_view field, std::size_t row, std::string_view column) {
  T value{};
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    std::ostringstream msg;
    msg << "row " << row << ": cannot parse " << column << " value '" << field << "'";
    throw ParseError(msg.str(), row);
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) {
      std::ostringstream msg;
      msg << "row " << row << ": non-finite " << column << " value";
      throw ParseError(msg.str(), row);
    }
  }
  return value;
}

void append_double(std::string& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

}  // namespace

std::string_view fleet_csv_header() {
  static const std::string header = [] {
    std::string h;
    for (const auto& col : expected_columns()) {
      if (!h.empty()) h += ',';
      h += col;
    }
    return h;
  }();
  return header;
}

Fleet read_fleet_csv(std::istream& in, std::string name) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty CSV, header missing");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  check_header(line);

  std::map<int, std::vector<SensorFrame>> grouped;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != kNumColumns) {
      std::ostringstream msg;
      msg << "row " << row << ": expected " << kNumColumns << " fields, got " << fields.size();
      throw ParseError(msg.str(), row);
    }
    const int unit = parse_field<int>(fields[0], row, "unit");
    SensorFrame frame;
    frame.cycle = parse_field<int>(fields[1], row, "cycle");
    frame.time_s = parse_field<double>(fields[2], row, "time_s");
    for (std::size_t v = 0; v < kNumVariables; ++v) {
      frame.values[v] = parse_field<double>(fields[3 + v], row, kVariableNames[v]);
    }
    if (frame.cycle < 1) {
      throw ParseError("row " + std::to_string(row) + ": cycle must be >= 1", row);
    }
    auto& frames = grouped[unit];
    if (!frames.empty()) {
      if (!(frame.time_s > frames.back().time_s)) {
        throw OrderingError("unit " + std::to_string(unit) + ": time_s not increasing at row " +
                            std::to_string(row));
      }
      if (frame.cycle < frames.back().cycle) {
        throw OrderingError("unit " + std::to_string(unit) + ": cycle decreases at row " +
                            std::to_string(row));
      }
    }
    frames.push_back(frame);
  }

  std::vector<UnitRecord> units;
  units.reserve(grouped.size());
  for (auto& [id, frames] : grouped) {
    UnitRecord u;
    u.unit_id = id;
    const double fc = frames.front().values[kFlightClassIndex];
    if (fc != std::round(fc) || fc < 1 || fc > 3) {
      throw DataError("unit " + std::to_string(id) + ": Fc must be 1, 2 or 3");
    }
    u.flight_class = flight_class_from_int(static_cast<int>(fc));
    u.total_useful_life_cycles = frames.back().cycle;
    u.frames = std::move(frames);
    units.push_back(std::move(u));
  }
  return Fleet(std::move(name), std::move(units));
}

Fleet load_fleet_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_fleet_csv(in, path.stem().string());
}

void write_fleet_csv(const Fleet& fleet, std::ostream& out) {
  std::string buf;
  buf.reserve(1 << 16);
  buf.append(fleet_csv_header());
  buf.push_back('\n');
  for (const auto& u : fleet.units()) {
    for (const auto& f : u.frames) {
      buf.append(std::to_string(u.unit_id));
      buf.push_back(',');
      buf.append(std::to_string(f.cycle));
      buf.push_back(',');
      append_double(buf, f.time_s);
      for (double v : f.values) {
        buf.push_back(',');
        append_double(buf, v);
      }
      buf.push_back('\n');
      if (buf.size() > (1 << 16) - 1024) {
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        buf.clear();
      }
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_fleet_csv(const Fleet& fleet, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  write_fleet_csv(fleet, out);
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace rulforge
