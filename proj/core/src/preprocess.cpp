#include "rulforge/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "rulforge/error.hpp"

namespace rulforge {

void Normalizer::apply_in_place(std::span<double, kNumVariables> values) const {
  for (std::size_t f = 0; f < kNumVariables; ++f) values[f] = apply(f, values[f]);
}

Normalizer fit_normalizer(const Fleet& train) {
  const std::size_t n = train.total_frames();
  if (n == 0) throw ArgumentError("cannot fit a normalizer on an empty fleet");
  Normalizer norm;
  std::array<double, kNumVariables> sum{};
  for (const auto& u : train.units()) {
    for (const auto& f : u.frames) {
      for (std::size_t v = 0; v < kNumVariables; ++v) sum[v] += f.values[v];
    }
  }
  for (std::size_t v = 0; v < kNumVariables; ++v) norm.mu[v] = sum[v] / static_cast<double>(n);

  // Second pass on centered values; exact zero spread for constant columns.
  std::array<double, kNumVariables> sq{};
  for (const auto& u : train.units()) {
    for (const auto& f : u.frames) {
      for (std::size_t v = 0; v < kNumVariables; ++v) {
        const double d = f.values[v] - norm.mu[v];
        sq[v] += d * d;
      }
    }
  }
  for (std::size_t v = 0; v < kNumVariables; ++v) {
    norm.sigma[v] = std::sqrt(sq[v] / static_cast<double>(n));
  }
  return norm;
}

Fleet apply_normalizer(const Normalizer& norm, const Fleet& fleet) {
  std::vector<UnitRecord> units(fleet.units().begin(), fleet.units().end());
  for (auto& u : units) {
    for (auto& f : u.frames) norm.apply_in_place(f.values);
  }
  return Fleet(fleet.name(), std::move(units));
}

void to_json(nlohmann::json& j, const Normalizer& n) {
  j = nlohmann::json{{"mu", n.mu}, {"sigma", n.sigma}, {"epsilon", n.epsilon}};
}

void from_json(const nlohmann::json& j, Normalizer& n) {
  j.at("mu").get_to(n.mu);
  j.at("sigma").get_to(n.sigma);
  n.epsilon = j.value("epsilon", Normalizer::kDefaultEpsilon);
}

double label_rul_at_frame(const UnitRecord& unit, std::size_t frame_index) {
  return static_cast<double>(unit.total_useful_life_cycles - unit.frames.at(frame_index).cycle);
}

double label_rul(const UnitRecord& unit, double t_s) {
  return label_rul_at_frame(unit, unit.frame_index_at(t_s));
}

std::vector<std::size_t> window_ends(std::size_t n_frames, std::size_t window, std::size_t stride) {
  if (window < 1) throw ArgumentError("window length must be >= 1");
  if (stride < 1) throw ArgumentError("stride must be >= 1");
  std::vector<std::size_t> ends;
  const std::size_t first = first_window_end(window);
  if (n_frames <= first) return ends;
  for (std::size_t e = n_frames - 1;; e -= stride) {
    ends.push_back(e);
    if (e < first + stride) break;
  }
  std::reverse(ends.begin(), ends.end());
  return ends;
}

std::vector<WindowRef> window_index(const Fleet& fleet, std::size_t window, std::size_t stride) {
  std::vector<WindowRef> refs;
  const auto units = fleet.units();
  for (std::size_t u = 0; u < units.size(); ++u) {
    for (std::size_t e : window_ends(units[u].frames.size(), window, stride)) {
      refs.push_back({u, e, label_rul_at_frame(units[u], e), units[u].frames[e].time_s});
    }
  }
  return refs;
}

void copy_window(const UnitRecord& unit, std::ptrdiff_t end_frame, std::size_t window,
                 std::span<double> out) {
  if (out.size() != window * kNumVariables) throw ShapeError("window buffer has wrong size");
  const auto n = static_cast<std::ptrdiff_t>(unit.frames.size());
  const std::ptrdiff_t start = end_frame - static_cast<std::ptrdiff_t>(window) + 1;
  for (std::size_t r = 0; r < window; ++r) {
    std::ptrdiff_t idx = start + static_cast<std::ptrdiff_t>(r);
    idx = std::clamp<std::ptrdiff_t>(idx, 0, n - 1);
    const auto& vals = unit.frames[static_cast<std::size_t>(idx)].values;
    std::copy(vals.begin(), vals.end(), out.begin() + static_cast<std::ptrdiff_t>(r * kNumVariables));
  }
}

WindowStream::WindowStream(const Fleet& normalized, std::size_t window, std::size_t stride)
    : fleet_(&normalized), window_(window), refs_(window_index(normalized, window, stride)) {}

WindowSample WindowStream::at(std::size_t i) const {
  const auto& ref = refs_.at(i);
  const auto& unit = fleet_->units()[ref.unit_pos];
  WindowSample s;
  s.x.resize(window_ * kNumVariables);
  copy_window(unit, static_cast<std::ptrdiff_t>(ref.end_frame), window_, s.x);
  s.y = ref.label;
  s.unit_id = unit.unit_id;
  s.t_end = ref.t_end;
  return s;
}

std::optional<WindowSample> WindowStream::next() {
  if (cursor_ >= refs_.size()) return std::nullopt;
  return at(cursor_++);
}

WindowStream window_samples(const Fleet& normalized, std::size_t window, std::size_t stride) {
  return WindowStream(normalized, window, stride);
}

}  // namespace rulforge
