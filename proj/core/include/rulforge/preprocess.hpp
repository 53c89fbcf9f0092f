#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rulforge/data.hpp"

namespace rulforge {

/// Per-variable standard normalization, x' = (x - mu) / sigma, fitted on a
/// training fleet and reused unchanged on validation and test data.
struct Normalizer {
  static constexpr double kDefaultEpsilon = 1e-8;

  std::array<double, kNumVariables> mu{};
  std::array<double, kNumVariables> sigma{};
  double epsilon = kDefaultEpsilon;

  /// Features whose spread is below epsilon map to exactly 0.
  bool is_constant(std::size_t feature) const { return sigma[feature] < epsilon; }

  double apply(std::size_t feature, double value) const {
    return is_constant(feature) ? 0.0 : (value - mu[feature]) / sigma[feature];
  }
  void apply_in_place(std::span<double, kNumVariables> values) const;

  friend bool operator==(const Normalizer&, const Normalizer&) = default;
};

/// Population mean and population standard deviation over all frames.
Normalizer fit_normalizer(const Fleet& train);
Fleet apply_normalizer(const Normalizer& norm, const Fleet& fleet);

void to_json(nlohmann::json& j, const Normalizer& n);
void from_json(const nlohmann::json& j, Normalizer& n);

/// RUL label, TUL - C_t, for the frame active at time t.
double label_rul(const UnitRecord& unit, double t_s);
double label_rul_at_frame(const UnitRecord& unit, std::size_t frame_index);

/// One L_w x 20 input slab (time-major) with its RUL label.
struct WindowSample {
  std::vector<double> x;
  double y = 0.0;
  int unit_id = 0;
  double t_end = 0.0;
};

/// Window position inside a fleet: the slab covers frames
/// (end_frame - L_w, end_frame].
struct WindowRef {
  std::size_t unit_pos = 0;
  std::size_t end_frame = 0;
  double label = 0.0;
  double t_end = 0.0;
};

/// Smallest window end index that yields a full window. A unit with T frames
/// contributes T - L_w windows at stride 1.
inline std::size_t first_window_end(std::size_t window) { return window; }

/// Window ends of one unit, ascending, anchored at the unit's last frame and
/// spaced by `stride` frames. Empty for units with fewer than L_w + 1 frames.
std::vector<std::size_t> window_ends(std::size_t n_frames, std::size_t window, std::size_t stride);

std::vector<WindowRef> window_index(const Fleet& fleet, std::size_t window, std::size_t stride = 1);

/// Copies the window's frames into `out` (size window * kNumVariables).
/// Rows before the unit's first frame repeat the first frame.
void copy_window(const UnitRecord& unit, std::ptrdiff_t end_frame, std::size_t window,
                 std::span<double> out);

/// Lazily materialized sequence of WindowSample over a normalized fleet.
class WindowStream {
 public:
  WindowStream(const Fleet& normalized, std::size_t window, std::size_t stride = 1);
  WindowStream(Fleet&&, std::size_t, std::size_t = 1) = delete;

  std::size_t size() const { return refs_.size(); }
  std::optional<WindowSample> next();
  WindowSample at(std::size_t i) const;
  std::span<const WindowRef> refs() const { return refs_; }

 private:
  const Fleet* fleet_;
  std::size_t window_;
  std::vector<WindowRef> refs_;
  std::size_t cursor_ = 0;
};

WindowStream window_samples(const Fleet& normalized, std::size_t window, std::size_t stride = 1);
WindowStream window_samples(Fleet&&, std::size_t, std::size_t = 1) = delete;

}  // namespace rulforge
