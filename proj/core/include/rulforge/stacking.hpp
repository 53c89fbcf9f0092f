#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rulforge/folds.hpp"
#include "rulforge/metrics.hpp"
#include "rulforge/model_io.hpp"
#include "rulforge/preprocess.hpp"
#include "rulforge/search_space.hpp"

namespace rulforge {

inline constexpr std::size_t kEncodingsPerChannel = 100;

/// Tapped dense-layer activations of a level-1 model along one unit.
struct EncodingSeries {
  int unit_id = 0;
  std::size_t width = 0;
  std::vector<double> times;        // t_end of each window, strictly increasing
  std::vector<std::size_t> frames;  // window end frame of each encoding
  std::vector<double> values;       // times.size() x width

  std::size_t size() const { return times.size(); }
  std::span<const double> at(std::size_t i) const { return std::span(values).subspan(i * width, width); }
};

struct EncoderConfig {
  std::size_t window = 161;
  std::size_t tap = 0;  // 0-based dense layer
  bool fill = true;     // encode a padded window when the unit is shorter than one
};

/// Encodes windows ending at `end_frames` of an already normalized unit.
EncodingSeries encode_frames(const Model& l1, const UnitRecord& normalized, std::span<const std::size_t> end_frames,
                             const EncoderConfig& cfg);

/// Encodings every `stride` frames, anchored at the unit's last frame.
EncodingSeries extract_encodings(const Model& l1, const Normalizer& norm, const UnitRecord& raw,
                                 const EncoderConfig& cfg, std::size_t stride);

/// Level-2 input of shape 100 x width x channels. Entry j of channel c holds
/// the latest encoding at or before t_end - (c*100 + j)*step, or the first
/// encoding when that time precedes the series.
Tensor assemble_l2_input(const EncodingSeries& series, double t_end, std::size_t channels, std::size_t step);

/// Number of gathered entries that fall before the series start.
std::size_t clamped_entries(const EncodingSeries& series, double t_end, std::size_t channels, std::size_t step);

/// Window end frames a level-2 query at `frame` needs: the step-spaced grid
/// back from `frame`, newest last, limited to full windows.
std::vector<std::size_t> l2_query_frames(std::size_t frame, std::size_t window, std::size_t channels,
                                         std::size_t step);

Shape l2_input_shape(std::size_t width, std::size_t channels);

struct StackConfig {
  std::size_t window = 161;
  std::size_t tap = 0;
  std::size_t channels = 1;
  std::size_t step = 64;

  friend bool operator==(const StackConfig&, const StackConfig&) = default;
};

struct EnsembleMember {
  Model l1;
  Normalizer normalizer;
  std::optional<Model> l2;

  friend bool operator==(const EnsembleMember&, const EnsembleMember&) = default;
};

struct FoldEnsemble {
  std::vector<EnsembleMember> members;
  StackConfig config;
  FoldPlan plan;
  std::optional<HyperParams> l1_hyperparams;
  std::optional<HyperParams> l2_hyperparams;
  std::optional<std::size_t> l1_trial;
  std::optional<std::size_t> l2_trial;

  bool has_l2() const;
  /// Throws DataError on a member count that differs from the plan's k or a
  /// partial level-2 topology.
  void validate() const;

  friend bool operator==(const FoldEnsemble&, const FoldEnsemble&) = default;
};

/// RUL from one member at frame `frame` of a raw unit.
double member_predict(const EnsembleMember& member, const StackConfig& cfg, const UnitRecord& raw, std::size_t frame);

struct Interval {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// mean +- 3 population std, with the lower bound floored at 0.
Interval member_interval(std::span<const double> predictions);

struct EnsemblePrediction {
  Interval interval;
  std::vector<double> members;
};

EnsemblePrediction ensemble_predict(const FoldEnsemble& ensemble, const UnitRecord& raw, double t_s);

struct EvalPoint {
  int unit_id = 0;
  double t_s = 0.0;
};

/// Each unit's last frame.
std::vector<EvalPoint> final_time_points(const Fleet& fleet);

struct EnsembleScore {
  ScoreReport ensemble;
  std::vector<ScoreReport> members;
};

EnsembleScore score_ensemble(const FoldEnsemble& ensemble, const Fleet& fleet, std::span<const EvalPoint> points);

/// Scores from prediction matrices: member_predictions[m][i] for point i.
EnsembleScore score_predictions(std::span<const double> truth,
                                const std::vector<std::vector<double>>& member_predictions);

}  // namespace rulforge
