#include "rulforge/stacking.hpp"

#include <algorithm>
#include <cmath>

#include "rulforge/error.hpp"

namespace rulforge {

namespace {

UnitRecord normalized_copy(const Normalizer& norm, const UnitRecord& raw) {
  UnitRecord u = raw;
  for (auto& f : u.frames) norm.apply_in_place(f.values);
  return u;
}

std::size_t tap_width(const Model& l1, std::size_t tap) {
  const auto dense = l1.spec.dense_layers();
  if (tap >= dense.size()) throw ArgumentError("level-1 model has no dense layer " + std::to_string(tap));
  return l1.spec.layers[dense[tap]].units;
}

}  // namespace

EncodingSeries encode_frames(const Model& l1, const UnitRecord& normalized, std::span<const std::size_t> end_frames,
                             const EncoderConfig& cfg) {
  EncodingSeries s;
  s.unit_id = normalized.unit_id;
  s.width = tap_width(l1, cfg.tap);
  const Shape shape{cfg.window, kNumVariables, 1};
  if (l1.spec.input_shape != shape) throw ShapeError("level-1 model input is not " + shape_string(shape));
  Tensor x(shape);
  for (std::size_t e : end_frames) {
    if (e >= normalized.size()) throw ArgumentError("window end beyond the unit's last frame");
    if (e < first_window_end(cfg.window) && !cfg.fill) {
      throw DataError("unit " + std::to_string(normalized.unit_id) + " is shorter than one window");
    }
    const double t = normalized.frames[e].time_s;
    if (!s.times.empty() && t <= s.times.back()) throw ArgumentError("window ends must be strictly increasing");
    copy_window(normalized, static_cast<std::ptrdiff_t>(e), cfg.window, x.values());
    const Tensor enc = predict_tap(l1.spec, l1.params, x, cfg.tap);
    s.times.push_back(t);
    s.frames.push_back(e);
    s.values.insert(s.values.end(), enc.values().begin(), enc.values().end());
  }
  return s;
}

EncodingSeries extract_encodings(const Model& l1, const Normalizer& norm, const UnitRecord& raw,
                                 const EncoderConfig& cfg, std::size_t stride) {
  if (stride < 1) throw ArgumentError("stride must be >= 1");
  if (raw.size() == 0) throw DataError("unit " + std::to_string(raw.unit_id) + " has no frames");
  auto ends = window_ends(raw.size(), cfg.window, stride);
  if (ends.empty()) {
    if (!cfg.fill) throw DataError("unit " + std::to_string(raw.unit_id) + " is shorter than one window");
    ends.push_back(raw.size() - 1);
  }
  return encode_frames(l1, normalized_copy(norm, raw), ends, cfg);
}

namespace {

std::size_t gather_index(const EncodingSeries& s, double target) {
  auto it = std::upper_bound(s.times.begin(), s.times.end(), target);
  if (it == s.times.begin()) return 0;
  return static_cast<std::size_t>(std::distance(s.times.begin(), it)) - 1;
}

}  // namespace

Shape l2_input_shape(std::size_t width, std::size_t channels) { return {kEncodingsPerChannel, width, channels}; }

Tensor assemble_l2_input(const EncodingSeries& series, double t_end, std::size_t channels, std::size_t step) {
  if (series.size() == 0) throw DataError("empty encoding series for unit " + std::to_string(series.unit_id));
  if (channels < 1 || step < 1) throw ArgumentError("channels and step must be >= 1");
  Tensor x(l2_input_shape(series.width, channels));
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t j = 0; j < kEncodingsPerChannel; ++j) {
      const double i = static_cast<double>(c * kEncodingsPerChannel + j);
      const auto enc = series.at(gather_index(series, t_end - i * static_cast<double>(step)));
      for (std::size_t w = 0; w < series.width; ++w) x.at(j, w, c) = enc[w];
    }
  }
  return x;
}

std::size_t clamped_entries(const EncodingSeries& series, double t_end, std::size_t channels, std::size_t step) {
  if (series.size() == 0) return channels * kEncodingsPerChannel;
  std::size_t n = 0;
  for (std::size_t i = 0; i < channels * kEncodingsPerChannel; ++i) {
    if (t_end - static_cast<double>(i) * static_cast<double>(step) < series.times.front()) ++n;
  }
  return n;
}

std::vector<std::size_t> l2_query_frames(std::size_t frame, std::size_t window, std::size_t channels,
                                         std::size_t step) {
  std::vector<std::size_t> out;
  const std::size_t first = first_window_end(window);
  for (std::size_t i = 0; i < channels * kEncodingsPerChannel; ++i) {
    if (i * step > frame || frame - i * step < first) break;
    out.push_back(frame - i * step);
  }
  if (out.empty()) out.push_back(frame);
  std::reverse(out.begin(), out.end());
  return out;
}

bool FoldEnsemble::has_l2() const { return !members.empty() && members.front().l2.has_value(); }

void FoldEnsemble::validate() const {
  if (members.empty()) throw DataError("ensemble has no members");
  if (plan.k != 0 && members.size() != plan.k) {
    throw DataError("ensemble has " + std::to_string(members.size()) + " members but the fold plan has k=" +
                    std::to_string(plan.k));
  }
  const bool l2 = has_l2();
  for (const auto& m : members) {
    if (m.l2.has_value() != l2) throw DataError("ensemble mixes level-1 and level-2 members");
    m.l1.spec.validate();
    check_params(m.l1.spec, m.l1.params);
    if (m.l2) {
      m.l2->spec.validate();
      check_params(m.l2->spec, m.l2->params);
    }
  }
}

namespace {

double predict_normalized(const EnsembleMember& m, const StackConfig& cfg, const UnitRecord& unit,
                          std::size_t frame) {
  if (!m.l2) {
    Tensor x(m.l1.spec.input_shape);
    copy_window(unit, static_cast<std::ptrdiff_t>(frame), cfg.window, x.values());
    return predict(m.l1.spec, m.l1.params, x);
  }
  const auto frames = l2_query_frames(frame, cfg.window, cfg.channels, cfg.step);
  const auto series = encode_frames(m.l1, unit, frames, {cfg.window, cfg.tap, true});
  const Tensor x = assemble_l2_input(series, unit.frames[frame].time_s, cfg.channels, cfg.step);
  return predict(m.l2->spec, m.l2->params, x);
}

}  // namespace

double member_predict(const EnsembleMember& member, const StackConfig& cfg, const UnitRecord& raw, std::size_t frame) {
  if (frame >= raw.size()) throw ArgumentError("frame beyond the unit's last frame");
  return predict_normalized(member, cfg, normalized_copy(member.normalizer, raw), frame);
}

Interval member_interval(std::span<const double> p) {
  if (p.empty()) throw ArgumentError("no member predictions");
  if (std::all_of(p.begin(), p.end(), [&](double v) { return v == p.front(); })) {
    return {p.front(), std::max(p.front(), 0.0), p.front()};
  }
  const double n = static_cast<double>(p.size());
  double mean = 0.0;
  for (double v : p) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : p) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  return {mean, std::max(mean - 3.0 * sd, 0.0), mean + 3.0 * sd};
}

EnsemblePrediction ensemble_predict(const FoldEnsemble& ensemble, const UnitRecord& raw, double t_s) {
  if (ensemble.members.empty()) throw ArgumentError("ensemble has no members");
  const std::size_t frame = raw.frame_index_at(t_s);
  EnsemblePrediction out;
  for (std::size_t m = 0; m < ensemble.members.size(); ++m) {
    try {
      out.members.push_back(member_predict(ensemble.members[m], ensemble.config, raw, frame));
    } catch (const Error& e) {
      throw Error(e.category(), "ensemble member " + std::to_string(m) + ": " + e.what());
    }
  }
  out.interval = member_interval(out.members);
  return out;
}

std::vector<EvalPoint> final_time_points(const Fleet& fleet) {
  std::vector<EvalPoint> pts;
  for (const auto& u : fleet.units()) {
    if (u.size() > 0) pts.push_back({u.unit_id, u.frames.back().time_s});
  }
  return pts;
}

EnsembleScore score_predictions(std::span<const double> truth,
                                const std::vector<std::vector<double>>& member_predictions) {
  if (member_predictions.empty()) throw ArgumentError("no member predictions");
  EnsembleScore s;
  std::vector<double> mean(truth.size(), 0.0);
  std::vector<double> column(member_predictions.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (std::size_t m = 0; m < member_predictions.size(); ++m) {
      if (member_predictions[m].size() != truth.size()) throw ArgumentError("member prediction length mismatch");
      column[m] = member_predictions[m][i];
    }
    mean[i] = member_interval(column).mean;
  }
  s.ensemble = challenge_score(truth, mean);
  for (const auto& p : member_predictions) s.members.push_back(challenge_score(truth, p));
  return s;
}

EnsembleScore score_ensemble(const FoldEnsemble& ensemble, const Fleet& fleet, std::span<const EvalPoint> points) {
  std::vector<double> truth;
  std::vector<std::vector<double>> preds(ensemble.members.size());
  for (const auto& p : points) {
    const auto& unit = fleet.unit(p.unit_id);
    truth.push_back(label_rul(unit, p.t_s));
    const auto pred = ensemble_predict(ensemble, unit, p.t_s);
    for (std::size_t m = 0; m < pred.members.size(); ++m) preds[m].push_back(pred.members[m]);
  }
  return score_predictions(truth, preds);
}

}  // namespace rulforge
