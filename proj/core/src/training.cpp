#include "rulforge/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>

#include "rulforge/error.hpp"
#include "rulforge/optimizer.hpp"

namespace rulforge {

WindowSource::WindowSource(std::shared_ptr<const Fleet> normalized, std::size_t window,
                           std::size_t stride)
    : fleet_(std::move(normalized)), window_(window), refs_(window_index(*fleet_, window, stride)) {}

void WindowSource::fill(std::size_t i, Tensor& x) const {
  const auto& r = refs_[i];
  copy_window(fleet_->units()[r.unit_pos], static_cast<std::ptrdiff_t>(r.end_frame), window_, x.values());
}

void TensorSource::add(Tensor x, double y, int unit_id, double t_end) {
  if (x.shape() != shape_) throw ShapeError("sample shape " + shape_string(x.shape()) + " != " + shape_string(shape_));
  inputs_.push_back(std::move(x));
  labels_.push_back(y);
  unit_ids_.push_back(unit_id);
  t_ends_.push_back(t_end);
}

void to_json(nlohmann::json& j, const TrainRecord& r) {
  j = nlohmann::json{{"train_loss", r.train_loss},       {"val_loss", r.val_loss},
                     {"lr", r.lr},                       {"best_epoch", r.best_epoch},
                     {"best_val_loss", r.best_val_loss}, {"stopped_epoch", r.stopped_epoch}};
}

void from_json(const nlohmann::json& j, TrainRecord& r) {
  j.at("train_loss").get_to(r.train_loss);
  j.at("val_loss").get_to(r.val_loss);
  j.at("lr").get_to(r.lr);
  j.at("best_epoch").get_to(r.best_epoch);
  j.at("best_val_loss").get_to(r.best_val_loss);
  j.at("stopped_epoch").get_to(r.stopped_epoch);
}

RmseLoss rmse_loss(std::span<const double> y, std::span<const double> yhat) {
  if (y.empty()) throw ArgumentError("empty batch");
  if (y.size() != yhat.size()) throw ArgumentError("batch label/prediction length mismatch");
  RmseLoss out;
  out.grad.resize(y.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = yhat[i] - y[i];
    acc += e * e;
  }
  const double b = static_cast<double>(y.size());
  out.loss = std::sqrt(acc / b);
  if (out.loss > 0.0) {
    for (std::size_t i = 0; i < y.size(); ++i) out.grad[i] = (yhat[i] - y[i]) / (b * out.loss);
  }
  return out;
}

PlateauSchedule::PlateauSchedule(const TrainConfig& cfg, double initial_lr)
    : stop_patience_(cfg.early_stop_patience),
      lr_patience_(cfg.lr_patience),
      lr_factor_(cfg.lr_factor),
      lr_floor_(cfg.lr_floor),
      lr_(initial_lr),
      best_(std::numeric_limits<double>::infinity()) {}

PlateauSchedule::Decision PlateauSchedule::update(double val_loss) {
  Decision d;
  ++epoch_;
  if (val_loss < best_) {
    best_ = val_loss;
    best_epoch_ = epoch_;
    since_improvement_ = 0;
    plateau_wait_ = 0;
    d.improved = true;
    return d;
  }
  ++since_improvement_;
  ++plateau_wait_;
  if (plateau_wait_ >= lr_patience_) {
    plateau_wait_ = 0;
    if (lr_ > lr_floor_) {
      lr_ = std::max(lr_ * lr_factor_, lr_floor_);
      d.reduced_lr = true;
    }
  }
  d.stop = since_improvement_ >= stop_patience_;
  return d;
}

std::vector<double> predict_all(const NetworkSpec& spec, const ParamSet& params,
                                const SampleSource& samples) {
  std::vector<double> out(samples.size());
  Tensor x(samples.input_shape());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples.fill(i, x);
    out[i] = predict(spec, params, x);
  }
  return out;
}

namespace {

double validation_rmse(const NetworkSpec& spec, const ParamSet& params, const SampleSource& val) {
  const auto yhat = predict_all(spec, params, val);
  double acc = 0.0;
  for (std::size_t i = 0; i < yhat.size(); ++i) {
    const double e = yhat[i] - val.label(i);
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(yhat.size()));
}

}  // namespace

TrainResult train_model(const NetworkSpec& spec, const TrainConfig& config, const SampleSource& train,
                        const SampleSource& val, const TrainHooks& hooks) {
  spec.validate();
  if (train.size() == 0 || val.size() == 0) throw ArgumentError("training and validation sets must be non-empty");
  if (train.input_shape() != spec.input_shape || val.input_shape() != spec.input_shape) {
    throw ShapeError("sample shape does not match network input " + shape_string(spec.input_shape));
  }
  if (config.batch_size < 1) throw ArgumentError("batch size must be >= 1");
  if (config.max_epochs < 1) throw ArgumentError("max_epochs must be >= 1");

  TrainResult result;
  ParamSet params = init_params(spec, config.seed);
  std::mt19937_64 rng(config.seed ^ 0xD1B54A32D192ED03ULL);
  PlateauSchedule schedule(config, config.lr);
  auto& rec = result.record;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uint64_t step = 0;
  std::vector<ForwardResult> batch;
  std::vector<double> ys, yhats;
  Tensor x(spec.input_shape);

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const double lr = schedule.lr();
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      ys.clear();
      yhats.clear();
      for (std::size_t k = start; k < end; ++k) {
        train.fill(order[k], x);
        batch.push_back(forward(spec, params, x, Mode::train, &rng));
        ys.push_back(train.label(order[k]));
        yhats.push_back(batch.back().yhat);
      }
      const auto loss = rmse_loss(ys, yhats);
      if (!std::isfinite(loss.loss)) throw TrainingError("training loss is not finite", epoch);
      loss_sum += loss.loss * static_cast<double>(end - start);
      ParamSet grads = params.zeros_like();
      for (std::size_t k = 0; k < batch.size(); ++k) {
        if (loss.grad[k] != 0.0) accumulate_gradients(spec, params, batch[k].tape, loss.grad[k], grads);
      }
      add_penalty_gradients(spec, params, grads);
      batch.clear();
      adam_update(params, grads, lr, ++step);
    }

    double val_loss = validation_rmse(spec, params, val);
    if (hooks.val_loss_override) val_loss = hooks.val_loss_override(epoch, val_loss);
    if (!std::isfinite(val_loss)) throw TrainingError("validation loss is not finite", epoch);

    const auto decision = schedule.update(val_loss);
    rec.train_loss.push_back(loss_sum / static_cast<double>(order.size()));
    rec.val_loss.push_back(val_loss);
    rec.lr.push_back(schedule.lr());
    rec.stopped_epoch = epoch;
    if (decision.improved) result.params = params;
    if (hooks.on_epoch) hooks.on_epoch(epoch, rec);
    if (decision.stop) break;
  }
  rec.best_epoch = schedule.best_epoch();
  rec.best_val_loss = schedule.best_loss();
  return result;
}

}  // namespace rulforge
