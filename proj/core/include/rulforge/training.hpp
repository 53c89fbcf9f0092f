#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rulforge/network.hpp"
#include "rulforge/preprocess.hpp"

namespace rulforge {

/// Indexed access to (input, label) pairs for training and evaluation.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual std::size_t size() const = 0;
  virtual Shape input_shape() const = 0;
  virtual double label(std::size_t i) const = 0;
  /// Writes sample i into `x`, which already has input_shape().
  virtual void fill(std::size_t i, Tensor& x) const = 0;
};

/// Sliding windows over a normalized fleet, shaped L_w x 20 x 1.
class WindowSource final : public SampleSource {
 public:
  WindowSource(std::shared_ptr<const Fleet> normalized, std::size_t window, std::size_t stride);

  std::size_t size() const override { return refs_.size(); }
  Shape input_shape() const override { return {window_, kNumVariables, 1}; }
  double label(std::size_t i) const override { return refs_[i].label; }
  void fill(std::size_t i, Tensor& x) const override;

  const WindowRef& ref(std::size_t i) const { return refs_[i]; }
  const Fleet& fleet() const { return *fleet_; }

 private:
  std::shared_ptr<const Fleet> fleet_;
  std::size_t window_;
  std::vector<WindowRef> refs_;
};

/// Fully materialized samples.
class TensorSource final : public SampleSource {
 public:
  explicit TensorSource(Shape shape) : shape_(std::move(shape)) {}

  void add(Tensor x, double y, int unit_id = 0, double t_end = 0.0);

  std::size_t size() const override { return inputs_.size(); }
  Shape input_shape() const override { return shape_; }
  double label(std::size_t i) const override { return labels_[i]; }
  void fill(std::size_t i, Tensor& x) const override { x = inputs_[i]; }

  int unit_id(std::size_t i) const { return unit_ids_[i]; }
  double t_end(std::size_t i) const { return t_ends_[i]; }

 private:
  Shape shape_;
  std::vector<Tensor> inputs_;
  std::vector<double> labels_;
  std::vector<int> unit_ids_;
  std::vector<double> t_ends_;
};

struct TrainConfig {
  std::size_t batch_size = 32;
  double lr = 1e-3;
  int max_epochs = 100;
  int early_stop_patience = 8;
  int lr_patience = 3;
  double lr_factor = 0.1;
  double lr_floor = 1e-7;
  std::uint64_t seed = 0;
};

struct TrainRecord {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  // Learning rate after the epoch's plateau check, i.e. the rate the next
  // epoch trains with.
  std::vector<double> lr;
  int best_epoch = 0;  // 1-based
  double best_val_loss = 0.0;
  int stopped_epoch = 0;
};

void to_json(nlohmann::json& j, const TrainRecord& r);
void from_json(const nlohmann::json& j, TrainRecord& r);

struct RmseLoss {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d yhat_i
};

/// RMSE over a batch and its gradient e_i / (B * loss), zero when loss == 0.
RmseLoss rmse_loss(std::span<const double> y, std::span<const double> yhat);

/// Early stopping plus learning-rate reduction on a validation plateau.
/// Improvement means strictly below the best loss so far.
class PlateauSchedule {
 public:
  PlateauSchedule(const TrainConfig& cfg, double initial_lr);

  struct Decision {
    bool improved = false;
    bool reduced_lr = false;
    bool stop = false;
  };

  /// Feed the validation loss of the next epoch.
  Decision update(double val_loss);

  double lr() const { return lr_; }
  int epoch() const { return epoch_; }
  int best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_; }

 private:
  int stop_patience_;
  int lr_patience_;
  double lr_factor_;
  double lr_floor_;
  double lr_;
  double best_;
  int best_epoch_ = 0;
  int epoch_ = 0;
  int since_improvement_ = 0;
  int plateau_wait_ = 0;
};

struct TrainHooks {
  /// Replaces the measured validation loss of an epoch (1-based).
  std::function<double(int epoch, double measured)> val_loss_override;
  std::function<void(int epoch, const TrainRecord&)> on_epoch;
};

struct TrainResult {
  ParamSet params;  // weights of the best epoch
  TrainRecord record;
};

/// Mini-batch Adam on the RMSE loss with per-epoch shuffling, checkpointing
/// the best validation epoch.
TrainResult train_model(const NetworkSpec& spec, const TrainConfig& config, const SampleSource& train,
                        const SampleSource& val, const TrainHooks& hooks = {});

std::vector<double> predict_all(const NetworkSpec& spec, const ParamSet& params,
                                const SampleSource& samples);

}  // namespace rulforge
