#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rulforge/layers.hpp"
#include "rulforge/tensor.hpp"

namespace rulforge {

enum class LayerKind : std::uint8_t { conv2d, maxpool2d, dense, dropout, flatten, activation };

std::string_view to_string(LayerKind k);
LayerKind layer_kind_from_string(std::string_view name);

/// One layer of a network. Only the attributes relevant to `kind` are used.
struct LayerSpec {
  LayerKind kind = LayerKind::flatten;
  std::size_t kernel_rows = 0;
  std::size_t kernel_cols = 0;
  std::size_t dilation = 1;
  std::size_t filters = 0;
  Padding padding = Padding::valid;
  std::size_t pool_rows = 0;
  std::size_t pool_cols = 0;
  std::size_t units = 0;
  double drop_prob = 0.0;
  Activation fn = Activation::relu;

  static LayerSpec conv(std::size_t rows, std::size_t cols, std::size_t filters,
                        std::size_t dilation = 1, Padding pad = Padding::valid);
  static LayerSpec maxpool(std::size_t rows, std::size_t cols);
  static LayerSpec dense_layer(std::size_t units);
  static LayerSpec dropout(double p);
  static LayerSpec flatten();
  static LayerSpec act(Activation fn);

  bool has_params() const { return kind == LayerKind::conv2d || kind == LayerKind::dense; }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct NetworkSpec {
  Shape input_shape;  // H x W x C
  std::vector<LayerSpec> layers;
  double l1 = 0.0;
  double l2 = 0.0;

  /// Output shape of every layer. Throws ShapeError when the chain breaks.
  std::vector<Shape> output_shapes() const;

  /// Shape chain plus the regression head contract: the last two layers are
  /// dense(1) followed by a relu activation.
  void validate() const;

  std::size_t param_count() const;

  /// Positions of dense layers; tap k (0-based) refers to dense_layers()[k].
  std::vector<std::size_t> dense_layers() const;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

void to_json(nlohmann::json& j, const LayerSpec& l);
void from_json(const nlohmann::json& j, LayerSpec& l);
void to_json(nlohmann::json& j, const NetworkSpec& s);
void from_json(const nlohmann::json& j, NetworkSpec& s);

/// Convolution-block regressor template:
/// blocks x [block_size x (conv -> activation), maxpool 2x1] -> flatten ->
/// dense(fc1) -> act -> dropout -> [dense(fc2) -> act] -> dense(1) -> relu.
/// Pools are skipped once the time axis is shorter than two rows.
struct ConvNetTemplate {
  Shape input_shape;
  std::size_t conv_blocks = 2;
  std::size_t block_size = 2;
  std::size_t kernel_rows = 10;
  std::size_t kernel_cols = 1;
  std::size_t dilation = 1;
  std::size_t filters = 32;
  Padding padding = Padding::same;
  Activation conv_fn = Activation::tanh;
  std::size_t fc1 = 100;
  std::size_t fc2 = 0;  // 0: no second dense layer
  Activation fc_fn = Activation::leaky_relu;
  double dropout = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
};

NetworkSpec build_network(const ConvNetTemplate& t);

struct LayerParams {
  Tensor weights;
  Tensor bias;
  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

/// Weights of a network plus the optimizer's moment estimates. Layers without
/// parameters hold empty tensors.
struct ParamSet {
  std::vector<LayerParams> layers;
  std::vector<LayerParams> first_moment;
  std::vector<LayerParams> second_moment;
  std::uint64_t generation = 0;  // bumped on every in-place update

  std::size_t count() const;
  /// Zero-filled gradient buffer with the same layout and no moments.
  ParamSet zeros_like() const;

  template <typename Fn>
  void for_each_tensor(Fn&& fn) {
    for (auto& l : layers) {
      fn(l.weights);
      fn(l.bias);
    }
  }
  template <typename Fn>
  void for_each_tensor(Fn&& fn) const {
    for (const auto& l : layers) {
      fn(l.weights);
      fn(l.bias);
    }
  }

  friend bool operator==(const ParamSet&, const ParamSet&) = default;
};

/// Glorot-uniform weights and zero biases, deterministic in `seed`.
ParamSet init_params(const NetworkSpec& spec, std::uint64_t seed);

/// Throws ShapeError unless every tensor matches `spec`.
void check_params(const NetworkSpec& spec, const ParamSet& params);

enum class Mode : std::uint8_t { train, infer };

/// Activations cached by a forward pass, consumed by backward().
struct Tape {
  std::vector<Tensor> inputs;                       // input of every layer, plus the final output
  std::vector<std::vector<std::size_t>> pool_argmax;  // per layer, empty unless maxpool
  std::vector<std::vector<double>> dropout_masks;     // per layer, empty unless dropout in train mode
  Mode mode = Mode::infer;
  const ParamSet* params = nullptr;
  std::uint64_t generation = 0;

  const Tensor& output() const { return inputs.back(); }
  /// Post-activation output of dense layer `k` (0-based).
  const Tensor& tap(const NetworkSpec& spec, std::size_t k) const;
};

struct ForwardResult {
  double yhat = 0.0;
  Tape tape;
};

/// Full forward pass. Dropout is active only in train mode (inverted scaling)
/// and draws from `rng`, which is required in train mode.
ForwardResult forward(const NetworkSpec& spec, const ParamSet& params, const Tensor& x, Mode mode,
                      std::mt19937_64* rng = nullptr);

/// Inference without keeping a tape.
double predict(const NetworkSpec& spec, const ParamSet& params, const Tensor& x);

/// Inference returning dense-layer activation `tap` (0-based).
Tensor predict_tap(const NetworkSpec& spec, const ParamSet& params, const Tensor& x, std::size_t tap);

/// Gradient of `dloss * yhat` accumulated into `grads` (no penalties).
void accumulate_gradients(const NetworkSpec& spec, const ParamSet& params, const Tape& tape,
                          double dloss, ParamSet& grads);

/// l1 * sum|w| + l2 * sum w^2 over weight tensors (biases are not penalized).
double penalty(const NetworkSpec& spec, const ParamSet& params);
void add_penalty_gradients(const NetworkSpec& spec, const ParamSet& params, ParamSet& grads);

/// Gradient of dloss * yhat + penalty with respect to every parameter.
ParamSet backward(const NetworkSpec& spec, const ParamSet& params, const Tape& tape, double dloss);

}  // namespace rulforge
