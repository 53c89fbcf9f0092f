#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rulforge/layers.hpp"
#include "rulforge/network.hpp"

namespace rulforge {

enum class DimKind : std::uint8_t { real, log_real, integer, categorical };

struct Dimension {
  std::string name;
  DimKind kind = DimKind::real;
  double lo = 0.0;
  double hi = 1.0;
  std::vector<std::string> choices;  // categorical only

  /// Columns this dimension occupies in the unit-hypercube encoding.
  std::size_t encoded_width() const { return kind == DimKind::categorical ? choices.size() : 1; }
  bool contains(double value) const;

  friend bool operator==(const Dimension&, const Dimension&) = default;
};

/// A point in a search space: one raw value per dimension, categorical
/// dimensions holding the choice index.
using Point = std::vector<double>;

class SearchSpace {
 public:
  SearchSpace() = default;
  explicit SearchSpace(std::vector<Dimension> dims);

  std::span<const Dimension> dims() const { return dims_; }
  std::size_t size() const { return dims_.size(); }
  std::size_t encoded_size() const;

  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;
  const Dimension& dim(std::string_view name) const { return dims_[index_of(name)]; }

  bool contains(const Point& p) const;

  /// Uniform draw per dimension (log-uniform for log_real).
  Point sample(std::mt19937_64& rng) const;

  /// Maps to [0,1]^encoded_size(); categoricals are one-hot.
  std::vector<double> encode(const Point& p) const;
  /// Inverse of encode: clamps, rounds integers, argmax for categoricals.
  Point decode(std::span<const double> u) const;

  /// Narrows or replaces the bounds of a numeric dimension.
  void set_range(std::string_view name, double lo, double hi);
  /// Restricts a categorical dimension to a subset of its choices.
  void set_choices(std::string_view name, std::vector<std::string> choices);

  nlohmann::json point_to_json(const Point& p) const;
  Point point_from_json(const nlohmann::json& j) const;

  friend bool operator==(const SearchSpace&, const SearchSpace&) = default;

 private:
  std::vector<Dimension> dims_;
};

enum class Level : std::uint8_t { l1 = 1, l2 = 2 };

struct KernelSize {
  std::size_t rows = 10;
  std::size_t cols = 1;
  friend bool operator==(const KernelSize&, const KernelSize&) = default;
};

std::string to_string(KernelSize k);
KernelSize kernel_from_string(std::string_view s);

/// One configuration of the convolutional regressor and its training run.
struct HyperParams {
  Level level = Level::l1;
  std::size_t window = 161;  // L_w, level 1 only
  std::size_t batch_size = 32;
  std::size_t block_size = 2;   // conv layers per block
  std::size_t conv_blocks = 2;  // number of blocks
  double l1 = 0.0;
  double l2 = 0.0;
  double lr = 1e-3;
  double dropout = 0.0;
  std::size_t fc1 = 100;
  Activation conv_fn = Activation::tanh;
  std::size_t dilation = 1;
  KernelSize kernel;
  Activation fc_fn = Activation::leaky_relu;
  // Level 2 only.
  std::size_t fc2 = 0;
  std::size_t channels = 1;
  std::size_t step = 64;

  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

/// Full optimization domains. L_w only exists at level 1; fc_2, channels and
/// step only at level 2.
SearchSpace level_space(Level level);

HyperParams to_hyperparams(const SearchSpace& space, const Point& p, Level level);
/// Throws ConfigError when a value is outside the space.
Point to_point(const SearchSpace& space, const HyperParams& hp);

/// Best configurations reported for the turbofan challenge data.
HyperParams reference_level1_hyperparams();
HyperParams reference_level2_hyperparams();

/// Architecture realized from hyperparameters.
ConvNetTemplate make_template(const HyperParams& hp, Shape input_shape, std::size_t filters);

void to_json(nlohmann::json& j, const HyperParams& hp);
void from_json(const nlohmann::json& j, HyperParams& hp);

}  // namespace rulforge
