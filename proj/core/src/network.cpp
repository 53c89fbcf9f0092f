#include "rulforge/network.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "rulforge/error.hpp"

namespace rulforge {

std::string_view to_string(LayerKind k) {
  switch (k) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::maxpool2d: return "maxpool2d";
    case LayerKind::dense: return "dense";
    case LayerKind::dropout: return "dropout";
    case LayerKind::flatten: return "flatten";
    case LayerKind::activation: return "activation";
  }
  return "?";
}

LayerKind layer_kind_from_string(std::string_view name) {
  for (auto k : {LayerKind::conv2d, LayerKind::maxpool2d, LayerKind::dense, LayerKind::dropout,
                 LayerKind::flatten, LayerKind::activation}) {
    if (to_string(k) == name) return k;
  }
  throw ArgumentError("unknown layer kind '" + std::string(name) + "'");
}

LayerSpec LayerSpec::conv(std::size_t rows, std::size_t cols, std::size_t filters,
                          std::size_t dilation, Padding pad) {
  LayerSpec l;
  l.kind = LayerKind::conv2d;
  l.kernel_rows = rows;
  l.kernel_cols = cols;
  l.filters = filters;
  l.dilation = dilation;
  l.padding = pad;
  return l;
}

LayerSpec LayerSpec::maxpool(std::size_t rows, std::size_t cols) {
  LayerSpec l;
  l.kind = LayerKind::maxpool2d;
  l.pool_rows = rows;
  l.pool_cols = cols;
  return l;
}

LayerSpec LayerSpec::dense_layer(std::size_t units) {
  LayerSpec l;
  l.kind = LayerKind::dense;
  l.units = units;
  return l;
}

LayerSpec LayerSpec::dropout(double p) {
  LayerSpec l;
  l.kind = LayerKind::dropout;
  l.drop_prob = p;
  return l;
}

LayerSpec LayerSpec::flatten() { return LayerSpec{}; }

LayerSpec LayerSpec::act(Activation fn) {
  LayerSpec l;
  l.kind = LayerKind::activation;
  l.fn = fn;
  return l;
}

std::vector<Shape> NetworkSpec::output_shapes() const {
  if (input_shape.size() != 3 || shape_size(input_shape) == 0) {
    throw ShapeError("network input must be a non-empty H x W x C shape");
  }
  std::vector<Shape> shapes;
  Shape cur = input_shape;
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const auto& l = layers[li];
    const std::string where = "layer " + std::to_string(li) + " (" + std::string(to_string(l.kind)) + ")";
    switch (l.kind) {
      case LayerKind::conv2d: {
        if (cur.size() != 3) throw ShapeError(where + " needs a rank-3 input");
        if (l.dilation < 1) throw ShapeError(where + ": dilation must be >= 1");
        if (l.kernel_rows == 0 || l.kernel_cols == 0 || l.filters == 0) {
          throw ShapeError(where + ": kernel and filter counts must be positive");
        }
        const auto h = conv_output_extent(cur[0], l.kernel_rows, l.dilation, l.padding);
        const auto w = conv_output_extent(cur[1], l.kernel_cols, l.dilation, l.padding);
        if (h == 0 || w == 0) throw ShapeError(where + ": output empty for input " + shape_string(cur));
        cur = {h, w, l.filters};
        break;
      }
      case LayerKind::maxpool2d:
        if (cur.size() != 3) throw ShapeError(where + " needs a rank-3 input");
        if (l.pool_rows == 0 || l.pool_cols == 0 || l.pool_rows > cur[0] || l.pool_cols > cur[1]) {
          throw ShapeError(where + ": pool does not fit input " + shape_string(cur));
        }
        cur = {cur[0] / l.pool_rows, cur[1] / l.pool_cols, cur[2]};
        break;
      case LayerKind::flatten:
        cur = {shape_size(cur)};
        break;
      case LayerKind::dense:
        if (cur.size() != 1) throw ShapeError(where + " needs a flat input, got " + shape_string(cur));
        if (l.units == 0) throw ShapeError(where + ": units must be positive");
        cur = {l.units};
        break;
      case LayerKind::dropout:
        if (l.drop_prob < 0.0 || l.drop_prob > 0.9) throw ShapeError(where + ": drop_prob outside [0, 0.9]");
        break;
      case LayerKind::activation:
        break;
    }
    shapes.push_back(cur);
  }
  return shapes;
}

void NetworkSpec::validate() const {
  const auto shapes = output_shapes();
  const auto n = layers.size();
  if (n < 2 || layers[n - 2].kind != LayerKind::dense || layers[n - 2].units != 1 ||
      layers[n - 1].kind != LayerKind::activation || layers[n - 1].fn != Activation::relu) {
    throw ShapeError("network must end with dense(1) followed by relu");
  }
  if (l1 < 0 || l2 < 0) throw ShapeError("penalty weights must be non-negative");
}

std::size_t NetworkSpec::param_count() const {
  const auto shapes = output_shapes();
  std::size_t count = 0;
  Shape in = input_shape;
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const auto& l = layers[li];
    if (l.kind == LayerKind::conv2d) count += (l.kernel_rows * l.kernel_cols * in[2] + 1) * l.filters;
    if (l.kind == LayerKind::dense) count += (in[0] + 1) * l.units;
    in = shapes[li];
  }
  return count;
}

std::vector<std::size_t> NetworkSpec::dense_layers() const {
  std::vector<std::size_t> idx;
  for (std::size_t li = 0; li < layers.size(); ++li) {
    if (layers[li].kind == LayerKind::dense) idx.push_back(li);
  }
  return idx;
}

void to_json(nlohmann::json& j, const LayerSpec& l) {
  j = nlohmann::json{{"kind", to_string(l.kind)}};
  switch (l.kind) {
    case LayerKind::conv2d:
      j["kernel"] = {l.kernel_rows, l.kernel_cols};
      j["dilation"] = l.dilation;
      j["filters"] = l.filters;
      j["padding"] = to_string(l.padding);
      break;
    case LayerKind::maxpool2d: j["pool"] = {l.pool_rows, l.pool_cols}; break;
    case LayerKind::dense: j["units"] = l.units; break;
    case LayerKind::dropout: j["drop_prob"] = l.drop_prob; break;
    case LayerKind::activation: j["fn"] = to_string(l.fn); break;
    case LayerKind::flatten: break;
  }
}

void from_json(const nlohmann::json& j, LayerSpec& l) {
  l = LayerSpec{};
  l.kind = layer_kind_from_string(j.at("kind").get<std::string>());
  switch (l.kind) {
    case LayerKind::conv2d:
      l.kernel_rows = j.at("kernel").at(0).get<std::size_t>();
      l.kernel_cols = j.at("kernel").at(1).get<std::size_t>();
      l.dilation = j.at("dilation").get<std::size_t>();
      l.filters = j.at("filters").get<std::size_t>();
      l.padding = padding_from_string(j.value("padding", std::string("valid")));
      break;
    case LayerKind::maxpool2d:
      l.pool_rows = j.at("pool").at(0).get<std::size_t>();
      l.pool_cols = j.at("pool").at(1).get<std::size_t>();
      break;
    case LayerKind::dense: l.units = j.at("units").get<std::size_t>(); break;
    case LayerKind::dropout: l.drop_prob = j.at("drop_prob").get<double>(); break;
    case LayerKind::activation: l.fn = activation_from_string(j.at("fn").get<std::string>()); break;
    case LayerKind::flatten: break;
  }
}

void to_json(nlohmann::json& j, const NetworkSpec& s) {
  j = nlohmann::json{{"input_shape", s.input_shape}, {"layers", s.layers}, {"l1", s.l1}, {"l2", s.l2}};
}

void from_json(const nlohmann::json& j, NetworkSpec& s) {
  j.at("input_shape").get_to(s.input_shape);
  j.at("layers").get_to(s.layers);
  j.at("l1").get_to(s.l1);
  j.at("l2").get_to(s.l2);
}

NetworkSpec build_network(const ConvNetTemplate& t) {
  NetworkSpec spec;
  spec.input_shape = t.input_shape;
  spec.l1 = t.l1;
  spec.l2 = t.l2;
  if (t.input_shape.size() != 3) throw ShapeError("template input must be H x W x C");
  std::size_t rows = t.input_shape[0];
  const std::size_t extent = t.dilation * (t.kernel_rows - 1) + 1;
  for (std::size_t b = 0; b < t.conv_blocks; ++b) {
    for (std::size_t c = 0; c < t.block_size; ++c) {
      spec.layers.push_back(LayerSpec::conv(t.kernel_rows, t.kernel_cols, t.filters, t.dilation, t.padding));
      spec.layers.push_back(LayerSpec::act(t.conv_fn));
      rows = conv_output_extent(rows, t.kernel_rows, t.dilation, t.padding);
    }
    const bool more_blocks = b + 1 < t.conv_blocks;
    const bool too_short = rows < 2 || (t.padding == Padding::valid && more_blocks && rows / 2 < extent);
    if (!too_short) {
      spec.layers.push_back(LayerSpec::maxpool(2, 1));
      rows /= 2;
    }
  }
  spec.layers.push_back(LayerSpec::flatten());
  spec.layers.push_back(LayerSpec::dense_layer(t.fc1));
  spec.layers.push_back(LayerSpec::act(t.fc_fn));
  spec.layers.push_back(LayerSpec::dropout(t.dropout));
  if (t.fc2 > 0) {
    spec.layers.push_back(LayerSpec::dense_layer(t.fc2));
    spec.layers.push_back(LayerSpec::act(t.fc_fn));
  }
  spec.layers.push_back(LayerSpec::dense_layer(1));
  spec.layers.push_back(LayerSpec::act(Activation::relu));
  spec.validate();
  return spec;
}

std::size_t ParamSet::count() const {
  std::size_t n = 0;
  for_each_tensor([&](const Tensor& t) { n += t.size(); });
  return n;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet z;
  z.layers.reserve(layers.size());
  const auto zeros = [](const Tensor& t) { return t.size() == 0 ? Tensor() : Tensor(t.shape()); };
  for (const auto& l : layers) z.layers.push_back({zeros(l.weights), zeros(l.bias)});
  return z;
}

ParamSet init_params(const NetworkSpec& spec, std::uint64_t seed) {
  const auto shapes = spec.output_shapes();
  std::mt19937_64 rng(seed);
  ParamSet p;
  p.layers.resize(spec.layers.size());
  Shape in = spec.input_shape;
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    const auto& l = spec.layers[li];
    auto& lp = p.layers[li];
    double fan_in = 0, fan_out = 0;
    if (l.kind == LayerKind::conv2d) {
      lp.weights = Tensor({l.kernel_rows, l.kernel_cols, in[2], l.filters});
      lp.bias = Tensor({l.filters});
      fan_in = static_cast<double>(l.kernel_rows * l.kernel_cols * in[2]);
      fan_out = static_cast<double>(l.kernel_rows * l.kernel_cols * l.filters);
    } else if (l.kind == LayerKind::dense) {
      lp.weights = Tensor({l.units, in[0]});
      lp.bias = Tensor({l.units});
      fan_in = static_cast<double>(in[0]);
      fan_out = static_cast<double>(l.units);
    }
    if (!lp.weights.empty()) {
      std::uniform_real_distribution<double> dist(-1.0, 1.0);
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      for (auto& w : lp.weights.values()) w = limit * dist(rng);
    }
    in = shapes[li];
  }
  return p;
}

void check_params(const NetworkSpec& spec, const ParamSet& params) {
  if (params.layers.size() != spec.layers.size()) throw ShapeError("parameter layer count mismatch");
  const auto shapes = spec.output_shapes();
  Shape in = spec.input_shape;
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    const auto& l = spec.layers[li];
    const auto& lp = params.layers[li];
    Shape w, b;
    if (l.kind == LayerKind::conv2d) {
      w = {l.kernel_rows, l.kernel_cols, in[2], l.filters};
      b = {l.filters};
    } else if (l.kind == LayerKind::dense) {
      w = {l.units, in[0]};
      b = {l.units};
    }
    const bool ok = l.has_params() ? (lp.weights.shape() == w && lp.bias.shape() == b)
                                   : (lp.weights.empty() && lp.bias.empty());
    if (!ok) throw ShapeError("parameters of layer " + std::to_string(li) + " do not match the spec");
    in = shapes[li];
  }
}

const Tensor& Tape::tap(const NetworkSpec& spec, std::size_t k) const {
  const auto dense = spec.dense_layers();
  if (k >= dense.size()) throw ArgumentError("tap index " + std::to_string(k) + " out of range");
  const std::size_t li = dense[k];
  const bool activated = li + 1 < spec.layers.size() && spec.layers[li + 1].kind == LayerKind::activation;
  return inputs.at(li + (activated ? 2 : 1));
}

namespace {

Tensor layer_forward(const LayerSpec& l, const LayerParams& lp, const Tensor& in, Mode mode,
                     std::mt19937_64* rng, std::vector<std::size_t>* argmax,
                     std::vector<double>* mask) {
  switch (l.kind) {
    case LayerKind::conv2d: return conv2d(in, lp.weights, lp.bias, l.dilation, l.padding);
    case LayerKind::maxpool2d: return maxpool2d(in, l.pool_rows, l.pool_cols, argmax);
    case LayerKind::dense: return dense(in, lp.weights, lp.bias);
    case LayerKind::activation: return activation(in, l.fn);
    case LayerKind::flatten: {
      Tensor out = in;
      out.reshape({in.size()});
      return out;
    }
    case LayerKind::dropout: {
      if (mode == Mode::infer || l.drop_prob == 0.0) return in;
      if (!rng) throw UsageError("train-mode dropout needs an rng");
      std::uniform_real_distribution<double> u(0.0, 1.0);
      const double keep = 1.0 / (1.0 - l.drop_prob);
      Tensor out = in;
      std::vector<double> m(in.size());
      for (std::size_t i = 0; i < m.size(); ++i) {
        m[i] = u(*rng) >= l.drop_prob ? keep : 0.0;
        out[i] *= m[i];
      }
      if (mask) *mask = std::move(m);
      return out;
    }
  }
  return in;
}

}  // namespace

ForwardResult forward(const NetworkSpec& spec, const ParamSet& params, const Tensor& x, Mode mode,
                      std::mt19937_64* rng) {
  if (x.shape() != spec.input_shape) {
    throw ShapeError("input shape " + shape_string(x.shape()) + " does not match network input " +
                     shape_string(spec.input_shape));
  }
  if (params.layers.size() != spec.layers.size()) throw ShapeError("parameter layer count mismatch");
  ForwardResult r;
  auto& tape = r.tape;
  tape.mode = mode;
  tape.params = &params;
  tape.generation = params.generation;
  tape.inputs.reserve(spec.layers.size() + 1);
  tape.pool_argmax.resize(spec.layers.size());
  tape.dropout_masks.resize(spec.layers.size());
  tape.inputs.push_back(x);
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    tape.inputs.push_back(layer_forward(spec.layers[li], params.layers[li], tape.inputs.back(), mode,
                                        rng, &tape.pool_argmax[li], &tape.dropout_masks[li]));
  }
  r.yhat = tape.output()[0];
  return r;
}

double predict(const NetworkSpec& spec, const ParamSet& params, const Tensor& x) {
  if (x.shape() != spec.input_shape) throw ShapeError("input shape does not match network input");
  Tensor cur = x;
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    cur = layer_forward(spec.layers[li], params.layers[li], cur, Mode::infer, nullptr, nullptr, nullptr);
  }
  return cur[0];
}

Tensor predict_tap(const NetworkSpec& spec, const ParamSet& params, const Tensor& x, std::size_t tap) {
  if (x.shape() != spec.input_shape) throw ShapeError("input shape does not match network input");
  const auto dense_idx = spec.dense_layers();
  if (tap >= dense_idx.size()) throw ArgumentError("tap index " + std::to_string(tap) + " out of range");
  std::size_t stop = dense_idx[tap];
  if (stop + 1 < spec.layers.size() && spec.layers[stop + 1].kind == LayerKind::activation) ++stop;
  Tensor cur = x;
  for (std::size_t li = 0; li <= stop; ++li) {
    cur = layer_forward(spec.layers[li], params.layers[li], cur, Mode::infer, nullptr, nullptr, nullptr);
  }
  return cur;
}

void accumulate_gradients(const NetworkSpec& spec, const ParamSet& params, const Tape& tape,
                          double dloss, ParamSet& grads) {
  if (tape.params != &params || tape.generation != params.generation ||
      tape.inputs.size() != spec.layers.size() + 1) {
    throw UsageError("tape does not belong to the current parameters");
  }
  if (grads.layers.size() != spec.layers.size()) throw ShapeError("gradient layer count mismatch");

  Tensor g(tape.output().shape(), dloss);
  for (std::size_t li = spec.layers.size(); li-- > 0;) {
    const auto& l = spec.layers[li];
    const Tensor& in = tape.inputs[li];
    const bool need_input_grad = li > 0;
    switch (l.kind) {
      case LayerKind::activation:
        for (std::size_t i = 0; i < g.size(); ++i) g[i] *= activate_grad(l.fn, in[i]);
        break;
      case LayerKind::dropout: {
        const auto& mask = tape.dropout_masks[li];
        if (!mask.empty()) {
          for (std::size_t i = 0; i < g.size(); ++i) g[i] *= mask[i];
        }
        break;
      }
      case LayerKind::flatten:
        g.reshape(in.shape());
        break;
      case LayerKind::dense: {
        Tensor gin(in.shape());
        dense_backward(in, params.layers[li].weights, g, need_input_grad ? &gin : nullptr,
                       grads.layers[li].weights, grads.layers[li].bias);
        g = std::move(gin);
        break;
      }
      case LayerKind::conv2d: {
        Tensor gin(need_input_grad ? in.shape() : Shape{0});
        conv2d_backward(in, params.layers[li].weights, g, l.dilation, l.padding,
                        need_input_grad ? &gin : nullptr, grads.layers[li].weights,
                        grads.layers[li].bias);
        g = std::move(gin);
        break;
      }
      case LayerKind::maxpool2d: {
        Tensor gin(in.shape());
        maxpool2d_backward(g, tape.pool_argmax[li], gin);
        g = std::move(gin);
        break;
      }
    }
    if (!need_input_grad) break;
  }
}

double penalty(const NetworkSpec& spec, const ParamSet& params) {
  if (spec.l1 == 0.0 && spec.l2 == 0.0) return 0.0;
  double a = 0.0, s = 0.0;
  for (const auto& lp : params.layers) {
    for (double w : lp.weights.values()) {
      a += std::abs(w);
      s += w * w;
    }
  }
  return spec.l1 * a + spec.l2 * s;
}

void add_penalty_gradients(const NetworkSpec& spec, const ParamSet& params, ParamSet& grads) {
  if (spec.l1 == 0.0 && spec.l2 == 0.0) return;
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    const auto w = params.layers[li].weights.values();
    auto g = grads.layers[li].weights.values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double sign = w[i] > 0.0 ? 1.0 : (w[i] < 0.0 ? -1.0 : 0.0);
      g[i] += spec.l1 * sign + 2.0 * spec.l2 * w[i];
    }
  }
}

ParamSet backward(const NetworkSpec& spec, const ParamSet& params, const Tape& tape, double dloss) {
  ParamSet grads = params.zeros_like();
  accumulate_gradients(spec, params, tape, dloss, grads);
  add_penalty_gradients(spec, params, grads);
  return grads;
}

}  // namespace rulforge
