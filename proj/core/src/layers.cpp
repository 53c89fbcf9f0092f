#include "rulforge/layers.hpp"

#include <cmath>
#include <string>

#include "rulforge/error.hpp"

namespace rulforge {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
  }
  return "?";
}

Activation activation_from_string(std::string_view name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  if (name == "leaky_relu") return Activation::leaky_relu;
  throw ArgumentError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Padding p) { return p == Padding::valid ? "valid" : "same"; }

Padding padding_from_string(std::string_view name) {
  if (name == "valid") return Padding::valid;
  if (name == "same") return Padding::same;
  throw ArgumentError("unknown padding '" + std::string(name) + "'");
}

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t dilation,
                               Padding pad) {
  if (pad == Padding::same) return in;
  const std::size_t span = dilation * (kernel - 1);
  return in > span ? in - span : 0;
}

namespace {

struct ConvGeometry {
  std::size_t h, w, c, n, m, f, d, out_h, out_w;
  std::ptrdiff_t pad_r, pad_c;
};

ConvGeometry conv_geometry(const Tensor& input, const Tensor& kernels, std::size_t dilation,
                           Padding pad) {
  if (input.rank() != 3) throw ShapeError("conv2d input must be H x W x C, got " + shape_string(input.shape()));
  if (kernels.rank() != 4) throw ShapeError("conv2d kernels must be n x m x C x F");
  if (dilation < 1) throw ShapeError("dilation must be >= 1");
  ConvGeometry g{};
  g.h = input.dim(0);
  g.w = input.dim(1);
  g.c = input.dim(2);
  g.n = kernels.dim(0);
  g.m = kernels.dim(1);
  g.f = kernels.dim(3);
  g.d = dilation;
  if (kernels.dim(2) != g.c) {
    throw ShapeError("conv2d channel mismatch: input " + shape_string(input.shape()) + ", kernels " +
                     shape_string(kernels.shape()));
  }
  if (g.n == 0 || g.m == 0 || g.f == 0) throw ShapeError("conv2d kernel has an empty dimension");
  g.out_h = conv_output_extent(g.h, g.n, g.d, pad);
  g.out_w = conv_output_extent(g.w, g.m, g.d, pad);
  if (g.out_h == 0 || g.out_w == 0) {
    throw ShapeError("conv2d output would be empty for input " + shape_string(input.shape()) +
                     " with kernel " + std::to_string(g.n) + "x" + std::to_string(g.m) +
                     " and dilation " + std::to_string(g.d));
  }
  if (pad == Padding::same) {
    g.pad_r = static_cast<std::ptrdiff_t>(g.d * (g.n - 1) / 2);
    g.pad_c = static_cast<std::ptrdiff_t>(g.d * (g.m - 1) / 2);
  }
  return g;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias, std::size_t dilation,
              Padding pad) {
  const auto g = conv_geometry(input, kernels, dilation, pad);
  if (!bias.empty() && bias.size() != g.f) throw ShapeError("conv2d bias length mismatch");
  Tensor out({g.out_h, g.out_w, g.f});
  const double* in = input.data();
  const double* k = kernels.data();
  double* o = out.data();
  for (std::size_t i = 0; i < g.out_h; ++i) {
    for (std::size_t j = 0; j < g.out_w; ++j) {
      double* acc = o + (i * g.out_w + j) * g.f;
      if (!bias.empty()) std::copy(bias.data(), bias.data() + g.f, acc);
      for (std::size_t a = 0; a < g.n; ++a) {
        const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(i + g.d * a) - g.pad_r;
        if (r < 0 || r >= static_cast<std::ptrdiff_t>(g.h)) continue;
        for (std::size_t b = 0; b < g.m; ++b) {
          const std::ptrdiff_t col = static_cast<std::ptrdiff_t>(j + g.d * b) - g.pad_c;
          if (col < 0 || col >= static_cast<std::ptrdiff_t>(g.w)) continue;
          const double* px = in + (static_cast<std::size_t>(r) * g.w + static_cast<std::size_t>(col)) * g.c;
          const double* kk = k + (a * g.m + b) * g.c * g.f;
          for (std::size_t c = 0; c < g.c; ++c) {
            const double v = px[c];
            const double* kc = kk + c * g.f;
            for (std::size_t f = 0; f < g.f; ++f) acc[f] += v * kc[f];
          }
        }
      }
    }
  }
  return out;
}

Tensor conv2d(const Tensor& input, const Tensor& kernels, std::size_t dilation, Padding pad) {
  return conv2d(input, kernels, Tensor{}, dilation, pad);
}

void conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& d_output,
                     std::size_t dilation, Padding pad, Tensor* d_input, Tensor& d_kernels,
                     Tensor& d_bias) {
  const auto g = conv_geometry(input, kernels, dilation, pad);
  if (d_output.shape() != Shape{g.out_h, g.out_w, g.f}) throw ShapeError("conv2d gradient shape mismatch");
  if (d_kernels.shape() != kernels.shape()) throw ShapeError("conv2d kernel gradient shape mismatch");
  if (d_bias.size() != g.f) throw ShapeError("conv2d bias gradient shape mismatch");
  if (d_input && d_input->shape() != input.shape()) throw ShapeError("conv2d input gradient shape mismatch");

  const double* in = input.data();
  const double* k = kernels.data();
  const double* go = d_output.data();
  double* gk = d_kernels.data();
  double* gb = d_bias.data();
  double* gi = d_input ? d_input->data() : nullptr;

  for (std::size_t i = 0; i < g.out_h; ++i) {
    for (std::size_t j = 0; j < g.out_w; ++j) {
      const double* gout = go + (i * g.out_w + j) * g.f;
      for (std::size_t f = 0; f < g.f; ++f) gb[f] += gout[f];
      for (std::size_t a = 0; a < g.n; ++a) {
        const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(i + g.d * a) - g.pad_r;
        if (r < 0 || r >= static_cast<std::ptrdiff_t>(g.h)) continue;
        for (std::size_t b = 0; b < g.m; ++b) {
          const std::ptrdiff_t col = static_cast<std::ptrdiff_t>(j + g.d * b) - g.pad_c;
          if (col < 0 || col >= static_cast<std::ptrdiff_t>(g.w)) continue;
          const std::size_t in_off =
              (static_cast<std::size_t>(r) * g.w + static_cast<std::size_t>(col)) * g.c;
          const std::size_t k_off = (a * g.m + b) * g.c * g.f;
          for (std::size_t c = 0; c < g.c; ++c) {
            const double v = in[in_off + c];
            double* gkc = gk + k_off + c * g.f;
            const double* kc = k + k_off + c * g.f;
            double gsum = 0.0;
            for (std::size_t f = 0; f < g.f; ++f) {
              gkc[f] += v * gout[f];
              gsum += kc[f] * gout[f];
            }
            if (gi) gi[in_off + c] += gsum;
          }
        }
      }
    }
  }
}

Tensor maxpool2d(const Tensor& input, std::size_t pool_rows, std::size_t pool_cols,
                 std::vector<std::size_t>* argmax) {
  if (input.rank() != 3) throw ShapeError("maxpool2d input must be H x W x C");
  if (pool_rows == 0 || pool_cols == 0) throw ShapeError("pool size must be positive");
  const std::size_t h = input.dim(0), w = input.dim(1), c = input.dim(2);
  if (pool_rows > h || pool_cols > w) {
    throw ShapeError("pool " + std::to_string(pool_rows) + "x" + std::to_string(pool_cols) +
                     " larger than input " + shape_string(input.shape()));
  }
  const std::size_t oh = h / pool_rows, ow = w / pool_cols;
  Tensor out({oh, ow, c});
  if (argmax) argmax->assign(out.size(), 0);
  for (std::size_t i = 0; i < oh; ++i) {
    for (std::size_t j = 0; j < ow; ++j) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        std::size_t best_idx = ((i * pool_rows) * w + j * pool_cols) * c + ch;
        double best = input[best_idx];
        for (std::size_t a = 0; a < pool_rows; ++a) {
          for (std::size_t b = 0; b < pool_cols; ++b) {
            const std::size_t idx = ((i * pool_rows + a) * w + (j * pool_cols + b)) * c + ch;
            if (input[idx] > best) {
              best = input[idx];
              best_idx = idx;
            }
          }
        }
        const std::size_t o = (i * ow + j) * c + ch;
        out[o] = best;
        if (argmax) (*argmax)[o] = best_idx;
      }
    }
  }
  return out;
}

void maxpool2d_backward(const Tensor& d_output, const std::vector<std::size_t>& argmax,
                        Tensor& d_input) {
  if (argmax.size() != d_output.size()) throw ShapeError("maxpool2d argmax size mismatch");
  for (std::size_t o = 0; o < argmax.size(); ++o) d_input[argmax[o]] += d_output[o];
}

Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  if (weights.rank() != 2) throw ShapeError("dense weights must be out x in");
  const std::size_t out_n = weights.dim(0), in_n = weights.dim(1);
  if (input.size() != in_n) {
    throw ShapeError("dense expects " + std::to_string(in_n) + " inputs, got " +
                     std::to_string(input.size()));
  }
  if (bias.size() != out_n) throw ShapeError("dense bias length mismatch");
  Tensor out({out_n});
  const double* x = input.data();
  for (std::size_t r = 0; r < out_n; ++r) {
    const double* wr = weights.data() + r * in_n;
    double acc = 0.0;
    for (std::size_t c = 0; c < in_n; ++c) acc += wr[c] * x[c];
    out[r] = acc + bias[r];
  }
  return out;
}

void dense_backward(const Tensor& input, const Tensor& weights, const Tensor& d_output,
                    Tensor* d_input, Tensor& d_weights, Tensor& d_bias) {
  const std::size_t out_n = weights.dim(0), in_n = weights.dim(1);
  if (d_output.size() != out_n || input.size() != in_n) throw ShapeError("dense gradient shape mismatch");
  const double* x = input.data();
  for (std::size_t r = 0; r < out_n; ++r) {
    const double go = d_output[r];
    d_bias[r] += go;
    if (go == 0.0) continue;
    double* gw = d_weights.data() + r * in_n;
    for (std::size_t c = 0; c < in_n; ++c) gw[c] += go * x[c];
    if (d_input) {
      const double* wr = weights.data() + r * in_n;
      double* gi = d_input->data();
      for (std::size_t c = 0; c < in_n; ++c) gi[c] += go * wr[c];
    }
  }
}

double activate(Activation fn, double x) {
  switch (fn) {
    case Activation::tanh: return std::tanh(x);
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::leaky_relu: return x > 0.0 ? x : kLeakyReluSlope * x;
  }
  return x;
}

double activate_grad(Activation fn, double x) {
  switch (fn) {
    case Activation::tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::leaky_relu: return x > 0.0 ? 1.0 : kLeakyReluSlope;
  }
  return 1.0;
}

Tensor activation(const Tensor& x, Activation fn) {
  Tensor out = x;
  for (auto& v : out.values()) v = activate(fn, v);
  return out;
}

}  // namespace rulforge
