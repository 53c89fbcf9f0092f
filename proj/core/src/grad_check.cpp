#include "rulforge/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "rulforge/error.hpp"

namespace rulforge {
namespace {

constexpr std::size_t kMaxParams = 100000;

// Which side of every kink the forward pass landed on.
struct KinkPattern {
  std::vector<bool> signs;
  std::vector<std::size_t> argmax;
  bool operator==(const KinkPattern&) const = default;
};

KinkPattern kink_pattern(const NetworkSpec& spec, const Tape& tape) {
  KinkPattern p;
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    const auto& l = spec.layers[li];
    if (l.kind == LayerKind::activation && l.fn != Activation::tanh) {
      for (double v : tape.inputs[li].values()) p.signs.push_back(v > 0.0);
    } else if (l.kind == LayerKind::maxpool2d) {
      const auto& a = tape.pool_argmax[li];
      p.argmax.insert(p.argmax.end(), a.begin(), a.end());
    }
  }
  return p;
}

struct Evaluation {
  double loss;
  KinkPattern pattern;
};

Evaluation evaluate(const NetworkSpec& spec, const ParamSet& params, const Tensor& x,
                    std::uint64_t dropout_seed) {
  std::mt19937_64 rng(dropout_seed);
  auto r = forward(spec, params, x, Mode::train, &rng);
  return {r.yhat + penalty(spec, params), kink_pattern(spec, r.tape)};
}

}  // namespace

GradCheckReport grad_check(const NetworkSpec& spec, const Tensor& x, std::uint64_t seed,
                           const GradCheckOptions& options) {
  spec.validate();
  if (spec.param_count() > kMaxParams) throw ArgumentError("network too large for a gradient check");

  ParamSet params = init_params(spec, seed);
  std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ULL);
  std::uniform_real_distribution<double> bias_dist(-0.1, 0.1);
  for (auto& lp : params.layers) {
    for (auto& b : lp.bias.values()) b = bias_dist(rng);
  }
  const std::uint64_t dropout_seed = seed + 1;

  // Keep the relu head in its linear region so gradients are not all zero.
  {
    std::mt19937_64 drop(dropout_seed);
    auto r = forward(spec, params, x, Mode::train, &drop);
    const std::size_t head = spec.layers.size() - 2;
    const double pre = r.tape.inputs[head + 1][0];
    if (pre < 0.5) params.layers[head].bias[0] += 0.5 - pre + 1.0;
  }

  std::mt19937_64 drop(dropout_seed);
  auto base = forward(spec, params, x, Mode::train, &drop);
  const ParamSet analytic = backward(spec, params, base.tape, 1.0);
  const KinkPattern base_pattern = kink_pattern(spec, base.tape);

  GradCheckReport report;
  const double h = options.step;
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    for (int which = 0; which < 2; ++which) {
      Tensor& t = which == 0 ? params.layers[li].weights : params.layers[li].bias;
      const Tensor& a = which == 0 ? analytic.layers[li].weights : analytic.layers[li].bias;
      for (std::size_t i = 0; i < t.size(); ++i) {
        const double orig = t[i];
        const auto at = [&](double offset) {
          t[i] = orig + offset;
          return evaluate(spec, params, x, dropout_seed);
        };
        const auto p1 = at(h), m1 = at(-h), p2 = at(2.0 * h), m2 = at(-2.0 * h);
        t[i] = orig;
        const bool kink = !(p1.pattern == base_pattern && m1.pattern == base_pattern &&
                            p2.pattern == base_pattern && m2.pattern == base_pattern);
        if (kink || (spec.l1 > 0.0 && which == 0 && std::abs(orig) <= 2.0 * h)) {
          ++report.skipped;
          continue;
        }
        const double numeric = (8.0 * (p1.loss - m1.loss) - (p2.loss - m2.loss)) / (12.0 * h);
        const double denom = std::max({std::abs(a[i]), std::abs(numeric), options.floor});
        report.max_rel_error = std::max(report.max_rel_error, std::abs(a[i] - numeric) / denom);
        ++report.checked;
      }
    }
  }
  return report;
}

}  // namespace rulforge
