#include "rulforge/optimizer.hpp"

#include <cmath>

#include "rulforge/error.hpp"

namespace rulforge {
namespace {

void update_tensor(Tensor& w, const Tensor& g, Tensor& m, Tensor& v, double lr, double c1,
                   double c2, const AdamConfig& cfg) {
  if (g.shape() != w.shape()) throw ShapeError("gradient shape does not match parameter shape");
  for (std::size_t i = 0; i < w.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    w[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

}  // namespace

void adam_update(ParamSet& params, const ParamSet& grads, double lr, std::uint64_t step,
                 const AdamConfig& cfg) {
  if (step == 0) throw ArgumentError("adam step count is 1-based");
  if (grads.layers.size() != params.layers.size()) throw ShapeError("gradient layer count mismatch");
  if (params.first_moment.size() != params.layers.size()) {
    const auto zeros = params.zeros_like();
    params.first_moment = zeros.layers;
    params.second_moment = zeros.layers;
  }
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    auto& p = params.layers[li];
    const auto& g = grads.layers[li];
    update_tensor(p.weights, g.weights, params.first_moment[li].weights,
                  params.second_moment[li].weights, lr, c1, c2, cfg);
    update_tensor(p.bias, g.bias, params.first_moment[li].bias, params.second_moment[li].bias, lr,
                  c1, c2, cfg);
  }
  ++params.generation;
}

ParamSet adam_step(const ParamSet& params, const ParamSet& grads, double lr, std::uint64_t step,
                   const AdamConfig& cfg) {
  ParamSet out = params;
  adam_update(out, grads, lr, step, cfg);
  return out;
}

}  // namespace rulforge
