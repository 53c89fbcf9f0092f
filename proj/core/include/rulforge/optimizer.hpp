#pragma once

#include <cstdint>

#include "rulforge/network.hpp"

namespace rulforge {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One Adam update with bias correction; `step` is the 1-based update count.
/// Moment slots are created on first use.
void adam_update(ParamSet& params, const ParamSet& grads, double lr, std::uint64_t step,
                 const AdamConfig& cfg = {});

/// Value-returning form of adam_update.
ParamSet adam_step(const ParamSet& params, const ParamSet& grads, double lr, std::uint64_t step,
                   const AdamConfig& cfg = {});

}  // namespace rulforge
