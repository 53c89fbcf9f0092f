#pragma once

#include <cstdint>

#include "rulforge/network.hpp"

namespace rulforge {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  // Parameters whose +/- h or +/- 2h perturbation flips a relu sign or a pooling
  // argmax; the finite difference straddles a kink there and is not compared.
  std::size_t skipped = 0;
};

struct GradCheckOptions {
  double step = 3e-4;
  // Relative error is |a - n| / max(|a|, |n|, floor).
  double floor = 1e-7;
};

/// Compares backward() against fourth-order central differences of yhat + penalty for
/// every parameter of a freshly initialized network (seeded by `seed`).
GradCheckReport grad_check(const NetworkSpec& spec, const Tensor& x, std::uint64_t seed,
                           const GradCheckOptions& options = {});

}  // namespace rulforge
