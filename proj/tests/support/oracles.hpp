#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "rulforge/data.hpp"
#include "rulforge/tensor.hpp"

namespace rulforge::testing {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

/// Convolution written straight from the definition, one output at a time.
/// `same` pads d*(k-1)/2 zeros before each axis.
inline Tensor direct_conv(const Tensor& in, const Tensor& k, const Tensor& bias, std::size_t d, bool same) {
  const std::size_t H = in.dim(0), W = in.dim(1), C = in.dim(2);
  const std::size_t n = k.dim(0), m = k.dim(1), F = k.dim(3);
  const long pr = same ? static_cast<long>(d * (n - 1) / 2) : 0;
  const long pc = same ? static_cast<long>(d * (m - 1) / 2) : 0;
  const std::size_t oh = same ? H : H - d * (n - 1);
  const std::size_t ow = same ? W : W - d * (m - 1);
  Tensor out({oh, ow, F});
  for (std::size_t i = 0; i < oh; ++i) {
    for (std::size_t j = 0; j < ow; ++j) {
      for (std::size_t f = 0; f < F; ++f) {
        double s = bias.empty() ? 0.0 : bias[f];
        for (std::size_t a = 0; a < n; ++a) {
          for (std::size_t b = 0; b < m; ++b) {
            const long r = static_cast<long>(i + d * a) - pr;
            const long c2 = static_cast<long>(j + d * b) - pc;
            if (r < 0 || c2 < 0 || r >= static_cast<long>(H) || c2 >= static_cast<long>(W)) continue;
            for (std::size_t c = 0; c < C; ++c) {
              s += in[(static_cast<std::size_t>(r) * W + static_cast<std::size_t>(c2)) * C + c] *
                   k[((a * m + b) * C + c) * F + f];
            }
          }
        }
        out[(i * ow + j) * F + f] = s;
      }
    }
  }
  return out;
}

inline Tensor direct_maxpool(const Tensor& in, std::size_t pr, std::size_t pc) {
  const std::size_t oh = in.dim(0) / pr, ow = in.dim(1) / pc, C = in.dim(2);
  Tensor out({oh, ow, C});
  for (std::size_t i = 0; i < oh; ++i) {
    for (std::size_t j = 0; j < ow; ++j) {
      for (std::size_t c = 0; c < C; ++c) {
        double best = -INFINITY;
        for (std::size_t a = 0; a < pr; ++a) {
          for (std::size_t b = 0; b < pc; ++b) best = std::max(best, in.at(i * pr + a, j * pc + b, c));
        }
        out.at(i, j, c) = best;
      }
    }
  }
  return out;
}

/// Central-difference gradient of a scalar function of `x`.
inline std::vector<double> central_difference(const std::function<double(const Tensor&)>& f, Tensor x,
                                              double h = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

/// Unit sampled at 1 Hz with `cycle_len` seconds per cycle and a smooth,
/// unit-specific signal in every variable.
inline UnitRecord make_unit(int id, int cycles, int cycle_len, FlightClass cls = FlightClass::short_haul) {
  UnitRecord u;
  u.unit_id = id;
  u.flight_class = cls;
  u.total_useful_life_cycles = cycles;
  for (int c = 1; c <= cycles; ++c) {
    for (int s = 0; s < cycle_len; ++s) {
      SensorFrame f;
      f.cycle = c;
      f.time_s = static_cast<double>((c - 1) * cycle_len + s);
      for (std::size_t v = 0; v < kNumVariables; ++v) {
        f.values[v] = std::sin(0.01 * f.time_s * static_cast<double>(v + 1) + id) + 0.1 * static_cast<double>(v);
      }
      f.values[kFlightClassIndex] = to_int(cls);
      f.values[kHealthStateIndex] = c * 2 < cycles ? 1.0 : 0.0;
      u.frames.push_back(f);
    }
  }
  return u;
}

inline SynthProfile tiny_profile() {
  SynthProfile p;
  p.tul_min = 8;
  p.tul_max = 14;
  p.cycle_seconds_min = 12;
  p.cycle_seconds_max = 30;
  return p;
}

}  // namespace rulforge::testing
