#pragma once

#include <cstddef>
#include <span>

#include <nlohmann/json_fwd.hpp>

namespace rulforge {

// Asymmetric exponential penalty rates: late predictions (yhat > y) are
// punished harder than early ones.
inline constexpr double kNasaAlphaEarly = 1.0 / 13.0;
inline constexpr double kNasaAlphaLate = 1.0 / 10.0;

struct ScoreReport {
  double rmse = 0.0;
  double mae = 0.0;
  double nasa = 0.0;
  double combined = 0.0;  // 0.5 * rmse + 0.5 * nasa
  std::size_t m = 0;

  friend bool operator==(const ScoreReport&, const ScoreReport&) = default;
};

double rmse(std::span<const double> y, std::span<const double> yhat);
double mae(std::span<const double> y, std::span<const double> yhat);
double nasa_score(std::span<const double> y, std::span<const double> yhat);

/// Contribution of a single prediction to the NASA score.
double nasa_term(double y, double yhat);

double combined_score(double rmse_value, double nasa_value);

ScoreReport challenge_score(std::span<const double> y, std::span<const double> yhat);

void to_json(nlohmann::json& j, const ScoreReport& r);
void from_json(const nlohmann::json& j, ScoreReport& r);

}  // namespace rulforge
