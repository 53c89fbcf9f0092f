#include "rulforge/metrics.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <string>

#include "rulforge/error.hpp"

namespace rulforge {
namespace {

void check_inputs(std::span<const double> y, std::span<const double> yhat) {
  if (y.empty()) throw ArgumentError("score inputs must be non-empty");
  if (y.size() != yhat.size()) {
    throw ArgumentError("length mismatch: " + std::to_string(y.size()) + " truths vs " +
                        std::to_string(yhat.size()) + " predictions");
  }
}

}  // namespace

double rmse(std::span<const double> y, std::span<const double> yhat) {
  check_inputs(y, yhat);
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = yhat[i] - y[i];
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(y.size()));
}

double mae(std::span<const double> y, std::span<const double> yhat) {
  check_inputs(y, yhat);
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += std::abs(yhat[i] - y[i]);
  return acc / static_cast<double>(y.size());
}

double nasa_term(double y, double yhat) {
  // Ties take the "otherwise" branch; exp(0) - 1 is 0 either way.
  const double alpha = yhat < y ? kNasaAlphaEarly : kNasaAlphaLate;
  return std::expm1(alpha * std::abs(y - yhat));
}

double nasa_score(std::span<const double> y, std::span<const double> yhat) {
  check_inputs(y, yhat);
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += nasa_term(y[i], yhat[i]);
  return acc / static_cast<double>(y.size());
}

double combined_score(double rmse_value, double nasa_value) {
  return 0.5 * rmse_value + 0.5 * nasa_value;
}

ScoreReport challenge_score(std::span<const double> y, std::span<const double> yhat) {
  ScoreReport r;
  r.rmse = rmse(y, yhat);
  r.mae = mae(y, yhat);
  r.nasa = nasa_score(y, yhat);
  r.combined = combined_score(r.rmse, r.nasa);
  r.m = y.size();
  return r;
}

void to_json(nlohmann::json& j, const ScoreReport& r) {
  j = nlohmann::json{
      {"rmse", r.rmse}, {"mae", r.mae}, {"nasa", r.nasa}, {"combined", r.combined}, {"m", r.m}};
}

void from_json(const nlohmann::json& j, ScoreReport& r) {
  j.at("rmse").get_to(r.rmse);
  j.at("mae").get_to(r.mae);
  j.at("nasa").get_to(r.nasa);
  j.at("combined").get_to(r.combined);
  j.at("m").get_to(r.m);
}

}  // namespace rulforge
