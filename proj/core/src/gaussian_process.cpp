#include "rulforge/gaussian_process.hpp"

#include <gsl/gsl_multimin.h>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "rulforge/error.hpp"

namespace rulforge {

namespace {

constexpr double kSqrt5 = 2.2360679774997896964;
constexpr double kLogScaleLo = -3.5;  // length scales in [0.03, 20]
constexpr double kLogScaleHi = 3.0;
constexpr double kLogSignalLo = -4.6;  // signal variance in [0.01, 100]
constexpr double kLogSignalHi = 4.6;
constexpr double kLogNoiseLo = -13.8;  // noise variance in [1e-6, 1]
constexpr double kLogNoiseHi = 0.0;

Eigen::MatrixXd gram(const std::vector<std::vector<double>>& x, const GpHyper& h) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = h.signal_var + h.noise_var;
    for (Eigen::Index j = 0; j < i; ++j) {
      k(i, j) = k(j, i) = matern52(x[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(j)], h);
    }
  }
  return k;
}

GpHyper from_theta(const double* theta, std::size_t d) {
  GpHyper h;
  h.length_scales.resize(d);
  for (std::size_t i = 0; i < d; ++i) h.length_scales[i] = std::exp(std::clamp(theta[i], kLogScaleLo, kLogScaleHi));
  h.signal_var = std::exp(std::clamp(theta[d], kLogSignalLo, kLogSignalHi));
  h.noise_var = std::exp(std::clamp(theta[d + 1], kLogNoiseLo, kLogNoiseHi));
  return h;
}

double box_excess(const double* theta, std::size_t d) {
  auto over = [](double v, double lo, double hi) {
    const double e = v < lo ? lo - v : (v > hi ? v - hi : 0.0);
    return e * e;
  };
  double p = 0.0;
  for (std::size_t i = 0; i < d; ++i) p += over(theta[i], kLogScaleLo, kLogScaleHi);
  p += over(theta[d], kLogSignalLo, kLogSignalHi);
  p += over(theta[d + 1], kLogNoiseLo, kLogNoiseHi);
  return p;
}

struct MlProblem {
  const std::vector<std::vector<double>>* x;
  std::span<const double> y;
  std::size_t d;
};

double ml_objective(const gsl_vector* v, void* raw) {
  const auto& p = *static_cast<const MlProblem*>(raw);
  const double* theta = gsl_vector_const_ptr(v, 0);
  const double nll = gp_negative_log_likelihood(*p.x, p.y, from_theta(theta, p.d));
  if (!std::isfinite(nll)) return 1e300;
  return nll + 10.0 * box_excess(theta, p.d);
}

}  // namespace

double matern52(std::span<const double> a, std::span<const double> b, const GpHyper& h) {
  double r2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = (a[i] - b[i]) / h.length_scales[i];
    r2 += t * t;
  }
  const double r = std::sqrt(r2);
  return h.signal_var * (1.0 + kSqrt5 * r + 5.0 / 3.0 * r2) * std::exp(-kSqrt5 * r);
}

double gp_negative_log_likelihood(const std::vector<std::vector<double>>& x, std::span<const double> y,
                                  const GpHyper& h) {
  const Eigen::LLT<Eigen::MatrixXd> llt(gram(x, h));
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
  const Eigen::VectorXd alpha = llt.solve(yv);
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double n = static_cast<double>(y.size());
  return 0.5 * yv.dot(alpha) + 0.5 * logdet + 0.5 * n * std::log(2.0 * std::numbers::pi);
}

double expected_improvement(double mean, double var, double best) {
  const double sd = std::sqrt(std::max(var, 0.0));
  const double gain = best - mean;
  if (sd < 1e-12) return std::max(gain, 0.0);
  const double z = gain / sd;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return gain * cdf + sd * pdf;
}

struct GaussianProcess::Factor {
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::VectorXd alpha;
};

GaussianProcess::GaussianProcess() = default;
GaussianProcess::~GaussianProcess() = default;
GaussianProcess::GaussianProcess(GaussianProcess&&) noexcept = default;
GaussianProcess& GaussianProcess::operator=(GaussianProcess&&) noexcept = default;

void GaussianProcess::fit(std::vector<std::vector<double>> x, std::vector<double> y, GpHyper hyper) {
  if (x.empty() || x.size() != y.size()) throw ArgumentError("GP needs matching, non-empty inputs and targets");
  const std::size_t d = x.front().size();
  for (const auto& row : x) {
    if (row.size() != d) throw ArgumentError("GP inputs have inconsistent widths");
  }
  if (hyper.length_scales.size() != d) throw ArgumentError("GP length scales do not match input width");
  x_ = std::move(x);
  y_ = std::move(y);
  hyper_ = std::move(hyper);
  auto f = std::make_unique<Factor>();
  f->llt.compute(gram(x_, hyper_));
  if (f->llt.info() != Eigen::Success) throw ArgumentError("GP covariance is not positive definite");
  const Eigen::Map<const Eigen::VectorXd> yv(y_.data(), static_cast<Eigen::Index>(y_.size()));
  f->alpha = f->llt.solve(yv);
  factor_ = std::move(f);
  lml_ = -gp_negative_log_likelihood(x_, y_, hyper_);
}

void GaussianProcess::fit_ml(std::vector<std::vector<double>> x, std::vector<double> y, std::uint64_t seed) {
  if (x.empty() || x.size() != y.size()) throw ArgumentError("GP needs matching, non-empty inputs and targets");
  const std::size_t d = x.front().size();
  const std::size_t dim = d + 2;
  MlProblem problem{&x, y, d};

  gsl_multimin_function fn;
  fn.n = dim;
  fn.f = &ml_objective;
  fn.params = &problem;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr int kStarts = 4;
  constexpr int kMaxIter = 400;

  std::vector<double> best_theta;
  double best_value = std::numeric_limits<double>::infinity();
  gsl_vector* start = gsl_vector_alloc(dim);
  gsl_vector* step = gsl_vector_alloc(dim);
  gsl_vector_set_all(step, 1.0);
  gsl_multimin_fminimizer* nm = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim);

  for (int s = 0; s < kStarts; ++s) {
    for (std::size_t i = 0; i < d; ++i) {
      gsl_vector_set(start, i, s == 0 ? std::log(0.5) : kLogScaleLo + unit(rng) * (kLogScaleHi - kLogScaleLo));
    }
    gsl_vector_set(start, d, s == 0 ? 0.0 : -1.0 + 2.0 * unit(rng));
    gsl_vector_set(start, d + 1, s == 0 ? std::log(1e-2) : kLogNoiseLo + unit(rng) * (kLogNoiseHi - kLogNoiseLo));
    gsl_multimin_fminimizer_set(nm, &fn, start, step);
    for (int it = 0; it < kMaxIter; ++it) {
      if (gsl_multimin_fminimizer_iterate(nm) != 0) break;
      if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(nm), 1e-4) == GSL_SUCCESS) break;
    }
    if (nm->fval < best_value) {
      best_value = nm->fval;
      const gsl_vector* xm = gsl_multimin_fminimizer_x(nm);
      best_theta.assign(gsl_vector_const_ptr(xm, 0), gsl_vector_const_ptr(xm, 0) + dim);
    }
  }
  gsl_multimin_fminimizer_free(nm);
  gsl_vector_free(step);
  gsl_vector_free(start);

  if (best_theta.empty()) {
    best_theta.assign(dim, 0.0);
    for (std::size_t i = 0; i < d; ++i) best_theta[i] = std::log(0.5);
    best_theta[d + 1] = std::log(1e-2);
  }
  fit(std::move(x), std::move(y), from_theta(best_theta.data(), d));
}

GpPrediction GaussianProcess::predict(std::span<const double> x) const {
  if (!factor_) throw UsageError("GP has not been fitted");
  const auto n = static_cast<Eigen::Index>(x_.size());
  Eigen::VectorXd ks(n);
  for (Eigen::Index i = 0; i < n; ++i) ks(i) = matern52(x, x_[static_cast<std::size_t>(i)], hyper_);
  GpPrediction p;
  p.mean = ks.dot(factor_->alpha);
  const Eigen::VectorXd v = factor_->llt.matrixL().solve(ks);
  p.var = std::max(hyper_.signal_var - v.squaredNorm(), 1e-12);
  return p;
}

}  // namespace rulforge
