#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace rulforge {

/// Matern-5/2 kernel hyperparameters with one length scale per input column.
struct GpHyper {
  double signal_var = 1.0;
  double noise_var = 1e-2;
  std::vector<double> length_scales;
};

/// k(r) = s^2 (1 + sqrt5 r + 5/3 r^2) exp(-sqrt5 r), r the scaled distance.
double matern52(std::span<const double> a, std::span<const double> b, const GpHyper& h);

struct GpPrediction {
  double mean = 0.0;
  double var = 0.0;
};

/// Zero-mean Gaussian-process regression for inputs in the unit hypercube.
class GaussianProcess {
 public:
  GaussianProcess();
  ~GaussianProcess();
  GaussianProcess(GaussianProcess&&) noexcept;
  GaussianProcess& operator=(GaussianProcess&&) noexcept;

  /// Conditions on (X, y) with fixed hyperparameters. X is row-major n x d.
  void fit(std::vector<std::vector<double>> x, std::vector<double> y, GpHyper hyper);

  /// Chooses hyperparameters by maximizing the log marginal likelihood
  /// (multi-start Nelder-Mead in log space), then conditions on them.
  void fit_ml(std::vector<std::vector<double>> x, std::vector<double> y, std::uint64_t seed);

  GpPrediction predict(std::span<const double> x) const;
  double log_marginal_likelihood() const { return lml_; }
  const GpHyper& hyper() const { return hyper_; }
  std::size_t size() const { return x_.size(); }

 private:
  struct Factor;
  std::vector<std::vector<double>> x_;
  std::vector<double> y_;
  GpHyper hyper_;
  std::unique_ptr<Factor> factor_;
  double lml_ = 0.0;
};

/// Negative log marginal likelihood for given data and hyperparameters;
/// +inf when the covariance is not positive definite.
double gp_negative_log_likelihood(const std::vector<std::vector<double>>& x, std::span<const double> y,
                                  const GpHyper& h);

/// Expected improvement below `best` for a minimization problem.
double expected_improvement(double mean, double var, double best);

}  // namespace rulforge
