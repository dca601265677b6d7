#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "collapsar/config.hpp"
#include "collapsar/numerics/matrix.hpp"
#include "collapsar/numerics/rng.hpp"

namespace collapsar {

struct KernelConfig {
  double lengthscale = 1.0;
  double variance = 1.0;

  void validate() const;
  static KernelConfig from_config(const Config& cfg);
};

/// s^2 * exp(-|x - x'|^2 / (2 l^2)). Throws InputError on a dimension mismatch.
double rbf_kernel(std::span<const double> x, std::span<const double> x2, const KernelConfig& cfg);

/// Gram matrix over the rows of `x`, plus `jitter` on the diagonal.
Matrix rbf_gram(const Matrix& x, const KernelConfig& cfg, double jitter = 0.0);

enum class Likelihood { bernoulli, gaussian };

/// Observations at the rows of `x`. For the Bernoulli likelihood row i
/// carries `successes[i]` positives out of `trials[i]` draws (a Binomial
/// term, identical to repeating the point `trials[i]` times with a shared
/// latent value). For the Gaussian likelihood `successes` holds real targets
/// and `trials` is ignored.
struct GpData {
  Matrix x;
  std::vector<double> successes;
  std::vector<double> trials;

  std::size_t size() const noexcept { return x.rows(); }
  /// Single Bernoulli labels y in {0, 1}, one per row of x.
  static GpData bernoulli(Matrix x, std::span<const int> labels);
  static GpData regression(Matrix x, std::span<const double> targets);
};

struct GpFitOptions {
  Likelihood likelihood = Likelihood::bernoulli;
  /// Observation noise variance for the Gaussian likelihood.
  double noise = 0.1;
  double jitter = 1e-8;
  double tolerance = 1e-8;
  std::size_t max_iterations = 100;
};

/// Laplace-approximate posterior over latent logits with a zero prior mean.
struct GpState {
  GpData data;
  KernelConfig kernel;
  GpFitOptions options;
  /// Posterior mode at the training inputs.
  Vector f_map;
  /// d log p(y|f) / df at the mode.
  Vector grad_loglik;
  /// Square root of the negative log-likelihood Hessian diagonal.
  Vector sqrt_w;
  /// Cholesky factor of I + W^1/2 K W^1/2.
  Matrix chol;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Newton iterations to the posterior mode; stops once max |step| falls
/// below the tolerance or at max_iterations. Throws NumericError when the
/// jittered Gram matrix is not positive definite.
GpState gp_fit(GpData data, const KernelConfig& kernel, const GpFitOptions& options = {});

struct GpPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

GpPrediction gp_predict(const GpState& state, std::span<const double> x);

/// sigma(f) with f drawn from N(mean, variance) of the predictive at x.
double thompson_pctr(const GpState& state, std::span<const double> x, Rng& rng);

}  // namespace collapsar
