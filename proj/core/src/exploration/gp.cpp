#include "collapsar/exploration/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "collapsar/errors.hpp"
#include "collapsar/numerics/linalg.hpp"
#include "collapsar/numerics/ops.hpp"

namespace collapsar {

void KernelConfig::validate() const {
  if (!(lengthscale > 0.0) || !std::isfinite(lengthscale)) throw ConfigError("kernel lengthscale must be positive");
  if (!(variance > 0.0) || !std::isfinite(variance)) throw ConfigError("kernel variance must be positive");
}

KernelConfig KernelConfig::from_config(const Config& c) {
  KernelConfig k;
  k.lengthscale = c.get_double("lengthscale", k.lengthscale);
  k.variance = c.get_double("variance", k.variance);
  k.validate();
  return k;
}

double rbf_kernel(std::span<const double> x, std::span<const double> x2, const KernelConfig& cfg) {
  if (x.size() != x2.size()) throw InputError("kernel inputs differ in dimension");
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sq += (x[i] - x2[i]) * (x[i] - x2[i]);
  return cfg.variance * std::exp(-sq / (2.0 * cfg.lengthscale * cfg.lengthscale));
}

Matrix rbf_gram(const Matrix& x, const KernelConfig& cfg, double jitter) {
  const std::size_t n = x.rows();
  Matrix k(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      k(i, j) = k(j, i) = rbf_kernel(x.row(i), x.row(j), cfg);
    }
    k(i, i) += jitter;
  }
  return k;
}

GpData GpData::bernoulli(Matrix x, std::span<const int> labels) {
  if (labels.size() != x.rows()) throw InputError("one label per GP input row required");
  GpData d;
  d.x = std::move(x);
  for (int y : labels) {
    if (y != 0 && y != 1) throw InputError("Bernoulli labels must be 0 or 1");
    d.successes.push_back(y);
    d.trials.push_back(1.0);
  }
  return d;
}

GpData GpData::regression(Matrix x, std::span<const double> targets) {
  if (targets.size() != x.rows()) throw InputError("one target per GP input row required");
  GpData d;
  d.x = std::move(x);
  d.successes.assign(targets.begin(), targets.end());
  d.trials.assign(targets.size(), 1.0);
  return d;
}

namespace {

void check_data(const GpData& d, Likelihood lik) {
  const std::size_t n = d.size();
  if (d.successes.size() != n || d.trials.size() != n) throw InputError("GP data columns differ in length");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(d.successes[i])) throw InputError("GP target is not finite");
    if (lik == Likelihood::bernoulli &&
        !(d.trials[i] >= 0.0 && d.successes[i] >= 0.0 && d.successes[i] <= d.trials[i])) {
      throw InputError("GP counts need 0 <= successes <= trials");
    }
  }
}

// Log-likelihood gradient and negative Hessian diagonal at f.
void likelihood_terms(const GpData& d, const GpFitOptions& opt, const Vector& f, Vector& grad, Vector& w) {
  const std::size_t n = d.size();
  grad.assign(n, 0.0);
  w.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (opt.likelihood == Likelihood::gaussian) {
      grad[i] = (d.successes[i] - f[i]) / opt.noise;
      w[i] = 1.0 / opt.noise;
    } else {
      const double p = sigmoid(f[i]);
      grad[i] = d.successes[i] - d.trials[i] * p;
      w[i] = d.trials[i] * p * (1.0 - p);
    }
  }
}

Matrix laplace_factor(const Matrix& k, const Vector& sqrt_w) {
  const std::size_t n = k.rows();
  Matrix b(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) b(i, j) = sqrt_w[i] * k(i, j) * sqrt_w[j];
    b(i, i) += 1.0;
  }
  return cholesky(b);
}

Vector mat_vec(const Matrix& m, std::span<const double> v) {
  Vector out(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) out[i] = dot(m.row(i), v);
  return out;
}

}  // namespace

GpState gp_fit(GpData data, const KernelConfig& kernel, const GpFitOptions& opt) {
  kernel.validate();
  if (opt.likelihood == Likelihood::gaussian && !(opt.noise > 0.0)) {
    throw ConfigError("Gaussian likelihood needs positive noise");
  }
  if (!(opt.jitter >= 0.0) || !(opt.tolerance > 0.0)) throw ConfigError("GP jitter/tolerance out of range");
  check_data(data, opt.likelihood);

  GpState st;
  st.kernel = kernel;
  st.options = opt;
  const std::size_t n = data.size();
  const Matrix k = rbf_gram(data.x, kernel, opt.jitter);
  if (n > 0) {
    try {
      (void)cholesky(k);
    } catch (const NumericError&) {
      throw NumericError("GP Gram matrix is not positive definite after jitter");
    }
  }

  Vector f(n, 0.0);
  Vector grad;
  Vector w;
  for (st.iterations = 0; st.iterations < opt.max_iterations && n > 0;) {
    likelihood_terms(data, opt, f, grad, w);
    Vector sw(n);
    for (std::size_t i = 0; i < n; ++i) sw[i] = std::sqrt(w[i]);
    const Matrix l = laplace_factor(k, sw);
    Vector b(n);
    for (std::size_t i = 0; i < n; ++i) b[i] = w[i] * f[i] + grad[i];
    Vector kb = mat_vec(k, b);
    for (std::size_t i = 0; i < n; ++i) kb[i] *= sw[i];
    const Vector c = cholesky_solve(l, kb);
    Vector a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = b[i] - sw[i] * c[i];
    const Vector next = mat_vec(k, a);
    double step = 0.0;
    for (std::size_t i = 0; i < n; ++i) step = std::max(step, std::abs(next[i] - f[i]));
    f = next;
    ++st.iterations;
    if (!std::isfinite(step)) throw NumericError("GP Newton iteration diverged");
    if (step < opt.tolerance) {
      st.converged = true;
      break;
    }
  }
  if (n == 0) st.converged = true;

  likelihood_terms(data, opt, f, grad, w);
  st.sqrt_w.resize(n);
  for (std::size_t i = 0; i < n; ++i) st.sqrt_w[i] = std::sqrt(w[i]);
  st.chol = n > 0 ? laplace_factor(k, st.sqrt_w) : Matrix();
  st.f_map = std::move(f);
  st.grad_loglik = std::move(grad);
  st.data = std::move(data);
  return st;
}

GpPrediction gp_predict(const GpState& st, std::span<const double> x) {
  const std::size_t n = st.data.size();
  const double prior = rbf_kernel(x, x, st.kernel);
  if (n == 0) return {0.0, prior};
  Vector ks(n);
  for (std::size_t i = 0; i < n; ++i) ks[i] = rbf_kernel(x, st.data.x.row(i), st.kernel);
  GpPrediction p;
  p.mean = dot(ks, st.grad_loglik);
  for (std::size_t i = 0; i < n; ++i) ks[i] *= st.sqrt_w[i];
  const Vector v = solve_lower(st.chol, ks);
  // Rounding can push the difference to (or a hair below) zero at heavily
  // observed points.
  p.variance = std::clamp(prior - dot(v, v), std::numeric_limits<double>::min(), prior);
  return p;
}

double thompson_pctr(const GpState& st, std::span<const double> x, Rng& rng) {
  const GpPrediction p = gp_predict(st, x);
  return sigmoid(p.mean + std::sqrt(p.variance) * rng.normal());
}

}  // namespace collapsar
