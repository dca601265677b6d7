#include "collapsar/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "collapsar/errors.hpp"

namespace collapsar {

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b,
                         const char* what) {
  if (a.size() != b.size()) {
    throw InputError(std::string(what) + ": length mismatch (" + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()) + ")");
  }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw InputError("matmul: shape mismatch " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " * " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      axpy(aik, b.row(k), out);
    }
  }
  return c;
}

MatmulGrads matmul_backward(const Matrix& a, const Matrix& b, const Matrix& upstream) {
  if (upstream.rows() != a.rows() || upstream.cols() != b.cols()) {
    throw InputError("matmul_backward: upstream shape mismatch");
  }
  return {matmul(upstream, b.transposed()), matmul(a.transposed(), upstream)};
}

Vector vecmat(std::span<const double> x, const Matrix& m) {
  if (x.size() != m.rows()) throw InputError("vecmat: shape mismatch");
  Vector out(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) axpy(x[r], m.row(r), out);
  return out;
}

Vector add(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b, "add");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vector hadamard(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b, "hadamard");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

BinaryGrads add_backward(std::span<const double> upstream) {
  return {Vector(upstream.begin(), upstream.end()), Vector(upstream.begin(), upstream.end())};
}

BinaryGrads hadamard_backward(std::span<const double> a, std::span<const double> b,
                              std::span<const double> upstream) {
  require_same_length(a, b, "hadamard_backward");
  require_same_length(a, upstream, "hadamard_backward");
  return {hadamard(upstream, b), hadamard(upstream, a)};
}

Vector concat(const std::vector<std::span<const double>>& parts) {
  Vector out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

std::vector<Vector> concat_backward(const std::vector<std::size_t>& sizes,
                                    std::span<const double> upstream) {
  std::size_t total = 0;
  for (auto s : sizes) total += s;
  if (total != upstream.size()) throw InputError("concat_backward: size mismatch");
  std::vector<Vector> out;
  out.reserve(sizes.size());
  std::size_t offset = 0;
  for (auto s : sizes) {
    out.emplace_back(upstream.begin() + offset, upstream.begin() + offset + s);
    offset += s;
  }
  return out;
}

Vector mean_pool(const Matrix& rows) {
  if (rows.rows() == 0) throw InputError("mean_pool: no rows");
  Vector out(rows.cols(), 0.0);
  for (std::size_t r = 0; r < rows.rows(); ++r) axpy(1.0, rows.row(r), out);
  const double inv = 1.0 / static_cast<double>(rows.rows());
  for (double& v : out) v *= inv;
  return out;
}

Matrix mean_pool_backward(std::size_t rows, std::span<const double> upstream) {
  if (rows == 0) throw InputError("mean_pool_backward: no rows");
  Matrix g(rows, upstream.size());
  const double inv = 1.0 / static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < upstream.size(); ++c) g(r, c) = upstream[c] * inv;
  return g;
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) noexcept {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

void masked_softmax(std::span<double> logits, const std::vector<bool>& mask) {
  if (mask.size() != logits.size()) throw InputError("masked_softmax: mask size mismatch");
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (mask[i]) mx = std::max(mx, logits[i]);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    logits[i] = mask[i] ? std::exp(logits[i] - mx) : 0.0;
    total += logits[i];
  }
  if (total > 0.0)
    for (double& v : logits) v /= total;
}

}  // namespace collapsar
