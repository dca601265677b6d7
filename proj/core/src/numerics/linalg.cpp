#include "collapsar/numerics/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "collapsar/errors.hpp"

namespace collapsar {

namespace {

constexpr int kMaxSweeps = 80;

// Orthogonalizes the rows of `w` (the columns of the input) in place and
// accumulates the rotations into `v` (stored as rows too).
void jacobi_sweeps(Matrix& w, Matrix& v) {
  const std::size_t n = w.rows();
  const double tol = std::numeric_limits<double>::epsilon();
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        auto wp = w.row(p);
        auto wq = w.row(q);
        const double alpha = dot(wp, wp);
        const double beta = dot(wq, wq);
        const double gamma = dot(wp, wq);
        if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = c * t;
        for (std::size_t i = 0; i < wp.size(); ++i) {
          const double a = wp[i];
          const double b = wq[i];
          wp[i] = c * a - s * b;
          wq[i] = s * a + c * b;
        }
        auto vp = v.row(p);
        auto vq = v.row(q);
        for (std::size_t i = 0; i < vp.size(); ++i) {
          const double a = vp[i];
          const double b = vq[i];
          vp[i] = c * a - s * b;
          vq[i] = s * a + c * b;
        }
      }
    }
    if (!rotated) return;
  }
}

// Fills row `k` of `basis` with a unit vector orthogonal to rows [0, k).
void complete_basis_row(Matrix& basis, std::size_t k) {
  const std::size_t dim = basis.cols();
  double best_norm = -1.0;
  Vector best;
  for (std::size_t e = 0; e < dim; ++e) {
    Vector cand(dim, 0.0);
    cand[e] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < k; ++j) axpy(-dot(basis.row(j), cand), basis.row(j), cand);
    }
    const double nrm = norm2(cand);
    if (nrm > best_norm) {
      best_norm = nrm;
      best = std::move(cand);
    }
    if (best_norm > 0.5) break;
  }
  auto row = basis.row(k);
  for (std::size_t i = 0; i < dim; ++i) row[i] = best[i] / best_norm;
}

SvdResult svd_tall(const Matrix& m) {
  const std::size_t n = m.cols();
  Matrix w = m.transposed();  // row j holds column j of m
  Matrix vt = Matrix::identity(n);
  jacobi_sweeps(w, vt);

  Vector sigma(n);
  for (std::size_t j = 0; j < n; ++j) sigma[j] = norm2(w.row(j));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sigma[a] > sigma[b]; });

  const double smax = n == 0 ? 0.0 : sigma[order.front()];
  const double rank_tol =
      std::max(smax, 1.0) * static_cast<double>(std::max(m.rows(), n)) *
      std::numeric_limits<double>::epsilon();

  Matrix ut(n, m.rows());
  Matrix vrows(n, n);
  Vector s(n);
  std::vector<bool> deficient(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    s[k] = sigma[j];
    std::copy(vt.row(j).begin(), vt.row(j).end(), vrows.row(k).begin());
    if (sigma[j] > rank_tol) {
      auto src = w.row(j);
      auto dst = ut.row(k);
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] / sigma[j];
    } else {
      deficient[k] = true;
    }
  }
  for (std::size_t k = 0; k < n; ++k)
    if (deficient[k]) complete_basis_row(ut, k);

  return {ut.transposed(), Spectrum{std::move(s)}, vrows.transposed()};
}

}  // namespace

double Spectrum::l1() const {
  return std::accumulate(singular_values.begin(), singular_values.end(), 0.0);
}

SvdResult svd(const Matrix& m) {
  if (!m.all_finite()) throw InputError("svd: matrix has non-finite entries");
  if (m.rows() >= m.cols()) return svd_tall(m);
  SvdResult t = svd_tall(m.transposed());
  return {std::move(t.v), std::move(t.s), std::move(t.u)};
}

Matrix cholesky(const Matrix& a) {
  if (a.rows() != a.cols()) throw InputError("cholesky: matrix is not square");
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0) || !std::isfinite(diag)) {
      throw NumericError("cholesky: matrix is not positive definite (pivot " +
                         std::to_string(j) + ")");
    }
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / ljj;
    }
  }
  return l;
}

Vector solve_lower(const Matrix& l, std::span<const double> b) {
  const std::size_t n = l.rows();
  if (b.size() != n) throw InputError("solve_lower: size mismatch");
  Vector x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = b[i];
    for (std::size_t k = 0; k < i; ++k) v -= l(i, k) * x[k];
    x[i] = v / l(i, i);
  }
  return x;
}

Vector solve_lower_transposed(const Matrix& l, std::span<const double> b) {
  const std::size_t n = l.rows();
  if (b.size() != n) throw InputError("solve_lower_transposed: size mismatch");
  Vector x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double v = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) v -= l(k, ii) * x[k];
    x[ii] = v / l(ii, ii);
  }
  return x;
}

Vector cholesky_solve(const Matrix& l, std::span<const double> b) {
  return solve_lower_transposed(l, solve_lower(l, b));
}

}  // namespace collapsar
