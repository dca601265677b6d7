#pragma once

#include "collapsar/numerics/matrix.hpp"

namespace collapsar {

/// Singular values, sorted non-increasing, all non-negative.
struct Spectrum {
  Vector singular_values;

  double l1() const;
  double max() const { return singular_values.empty() ? 0.0 : singular_values.front(); }
};

/// Thin SVD: m = U * diag(s) * V^T with U (rows x k), V (cols x k),
/// k = min(rows, cols).
struct SvdResult {
  Matrix u;
  Spectrum s;
  Matrix v;
};

/// One-sided Jacobi SVD. Throws InputError on non-finite entries.
SvdResult svd(const Matrix& m);

/// Lower-triangular Cholesky factor L with a = L L^T. Throws NumericError
/// when `a` is not (numerically) positive definite.
Matrix cholesky(const Matrix& a);

/// Solves L x = b for lower-triangular L.
Vector solve_lower(const Matrix& l, std::span<const double> b);
/// Solves L^T x = b for lower-triangular L.
Vector solve_lower_transposed(const Matrix& l, std::span<const double> b);
/// Solves (L L^T) x = b.
Vector cholesky_solve(const Matrix& l, std::span<const double> b);

}  // namespace collapsar
