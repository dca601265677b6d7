#pragma once

#include <span>
#include <vector>

#include "collapsar/numerics/matrix.hpp"

// Elementary differentiable building blocks. Each forward has a matching
// `_backward` that maps an upstream gradient to input gradients.
namespace collapsar {

Matrix matmul(const Matrix& a, const Matrix& b);
struct MatmulGrads {
  Matrix da;
  Matrix db;
};
MatmulGrads matmul_backward(const Matrix& a, const Matrix& b, const Matrix& upstream);

/// Row vector times matrix: (x^T m), x has m.rows() entries.
Vector vecmat(std::span<const double> x, const Matrix& m);

Vector add(std::span<const double> a, std::span<const double> b);
Vector hadamard(std::span<const double> a, std::span<const double> b);
struct BinaryGrads {
  Vector da;
  Vector db;
};
BinaryGrads add_backward(std::span<const double> upstream);
BinaryGrads hadamard_backward(std::span<const double> a, std::span<const double> b,
                              std::span<const double> upstream);

Vector concat(const std::vector<std::span<const double>>& parts);
std::vector<Vector> concat_backward(const std::vector<std::size_t>& sizes,
                                    std::span<const double> upstream);

/// Mean over rows.
Vector mean_pool(const Matrix& rows);
Matrix mean_pool_backward(std::size_t rows, std::span<const double> upstream);

double sigmoid(double x) noexcept;
/// log(1 + exp(x)) without overflow.
double softplus(double x) noexcept;
/// In-place softmax over the entries with mask[i] true; masked entries get 0.
void masked_softmax(std::span<double> logits, const std::vector<bool>& mask);

}  // namespace collapsar
