#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "collapsar/numerics/matrix.hpp"

namespace collapsar {

/// Forward/backward contract shared by every trainable layer. Parameters
/// that should be checked are packed into the input vector by the caller.
class DifferentiableOp {
 public:
  virtual ~DifferentiableOp() = default;

  virtual std::size_t input_size() const = 0;
  virtual std::size_t output_size() const = 0;
  virtual Vector forward(std::span<const double> input) const = 0;
  /// Vector-Jacobian product: returns d<upstream, forward(input)>/d input.
  virtual Vector backward(std::span<const double> input,
                          std::span<const double> upstream) const = 0;
};

/// DifferentiableOp assembled from two callables.
class LambdaOp final : public DifferentiableOp {
 public:
  using Forward = std::function<Vector(std::span<const double>)>;
  using Backward = std::function<Vector(std::span<const double>, std::span<const double>)>;

  LambdaOp(std::size_t input_size, std::size_t output_size, Forward forward, Backward backward)
      : input_size_(input_size),
        output_size_(output_size),
        forward_(std::move(forward)),
        backward_(std::move(backward)) {}

  std::size_t input_size() const override { return input_size_; }
  std::size_t output_size() const override { return output_size_; }
  Vector forward(std::span<const double> input) const override { return forward_(input); }
  Vector backward(std::span<const double> input,
                  std::span<const double> upstream) const override {
    return backward_(input, upstream);
  }

 private:
  std::size_t input_size_;
  std::size_t output_size_;
  Forward forward_;
  Backward backward_;
};

inline constexpr double kGradCheckEps = 1e-4;

/// Compares `op.backward` against fourth-order central differences. Vector-valued ops
/// are reduced to a scalar with a fixed random linear functional drawn from
/// `functional_seed`. Returns max_i |a_i - n_i| / max(1e-8, |a_i| + |n_i|).
double grad_check(const DifferentiableOp& op, std::span<const double> input,
                  double eps = kGradCheckEps, std::uint64_t functional_seed = 0);

}  // namespace collapsar
