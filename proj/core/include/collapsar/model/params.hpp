#pragma once

#include <string>
#include <vector>

#include "collapsar/numerics/matrix.hpp"
#include "collapsar/numerics/rng.hpp"

namespace collapsar {

/// A named trainable tensor inside a parameter block (table, expert, gate
/// or tower). Vectors are stored as 1 x n matrices.
struct Param {
  std::string name;
  std::size_t block = 0;
  Matrix value;
};

class ParamStore {
 public:
  std::size_t add_block(std::string name);
  std::size_t add(std::size_t block, std::string name, Matrix value);

  std::size_t size() const noexcept { return params_.size(); }
  Param& operator[](std::size_t i) { return params_[i]; }
  const Param& operator[](std::size_t i) const { return params_[i]; }
  Matrix& value(std::size_t i) { return params_[i].value; }
  const Matrix& value(std::size_t i) const { return params_[i].value; }

  const std::vector<std::string>& blocks() const noexcept { return blocks_; }
  std::size_t block_index(const std::string& name) const;
  std::vector<std::size_t> params_in_block(std::size_t block) const;
  std::size_t find(const std::string& name) const;

  /// Total scalar count.
  std::size_t count() const;
  /// Flattened copy of every parameter in order.
  Vector flatten() const;
  void unflatten(std::span<const double> values);

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<std::string> blocks_;
  std::vector<Param> params_;
};

/// Gradient buffers shaped like a ParamStore.
class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(const ParamStore& params);

  Matrix& operator[](std::size_t i) { return grads_[i]; }
  const Matrix& operator[](std::size_t i) const { return grads_[i]; }
  std::size_t size() const noexcept { return grads_.size(); }
  void zero();
  void scale(double factor);
  void add(const Gradients& other, double factor = 1.0);
  Vector flatten() const;

 private:
  std::vector<Matrix> grads_;
};

/// Fully connected layer y = x W + b with W stored in x out.
struct Dense {
  std::size_t w = 0;
  std::size_t b = 0;
};

/// Stack of Dense layers. Hidden layers apply ReLU when `relu` is set; the
/// last layer applies ReLU only if `relu_last` is also set.
class Mlp {
 public:
  Mlp() = default;
  /// Adds layers in -> dims[0] -> ... -> dims.back() to `params` under
  /// `block`, He-style initialization scaled by `init_scale`.
  Mlp(ParamStore& params, std::size_t block, const std::string& prefix, std::size_t in,
      const std::vector<std::size_t>& dims, bool relu, bool relu_last, Rng& rng,
      double init_scale = 1.0);

  struct Cache {
    /// Inputs to each layer plus the final output.
    std::vector<Vector> acts;
    /// Pre-activations per layer.
    std::vector<Vector> pre;
  };

  std::size_t input_dim() const noexcept { return in_; }
  std::size_t output_dim() const noexcept { return out_; }
  const std::vector<Dense>& layers() const noexcept { return layers_; }
  bool relu() const noexcept { return relu_; }
  bool relu_last() const noexcept { return relu_last_; }
  void set_relu(bool relu, bool relu_last) { relu_ = relu; relu_last_ = relu_last; }

  Vector forward(const ParamStore& params, std::span<const double> x, Cache* cache) const;
  /// Adds parameter gradients into `grads` when `grads` is non-null and
  /// returns the gradient wrt the input.
  Vector backward(const ParamStore& params, const Cache& cache, std::span<const double> upstream,
                  Gradients* grads) const;

 private:
  bool activates(std::size_t layer) const noexcept {
    return relu_ && (layer + 1 < layers_.size() || relu_last_);
  }
  std::vector<Dense> layers_;
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  bool relu_ = true;
  bool relu_last_ = false;
};

}  // namespace collapsar
