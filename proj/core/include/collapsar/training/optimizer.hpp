#pragma once

#include "collapsar/model/params.hpp"

namespace collapsar {

/// acc += g^2; p -= lr * g / sqrt(acc + eps).
class Adagrad {
 public:
  Adagrad(const ParamStore& params, double lr, double eps = 1e-8);

  void step(ParamStore& params, const Gradients& grads);
  double lr() const noexcept { return lr_; }

 private:
  double lr_;
  double eps_;
  Gradients accum_;
};

}  // namespace collapsar
