#include "collapsar/training/optimizer.hpp"

#include <cmath>

#include "collapsar/errors.hpp"

namespace collapsar {

Adagrad::Adagrad(const ParamStore& params, double lr, double eps)
    : lr_(lr), eps_(eps), accum_(params) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be finite and >= 0");
  if (!(eps >= 0.0)) throw ConfigError("adagrad eps must be >= 0");
}

void Adagrad::step(ParamStore& params, const Gradients& grads) {
  if (grads.size() != params.size() || accum_.size() != params.size()) {
    throw InputError("adagrad: gradient layout differs from parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params.value(i).values();
    const auto g = grads[i].values();
    auto acc = accum_[i].values();
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (g[k] == 0.0) continue;
      acc[k] += g[k] * g[k];
      p[k] -= lr_ * g[k] / std::sqrt(acc[k] + eps_);
    }
  }
}

}  // namespace collapsar
