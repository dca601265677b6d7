#include "collapsar/training/loss.hpp"

#include <cmath>

#include "collapsar/errors.hpp"
#include "collapsar/numerics/ops.hpp"

namespace collapsar {

LossValue bce(int y, double f) {
  // -y log s(f) - (1-y) log(1-s(f)) = softplus(f) - y f
  return {softplus(f) - (y ? f : 0.0), sigmoid(f) - (y ? 1.0 : 0.0)};
}

std::string_view to_string(LossMode mode) {
  return mode == LossMode::bce ? "bce" : "bce_plus_rank";
}

LossMode parse_loss_mode(std::string_view text) {
  if (text == "bce") return LossMode::bce;
  if (text == "bce_plus_rank") return LossMode::bce_plus_rank;
  throw ConfigError("unknown loss mode '" + std::string(text) + "'");
}

BatchLoss combined_loss(std::span<const double> logits, std::span<const std::uint8_t> labels,
                        const LossConfig& cfg, std::span<const double> weights) {
  const std::size_t n = logits.size();
  if (labels.size() != n) throw InputError("loss: label count differs from logit count");
  if (!weights.empty() && weights.size() != n) throw InputError("loss: weight count mismatch");
  if (!std::isfinite(cfg.lambda) || cfg.lambda < 0.0) throw ConfigError("loss: lambda must be finite and >= 0");
  BatchLoss out;
  out.grads.assign(n, 0.0);
  if (n == 0) return out;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    const LossValue v = bce(labels[i], logits[i]);
    out.bce_part += w * v.loss * inv_n;
    out.grads[i] += w * v.grad * inv_n;
  }
  if (cfg.mode == LossMode::bce_plus_rank && cfg.lambda > 0.0) {
    std::vector<std::size_t> pos;
    std::vector<std::size_t> neg;
    for (std::size_t i = 0; i < n; ++i) (labels[i] ? pos : neg).push_back(i);
    if (!pos.empty() && !neg.empty()) {
      const double scale = cfg.lambda / static_cast<double>(pos.size() * neg.size());
      for (auto p : pos) {
        for (auto q : neg) {
          const double d = logits[q] - logits[p];
          out.rank_part += scale * softplus(d);
          const double g = scale * sigmoid(d);
          out.grads[q] += g;
          out.grads[p] -= g;
        }
      }
    }
  }
  out.loss = out.bce_part + out.rank_part;
  return out;
}

}  // namespace collapsar
