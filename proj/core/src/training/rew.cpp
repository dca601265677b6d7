#include "collapsar/training/rew.hpp"

#include <algorithm>
#include <cmath>

#include "collapsar/errors.hpp"

namespace collapsar {

void RewConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("rew.alpha must lie in [0, 1]");
  if (!(half_life > 0.0)) throw ConfigError("rew.half_life must be positive");
  if (!(count_scale > 0.0)) throw ConfigError("rew.count_scale must be positive");
  if (!(max_count_weight >= 1.0)) throw ConfigError("rew.max_count_weight must be >= 1");
  if (!(recency_scale > 0.0)) throw ConfigError("rew.recency_scale must be positive");
}

double decayed_count(std::span<const double> exposure_ages, double half_life) {
  double total = 0.0;
  for (double age : exposure_ages) total += std::exp2(-std::max(age, 0.0) / half_life);
  return total;
}

double rew_count_weight(double count, const RewConfig& cfg) {
  return std::min(1.0 + std::max(count, 0.0) / cfg.count_scale, cfg.max_count_weight);
}

double rew_recency_weight(std::optional<double> gap, const RewConfig& cfg) {
  if (!gap) return 1.0;
  return 1.0 + std::exp(-std::max(*gap, 0.0) / cfg.recency_scale);
}

double rew_mix(double alpha, double w_count, double w_recency) {
  return alpha * w_count + (1.0 - alpha) * w_recency;
}

double rew_weight(double count, std::optional<double> gap, const RewConfig& cfg) {
  return rew_mix(cfg.alpha, rew_count_weight(count, cfg), rew_recency_weight(gap, cfg));
}

double debias_weight(std::span<const std::uint8_t> labels, std::span<const double> w_rep) {
  if (labels.size() != w_rep.size()) throw InputError("debias: label/weight count mismatch");
  double total = 0.0;
  std::size_t negatives = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) continue;
    total += w_rep[i];
    ++negatives;
  }
  return negatives ? total / static_cast<double>(negatives) : 1.0;
}

Vector rew_batch_weights(std::span<const std::uint8_t> labels, std::span<const double> w_rep) {
  const double debias = debias_weight(labels, w_rep);
  Vector out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = labels[i] ? debias : w_rep[i];
  return out;
}

}  // namespace collapsar
