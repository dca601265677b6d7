#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "collapsar/numerics/matrix.hpp"

namespace collapsar {

/// Repeated-exposure weighting: w_rep = alpha * w_count + (1 - alpha) * w_recency.
struct RewConfig {
  double alpha = 0.5;
  /// Half-life (seconds) of the exposure-count decay.
  double half_life = 86400.0;
  /// Decayed count that adds one unit to w_count.
  double count_scale = 5.0;
  /// Upper bound on w_count.
  double max_count_weight = 3.0;
  /// Seconds over which the recency bonus decays by 1/e.
  double recency_scale = 3600.0;

  void validate() const;
};

/// sum_k 0.5^(age_k / half_life) over past exposures with the given ages.
double decayed_count(std::span<const double> exposure_ages, double half_life);

/// min(1 + count / count_scale, max_count_weight).
double rew_count_weight(double decayed_count, const RewConfig& cfg);
/// 1 + exp(-gap / recency_scale); no previous exposure counts as an
/// infinite gap.
double rew_recency_weight(std::optional<double> gap, const RewConfig& cfg);
double rew_mix(double alpha, double w_count, double w_recency);
/// Full w_rep >= 1 from the two statistics.
double rew_weight(double decayed_count, std::optional<double> gap, const RewConfig& cfg);

/// Mean w_rep over the negatives of a batch (1 when there are none).
double debias_weight(std::span<const std::uint8_t> labels, std::span<const double> w_rep);

/// Per-sample loss weights: negatives keep w_rep, positives get the
/// debias weight.
Vector rew_batch_weights(std::span<const std::uint8_t> labels, std::span<const double> w_rep);

}  // namespace collapsar
