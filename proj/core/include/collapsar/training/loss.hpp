#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "collapsar/numerics/matrix.hpp"

namespace collapsar {

struct LossValue {
  double loss = 0.0;
  /// dL/df.
  double grad = 0.0;
};

/// Binary cross-entropy on a logit; grad = sigmoid(f) - y.
LossValue bce(int y, double f);

enum class LossMode { bce, bce_plus_rank };

std::string_view to_string(LossMode mode);
LossMode parse_loss_mode(std::string_view text);

struct LossConfig {
  LossMode mode = LossMode::bce;
  /// Weight of the pairwise ranking term.
  double lambda = 1.0;
};

struct BatchLoss {
  double loss = 0.0;
  /// dL/df_i per sample.
  Vector grads;
  double bce_part = 0.0;
  double rank_part = 0.0;
};

/// loss = (1/N) sum_i w_i BCE(y_i, f_i)
///      + lambda * mean over (pos p, neg n) pairs of log(1 + exp(f_n - f_p))
/// The ranking term is present only in bce_plus_rank mode and vanishes
/// when the batch lacks either class. Empty `weights` means all ones.
BatchLoss combined_loss(std::span<const double> logits, std::span<const std::uint8_t> labels,
                        const LossConfig& cfg, std::span<const double> weights = {});

}  // namespace collapsar
