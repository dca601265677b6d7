#pragma once

#include <span>
#include <vector>

#include "collapsar/encoding/temporal.hpp"
#include "collapsar/numerics/matrix.hpp"

// Temporal interest module: behaviors and target are shifted by temporal
// embeddings, attended by scaled dot product against the target, and
// pooled as Hadamard products with the target.
namespace collapsar {

/// One behavior sequence as seen by TIM. Row i of `behaviors` is e_i,
/// `buckets[i]` its temporal bucket; `valid[i]` false marks padding
/// (an empty `valid` means every row is real).
struct TimInput {
  const Matrix& behaviors;
  std::span<const std::size_t> buckets;
  std::span<const double> target;
  const Matrix& temporal;
  const std::vector<bool>& valid;
};

struct TimOutput {
  Vector u;
  /// Attention per behavior row; 0 on padding. Empty when no row is valid.
  Vector alpha;
};

TimOutput tim_forward(const TimInput& in);

struct TimGrads {
  Matrix behaviors;
  Vector target;
  /// Same shape as the temporal table.
  Matrix temporal;
};

TimGrads tim_backward(const TimInput& in, const TimOutput& out, std::span<const double> upstream);

/// Position and interval tables used together.
struct TemporalTables {
  Matrix position;
  Matrix interval;
};

/// Buckets for a sequence ordered most recent first: positions 1..L and
/// log2 intervals of sample_ts - behavior_ts.
struct DualBuckets {
  std::vector<std::size_t> position;
  std::vector<std::size_t> interval;
};

/// Concatenation (position output, interval output), 2K wide.
struct TimDualOutput {
  Vector u;
  TimOutput position;
  TimOutput interval;
};

TimDualOutput tim_dual(const Matrix& behaviors, const DualBuckets& buckets,
                       std::span<const double> target, const TemporalTables& tables,
                       const std::vector<bool>& valid);

struct TimDualGrads {
  Matrix behaviors;
  Vector target;
  TemporalTables tables;
};

TimDualGrads tim_dual_backward(const Matrix& behaviors, const DualBuckets& buckets,
                               std::span<const double> target, const TemporalTables& tables,
                               const std::vector<bool>& valid, const TimDualOutput& out,
                               std::span<const double> upstream);

}  // namespace collapsar
