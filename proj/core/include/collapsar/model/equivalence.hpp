#pragma once

#include <cstdint>
#include <vector>

#include "collapsar/model/model.hpp"

namespace collapsar {

struct EquivalenceResult {
  bool holds = false;
  double max_abs_diff = 0.0;
  std::size_t samples = 0;
};

/// Folds a multi-embedding model with linear experts and uniform gates
/// into a single-embedding model: one table of width sum K_t (the tables
/// side by side), block-diagonal expert layers, and a last layer stacking
/// the per-expert maps scaled by g_t / T.
/// Throws ConfigError unless every expert is linear fm/flatdnn over the
/// same layer widths and every gate parameter is zero.
Model fold_to_single_embedding(const Model& me);

/// Compares the two forwards on `samples`.
EquivalenceResult me_equivalence_check(const Model& me, const std::vector<Sample>& samples,
                                       double tolerance = 1e-10);

/// Builds a random T-table model (tables of the given widths, linear
/// experts, uniform gates) over a small categorical schema and checks it
/// on `n` random samples.
EquivalenceResult me_equivalence_check(const std::vector<std::size_t>& dims, std::uint64_t seed,
                                       std::size_t n = 100, ExpertOp op = ExpertOp::fm);

}  // namespace collapsar
