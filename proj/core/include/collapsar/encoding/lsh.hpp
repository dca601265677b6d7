#pragma once

#include <cstdint>
#include <span>

#include "collapsar/numerics/matrix.hpp"

namespace collapsar {

/// Random-hyperplane LSH: n_bits unit hyperplanes drawn once from `seed`.
struct LshConfig {
  std::size_t n_bits = 0;
  std::uint64_t seed = 0;
  /// n_bits x dim, unit rows.
  Matrix hyperplanes;

  static LshConfig create(std::size_t n_bits, std::size_t dim, std::uint64_t seed);
  std::size_t dim() const noexcept { return hyperplanes.cols(); }
};

/// Bit b is set iff <x, h_b> >= 0. The result feeds MNS as a numeric value.
std::uint64_t lsh_semantic_id(std::span<const double> x, const LshConfig& cfg);

}  // namespace collapsar
