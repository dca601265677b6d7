#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "collapsar/numerics/matrix.hpp"
#include "collapsar/numerics/rng.hpp"

// Multiple numeral systems encoding: a non-negative integer is written in
// several bases; every (position, digit) pair owns a learnable row and the
// rows of one system are sum-pooled.
namespace collapsar {

struct MNSConfig {
  std::vector<int> bases{2, 3, 10};
  /// Digits per base.
  std::vector<int> lengths;
  /// Embedding width per base; the encoded vector is their concatenation.
  std::vector<std::size_t> dims;

  /// Shortest lengths covering `max_value` for each base, `total_dim`
  /// split as evenly as possible (earlier systems take the remainder).
  static MNSConfig covering(std::int64_t max_value, std::size_t total_dim,
                            std::vector<int> bases = {2, 3, 10});

  std::size_t num_systems() const noexcept { return bases.size(); }
  std::size_t output_dim() const noexcept;
  /// Largest value every system can represent.
  std::int64_t max_value() const;
  void validate() const;
};

/// Digits per system, most significant position (k = K_n) first.
struct MNSCodes {
  std::vector<std::vector<int>> digits;

  /// "{6_1, 5_1, 4_0, 3_0, 2_1, 1_1}" for system `s`.
  std::string to_string(std::size_t s) const;
};

/// Table row of (position k in 1..K, digit) for `base`.
inline std::size_t mns_row(int base, int k, int digit) {
  return static_cast<std::size_t>(base) * static_cast<std::size_t>(k - 1) +
         static_cast<std::size_t>(digit);
}

struct MNSTables {
  /// One base*K_n x d_n matrix per system.
  std::vector<Matrix> tables;

  static MNSTables zeros(const MNSConfig& cfg);
  static MNSTables random(const MNSConfig& cfg, Rng& rng, double scale);
};

MNSCodes mns_codes(std::int64_t value, const MNSConfig& cfg);

Vector mns_encode(const MNSCodes& codes, const MNSConfig& cfg, const MNSTables& tables);
Vector mns_encode(std::int64_t value, const MNSConfig& cfg, const MNSTables& tables);

/// Adds d<upstream, encode>/d tables into `grads` (shaped like the tables).
void mns_encode_backward(const MNSCodes& codes, const MNSConfig& cfg,
                         std::span<const double> upstream, MNSTables& grads);

}  // namespace collapsar
