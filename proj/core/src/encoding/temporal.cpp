#include "collapsar/encoding/temporal.hpp"

#include <algorithm>
#include <bit>

namespace collapsar {

std::size_t temporal_bucket(std::int64_t value, TemporalMode mode, std::size_t max_len) {
  const auto v = static_cast<std::uint64_t>(std::max<std::int64_t>(value, 0));
  if (mode == TemporalMode::position) return static_cast<std::size_t>(std::min<std::uint64_t>(v, max_len));
  // floor(log2(1 + v)); 1 + v cannot overflow since v < 2^63.
  const auto bucket = static_cast<std::size_t>(std::bit_width(v + 1) - 1);
  return std::min(bucket, kMaxIntervalBucket);
}

std::size_t temporal_bucket_count(TemporalMode mode, std::size_t max_len) {
  return mode == TemporalMode::position ? max_len + 1 : kMaxIntervalBucket + 1;
}

}  // namespace collapsar
