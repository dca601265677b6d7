#pragma once

#include <cstddef>
#include <cstdint>

namespace collapsar {

enum class TemporalMode { interval, position };

/// Largest interval bucket; interval tables have kMaxIntervalBucket + 1 rows.
inline constexpr std::size_t kMaxIntervalBucket = 32;

/// interval: floor(log2(1 + delta)) capped at 32.
/// position: the position itself capped at `max_len`.
/// Negative inputs are clamped to 0.
std::size_t temporal_bucket(std::int64_t value, TemporalMode mode, std::size_t max_len = 0);

/// Rows a temporal table needs for the given mode.
std::size_t temporal_bucket_count(TemporalMode mode, std::size_t max_len);

}  // namespace collapsar
