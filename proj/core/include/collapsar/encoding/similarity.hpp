#pragma once

#include <cstdint>
#include <span>

#include "collapsar/encoding/mns.hpp"

namespace collapsar {

inline constexpr int kSimilarityLevels = 256;

double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// round((w + 1) / 2 * (levels - 1)) with w clamped to [-1, 1].
std::int64_t quantize_similarity(double w, int levels = kSimilarityLevels);

/// MNS code of the quantized cosine between two frozen vectors.
MNSCodes similarity_codes(std::span<const double> a, std::span<const double> b,
                          const MNSConfig& cfg, int levels = kSimilarityLevels);

Vector similarity_encode(std::span<const double> a, std::span<const double> b,
                         const MNSConfig& cfg, const MNSTables& tables,
                         int levels = kSimilarityLevels);

}  // namespace collapsar
