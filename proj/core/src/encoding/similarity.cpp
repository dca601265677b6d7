#include "collapsar/encoding/similarity.hpp"

#include <algorithm>
#include <cmath>

#include "collapsar/errors.hpp"

namespace collapsar {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InputError("cosine_similarity: dimension mismatch");
  const double na = norm2(a);
  const double nb = norm2(b);
  if (!(na > 0.0) || !(nb > 0.0)) throw InputError("cosine_similarity: zero-norm input");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

std::int64_t quantize_similarity(double w, int levels) {
  if (levels < 2) throw ConfigError("similarity levels must be >= 2");
  const double c = std::clamp(w, -1.0, 1.0);
  return std::llround((c + 1.0) / 2.0 * static_cast<double>(levels - 1));
}

MNSCodes similarity_codes(std::span<const double> a, std::span<const double> b,
                          const MNSConfig& cfg, int levels) {
  return mns_codes(quantize_similarity(cosine_similarity(a, b), levels), cfg);
}

Vector similarity_encode(std::span<const double> a, std::span<const double> b,
                         const MNSConfig& cfg, const MNSTables& tables, int levels) {
  return mns_encode(similarity_codes(a, b, cfg, levels), cfg, tables);
}

}  // namespace collapsar
