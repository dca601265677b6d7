#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>

#include "collapsar/config.hpp"
#include "collapsar/data/dataset.hpp"
#include "collapsar/numerics/matrix.hpp"

// Synthetic datasets that plant one measurable phenomenon each. Every
// generator is a pure function of (seed, n, cfg).
namespace collapsar {

struct GeneratedData {
  Dataset data;
  /// Sidecar manifest: generator name, seed, config echo, counts, field
  /// means, label rates, plus generator-specific entries.
  nlohmann::json manifest;
};

/// Target category + behavior sequence whose matching-category behaviors
/// raise the click logit with a weight that decays in the behavior's
/// log2 time-interval bucket:
///   logit = b + semantic_boost * sum_i [c_i == c_t] * exp(-temporal_decay * bucket_i)
/// `b` is solved so the mean click probability equals `base_rate`.
struct CtrGenConfig {
  std::int64_t categories = 8;
  std::size_t seq_len = 8;
  double base_rate = 0.2;
  double semantic_boost = 2.0;
  double temporal_decay = 0.5;
  /// Probability that a behavior copies the target's category.
  double match_prob = 0.3;
  /// Behavior ages are floor(2^u) - 1 with u ~ U(0, max_log2_age).
  double max_log2_age = 12.0;
  std::int64_t users = 64;

  static CtrGenConfig from_config(const Config& cfg);
  void validate() const;
};

GeneratedData gen_synthetic_ctr(std::uint64_t seed, std::size_t n, const CtrGenConfig& cfg);

/// Two tasks over a user x item universe sharing a latent affinity, except
/// a planted fraction q of pairs where task A is pushed up and task B down.
struct TwoTaskGenConfig {
  std::int64_t users = 40;
  std::int64_t items = 40;
  std::size_t latent_dim = 4;
  double q = 0.4;
  double base_logit = -1.0;
  double affinity_scale = 2.0;
  double contrast = 2.0;

  static TwoTaskGenConfig from_config(const Config& cfg);
  void validate() const;
};

GeneratedData gen_two_task_contradictory(std::uint64_t seed, std::size_t n,
                                         const TwoTaskGenConfig& cfg);

/// Pair id used by the two-task manifest: user * items + item.
inline std::int64_t pair_id(std::int64_t user, std::int64_t item, std::int64_t items) {
  return user * items + item;
}

/// Low-cardinality field, a high-cardinality field and a context field,
/// with labels drawn from full-rank random preference tables between
/// (low, high) and (context, high).
struct CollapseGenConfig {
  std::int64_t low_cardinality = 2;
  std::int64_t high_cardinality = 1000;
  std::int64_t context_cardinality = 32;
  double low_scale = 1.5;
  double context_scale = 1.5;
  double base_logit = -0.5;

  static CollapseGenConfig from_config(const Config& cfg);
  void validate() const;
};

GeneratedData gen_collapse_probe(std::uint64_t seed, std::size_t n, const CollapseGenConfig& cfg);

/// The (low, high) and (context, high) preference tables the probe samples
/// from; exposed for rank checks.
struct CollapseTables {
  Matrix low_high;
  Matrix context_high;
};
CollapseTables collapse_preference_tables(std::uint64_t seed, const CollapseGenConfig& cfg);

/// Dispatch by name: "ctr", "two_task", "collapse".
GeneratedData generate(const std::string& kind, std::uint64_t seed, std::size_t n,
                       const Config& cfg);

/// Writes data.csv, schema.yaml and manifest.json into `dir`.
void write_generated(const GeneratedData& gen, const std::filesystem::path& dir);

}  // namespace collapsar
