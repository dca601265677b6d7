#pragma once

#include <cstdint>
#include <map>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "collapsar/analysis/report.hpp"
#include "collapsar/model/model.hpp"
#include "collapsar/numerics/matrix.hpp"
#include "collapsar/training/trainer.hpp"

namespace collapsar {

/// Distance per pair id over a common pair universe.
struct PairDistances {
  std::vector<std::int64_t> ids;
  Vector distance;
};

/// S = bottom-pctl of `a` intersected with top-pctl of `b`. Each band holds
/// floor(pctl * n) pairs ranked by (distance, id), so equal maps give
/// disjoint bands. Returns sorted ids. Throws InputError on an empty or
/// mismatched universe and on pctl outside (0, 0.5].
std::vector<std::int64_t> contradictory_pairs(const PairDistances& a, const PairDistances& b,
                                              double pctl = 0.4);

/// User and item embedding tables; pair id = user * items + item.
struct PairEmbeddings {
  Matrix users;
  Matrix items;

  std::int64_t universe() const {
    return static_cast<std::int64_t>(users.rows() * items.rows());
  }
  /// Euclidean distance; throws InputError on an unresolvable id.
  double distance(std::int64_t pair) const;
  PairDistances all_pairs() const;
};

struct DistanceDistribution {
  Histogram histogram;
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double q10 = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double q90 = 0.0;
  double max = 0.0;

  nlohmann::json to_json() const;
};

/// Fixed-bin histogram over [0, hi] plus summary statistics; hi <= 0 means
/// the sample maximum. Throws InputError on negative or non-finite input.
DistanceDistribution distance_distribution(std::span<const double> distances, std::size_t bins = 50,
                                           double hi = 0.0);
DistanceDistribution distance_distribution(std::span<const std::int64_t> pairs,
                                           const PairEmbeddings& emb, std::size_t bins = 50,
                                           double hi = 0.0);

/// User/item tables of one embedding source in a trained model.
PairEmbeddings model_pair_embeddings(const Model& model, std::size_t table,
                                     const std::string& user_field = "user",
                                     const std::string& item_field = "item");

/// Overwrites the user/item embeddings of `dst_table` in `dst` with those of
/// `src_table` in `src` (shapes must match).
void copy_pair_tables(const Model& src, std::size_t src_table, Model& dst, std::size_t dst_table,
                      const std::string& user_field = "user", const std::string& item_field = "item");

struct EntanglementConfig {
  std::size_t dim = 8;
  std::vector<std::size_t> expert_hidden{16};
  std::vector<std::size_t> tower_hidden{16};
  TrainConfig train;
  double pctl = 0.4;

  EntanglementConfig();
  static EntanglementConfig from_config(const Config& cfg);
};

struct EntanglementModels {
  Model single_a;
  Model single_b;
  Model shared;
  Model stem;

  std::map<std::string, const Model*> by_name() const;
};

/// Builds the four models on a two-task dataset and trains them. Every
/// user/item table compared by distance starts from one common
/// initialization, so distance differences reflect training only.
EntanglementModels train_entanglement_models(const Dataset& data, const EntanglementConfig& cfg,
                                             std::uint64_t seed);

/// Models keyed "single_a", "single_b" (single-task, one table each),
/// "shared" (one table read by both towers) and "stem" (task A table, task B
/// table, shared table last). Panels: single_a, single_b, shared, stem_a,
/// stem_b, stem_shared; each carries the distribution over S and over all
/// pairs. Throws ConfigError when a model is missing.
AnalysisReport entanglement_report(const nlohmann::json& manifest,
                                   const std::map<std::string, const Model*>& models,
                                   double pctl = 0.4);

}  // namespace collapsar
