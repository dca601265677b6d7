#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "collapsar/data/dataset.hpp"
#include "collapsar/numerics/matrix.hpp"

namespace collapsar {

/// Plug-in estimate in nats. Throws InputError on empty input or a length
/// mismatch.
double mutual_information(std::span<const std::int64_t> x, std::span<const std::int64_t> y);

/// Spearman rank correlation with average ranks for ties. Throws InputError
/// on a length mismatch or fewer than 2 points; returns NaN when either side
/// is constant.
double spearman(std::span<const double> x, std::span<const double> y);

enum class BehaviorSlot {
  /// p indexes the behavior list (0 = most recent).
  position,
  /// p is a temporal interval bucket of the behavior's age.
  interval,
};

struct CorrelationConfig {
  /// Empty picks the first sequence field and the first categorical field
  /// sharing its vocabulary.
  std::string sequence_field;
  std::string target_field;
  std::size_t task = 0;
  BehaviorSlot slot = BehaviorSlot::position;
  std::size_t min_support = 100;
};

/// MI between the indicator "behavior at slot p has category c_i" and the
/// label, over samples whose target category is c_t and that have a
/// behavior at slot p. Cells below min_support are null.
struct CorrelationGrid {
  std::int64_t target_category = 0;
  std::vector<std::int64_t> categories;
  std::vector<std::size_t> slots;
  BehaviorSlot slot = BehaviorSlot::position;
  /// rows follow `categories`, columns follow `slots`.
  std::vector<std::vector<std::optional<double>>> mi;
  std::vector<std::size_t> support;

  nlohmann::json to_json() const;
};

CorrelationGrid semantic_temporal_correlation(const Dataset& data, std::int64_t target_category,
                                              const std::vector<std::int64_t>& categories,
                                              const std::vector<std::size_t>& slots,
                                              const CorrelationConfig& cfg = {});

}  // namespace collapsar
