#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "collapsar/data/dataset.hpp"
#include "collapsar/numerics/matrix.hpp"

namespace collapsar {

class Model;

/// Mann-Whitney AUC with half credit for ties. Throws MetricError when a
/// class is missing.
double auc(std::span<const std::uint8_t> labels, std::span<const double> scores);

/// Mean binary log loss of probabilities (clipped to [1e-15, 1 - 1e-15]).
double logloss(std::span<const std::uint8_t> labels, std::span<const double> probs);

/// Per-task evaluation. AUC is NaN (null in JSON) for single-class tasks.
struct Metrics {
  std::vector<std::string> tasks;
  Vector auc;
  Vector logloss;
  /// mean(prediction) / mean(label) - 1.
  Vector bias;
  std::size_t samples = 0;

  nlohmann::json to_json() const;
};

Metrics compute_metrics(const std::vector<std::string>& tasks,
                        const std::vector<std::vector<std::uint8_t>>& labels,
                        const std::vector<Vector>& probs);

Metrics evaluate(const Model& model, std::span<const Sample> samples);

}  // namespace collapsar
