#include "collapsar/training/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "collapsar/errors.hpp"
#include "collapsar/model/model.hpp"

namespace collapsar {

double auc(std::span<const std::uint8_t> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) throw MetricError("auc: label/score count mismatch");
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Rank-sum with average ranks over ties.
  double pos_rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j + 1);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) {
        pos_rank_sum += avg_rank;
        ++pos;
      }
    }
    i = j;
  }
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw MetricError("auc needs both classes");
  const double np = static_cast<double>(pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(neg));
}

double logloss(std::span<const std::uint8_t> labels, std::span<const double> probs) {
  if (labels.size() != probs.size()) throw MetricError("logloss: label/probability count mismatch");
  if (labels.empty()) throw MetricError("logloss of an empty set");
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = std::clamp(probs[i], 1e-15, 1.0 - 1e-15);
    total -= labels[i] ? std::log(p) : std::log1p(-p);
  }
  return total / static_cast<double>(labels.size());
}

namespace {

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

}  // namespace

nlohmann::json Metrics::to_json() const {
  nlohmann::json j;
  j["samples"] = samples;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    j["tasks"][tasks[t]] = {{"auc", number_or_null(auc[t])},
                            {"logloss", number_or_null(logloss[t])},
                            {"bias", number_or_null(bias[t])}};
  }
  return j;
}

Metrics compute_metrics(const std::vector<std::string>& tasks,
                        const std::vector<std::vector<std::uint8_t>>& labels,
                        const std::vector<Vector>& probs) {
  if (labels.size() != tasks.size() || probs.size() != tasks.size()) {
    throw MetricError("metrics: one label and probability series per task");
  }
  Metrics m;
  m.tasks = tasks;
  m.samples = tasks.empty() ? 0 : labels[0].size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const auto& y = labels[t];
    if (y.empty()) {
      m.auc.push_back(nan);
      m.logloss.push_back(nan);
      m.bias.push_back(nan);
      continue;
    }
    const auto pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
    m.auc.push_back(pos == 0 || pos == y.size() ? nan : auc(y, probs[t]));
    m.logloss.push_back(logloss(y, probs[t]));
    const double mean_p = std::accumulate(probs[t].begin(), probs[t].end(), 0.0) / static_cast<double>(y.size());
    const double mean_y = static_cast<double>(pos) / static_cast<double>(y.size());
    m.bias.push_back(mean_y > 0.0 ? mean_p / mean_y - 1.0 : nan);
  }
  return m;
}

Metrics evaluate(const Model& model, std::span<const Sample> samples) {
  const auto& tasks = model.spec().towers;
  const std::size_t towers = model.num_towers();
  std::vector<std::size_t> label_index;
  for (const auto& t : tasks) {
    const auto idx = model.schema().task_index(t);
    if (!idx) throw ConfigError("tower '" + t + "' has no task column in the schema");
    label_index.push_back(*idx);
  }
  std::vector<Vector> probs(towers);
  std::vector<std::vector<std::uint8_t>> labels(towers);
  for (const auto& s : samples) {
    const Vector p = model.predict(s);
    for (std::size_t t = 0; t < towers; ++t) {
      probs[t].push_back(p[t]);
      labels[t].push_back(s.labels.at(label_index[t]));
    }
  }
  return compute_metrics(tasks, labels, probs);
}

}  // namespace collapsar
