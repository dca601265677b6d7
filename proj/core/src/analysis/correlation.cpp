#include "collapsar/analysis/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "collapsar/encoding/temporal.hpp"
#include "collapsar/errors.hpp"

namespace collapsar {

double mutual_information(std::span<const std::int64_t> x, std::span<const std::int64_t> y) {
  if (x.size() != y.size()) throw InputError("mutual information needs equal-length series");
  if (x.empty()) throw InputError("mutual information needs at least one observation");
  std::map<std::pair<std::int64_t, std::int64_t>, std::size_t> joint;
  std::map<std::int64_t, std::size_t> mx;
  std::map<std::int64_t, std::size_t> my;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ++joint[{x[i], y[i]}];
    ++mx[x[i]];
    ++my[y[i]];
  }
  const auto n = static_cast<double>(x.size());
  // Each term is written so that swapping x and y gives bit-identical terms,
  // and terms are summed in sorted order, so MI(x, y) == MI(y, x) exactly.
  std::vector<double> terms;
  terms.reserve(joint.size());
  for (const auto& [key, c] : joint) {
    const auto cxy = static_cast<double>(c);
    const auto cx = static_cast<double>(mx[key.first]);
    const auto cy = static_cast<double>(my[key.second]);
    terms.push_back(cxy / n * std::log(cxy * n / (cx * cy)));
  }
  std::sort(terms.begin(), terms.end());
  return std::max(0.0, std::accumulate(terms.begin(), terms.end(), 0.0));
}

namespace {

Vector average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  Vector ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InputError("spearman needs equal-length series");
  if (x.size() < 2) throw InputError("spearman needs at least 2 points");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isnan(x[i]) || std::isnan(y[i])) throw InputError("spearman input contains NaN");
  }
  const Vector rx = average_ranks(x);
  const Vector ry = average_ranks(y);
  const double mean = 0.5 * static_cast<double>(x.size() + 1);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

nlohmann::json CorrelationGrid::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : mi) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& v : row) r.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
    rows.push_back(std::move(r));
  }
  return {{"target_category", target_category},
          {"categories", categories},
          {"slots", slots},
          {"slot", slot == BehaviorSlot::position ? "position" : "interval"},
          {"mi", std::move(rows)},
          {"support", support}};
}

namespace {

struct GridFields {
  std::size_t sequence = 0;
  std::size_t target = 0;
};

GridFields resolve_fields(const Schema& schema, const CorrelationConfig& cfg) {
  GridFields g;
  std::optional<std::size_t> seq;
  if (!cfg.sequence_field.empty()) {
    seq = schema.index_of(cfg.sequence_field);
  } else {
    for (std::size_t f = 0; f < schema.num_fields(); ++f) {
      if (schema.field(f).kind == FieldKind::sequence) {
        seq = f;
        break;
      }
    }
  }
  if (!seq || schema.field(*seq).kind != FieldKind::sequence) {
    throw InputError("correlation grid needs a sequence field");
  }
  g.sequence = *seq;
  std::optional<std::size_t> target;
  if (!cfg.target_field.empty()) {
    target = schema.index_of(cfg.target_field);
  } else {
    for (std::size_t f = 0; f < schema.num_fields(); ++f) {
      const auto& fs = schema.field(f);
      if (fs.kind == FieldKind::categorical && fs.cardinality == schema.field(*seq).cardinality) {
        target = f;
        break;
      }
    }
  }
  if (!target || schema.field(*target).kind != FieldKind::categorical) {
    throw InputError("correlation grid needs a categorical target field");
  }
  g.target = *target;
  return g;
}

}  // namespace

CorrelationGrid semantic_temporal_correlation(const Dataset& data, std::int64_t target_category,
                                              const std::vector<std::int64_t>& categories,
                                              const std::vector<std::size_t>& slots,
                                              const CorrelationConfig& cfg) {
  const GridFields f = resolve_fields(data.schema, cfg);
  if (cfg.task >= data.tasks().size()) throw InputError("correlation task index out of range");
  const auto vocab = data.schema.field(f.sequence).cardinality;
  for (auto c : categories) {
    if (c < 0 || c >= vocab) throw InputError("grid category outside the behavior vocabulary");
  }
  if (target_category < 0 || target_category >= data.schema.field(f.target).cardinality) {
    throw InputError("target category outside the target vocabulary");
  }

  std::vector<const Sample*> rows;
  for (const auto& s : data.samples) {
    if (s.category(f.target) == target_category) rows.push_back(&s);
  }

  CorrelationGrid g;
  g.target_category = target_category;
  g.categories = categories;
  g.slots = slots;
  g.slot = cfg.slot;
  g.mi.assign(categories.size(), std::vector<std::optional<double>>(slots.size()));
  g.support.assign(slots.size(), 0);

  std::vector<std::int64_t> indicator;
  std::vector<std::int64_t> label;
  for (std::size_t j = 0; j < slots.size(); ++j) {
    const std::size_t p = slots[j];
    // Behaviors occupying slot p, per retained sample.
    std::vector<std::vector<std::int64_t>> items;
    label.clear();
    for (const Sample* s : rows) {
      const auto& seq = s->behaviors(f.sequence);
      std::vector<std::int64_t> here;
      if (cfg.slot == BehaviorSlot::position) {
        if (p < seq.size()) here.push_back(seq[p].item);
      } else {
        for (const auto& b : seq) {
          if (temporal_bucket(s->ts - b.ts, TemporalMode::interval) == p) here.push_back(b.item);
        }
      }
      if (here.empty()) continue;
      items.push_back(std::move(here));
      label.push_back(s->labels[cfg.task]);
    }
    g.support[j] = items.size();
    if (items.size() < cfg.min_support) continue;
    for (std::size_t i = 0; i < categories.size(); ++i) {
      indicator.assign(items.size(), 0);
      for (std::size_t r = 0; r < items.size(); ++r) {
        indicator[r] = std::find(items[r].begin(), items[r].end(), categories[i]) != items[r].end();
      }
      g.mi[i][j] = mutual_information(indicator, label);
    }
  }
  return g;
}

}  // namespace collapsar
