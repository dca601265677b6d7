#include "collapsar/analysis/entanglement.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "collapsar/analysis/correlation.hpp"
#include "collapsar/errors.hpp"

namespace collapsar {

namespace {

// Ids ordered by (distance, id) ascending.
std::vector<std::int64_t> ranked(const PairDistances& d) {
  std::vector<std::size_t> order(d.ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (d.distance[a] != d.distance[b]) return d.distance[a] < d.distance[b];
    return d.ids[a] < d.ids[b];
  });
  std::vector<std::int64_t> out;
  out.reserve(order.size());
  for (auto i : order) out.push_back(d.ids[i]);
  return out;
}

void check_distances(const PairDistances& d) {
  if (d.ids.size() != d.distance.size()) throw InputError("pair ids and distances differ in length");
  for (double v : d.distance) {
    if (std::isnan(v)) throw InputError("pair distance is NaN");
  }
}

double quantile(const Vector& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::vector<std::int64_t> contradictory_pairs(const PairDistances& a, const PairDistances& b, double pctl) {
  check_distances(a);
  check_distances(b);
  if (a.ids.empty()) throw InputError("contradictory pairs need a non-empty pair universe");
  if (!(pctl > 0.0 && pctl <= 0.5)) throw InputError("percentile must lie in (0, 0.5]");
  std::vector<std::int64_t> ua = a.ids;
  std::vector<std::int64_t> ub = b.ids;
  std::sort(ua.begin(), ua.end());
  std::sort(ub.begin(), ub.end());
  if (ua != ub) throw InputError("distance maps cover different pair universes");
  if (std::adjacent_find(ua.begin(), ua.end()) != ua.end()) throw InputError("duplicate pair id");

  const auto n = a.ids.size();
  const auto m = static_cast<std::size_t>(std::floor(pctl * static_cast<double>(n) + 1e-9));
  std::vector<std::int64_t> bottom = ranked(a);
  bottom.resize(m);
  const std::vector<std::int64_t> rb = ranked(b);
  std::vector<std::int64_t> top(rb.end() - static_cast<std::ptrdiff_t>(m), rb.end());
  std::sort(bottom.begin(), bottom.end());
  std::sort(top.begin(), top.end());
  std::vector<std::int64_t> out;
  std::set_intersection(bottom.begin(), bottom.end(), top.begin(), top.end(), std::back_inserter(out));
  return out;
}

double PairEmbeddings::distance(std::int64_t pair) const {
  if (pair < 0 || pair >= universe()) throw InputError("pair id " + std::to_string(pair) + " is not resolvable");
  const auto n_items = static_cast<std::int64_t>(items.rows());
  const auto u = static_cast<std::size_t>(pair / n_items);
  const auto i = static_cast<std::size_t>(pair % n_items);
  if (users.cols() != items.cols()) throw InputError("user and item embeddings differ in width");
  double sq = 0.0;
  for (std::size_t c = 0; c < users.cols(); ++c) {
    const double d = users(u, c) - items(i, c);
    sq += d * d;
  }
  return std::sqrt(sq);
}

PairDistances PairEmbeddings::all_pairs() const {
  PairDistances d;
  for (std::int64_t p = 0; p < universe(); ++p) {
    d.ids.push_back(p);
    d.distance.push_back(distance(p));
  }
  return d;
}

nlohmann::json DistanceDistribution::to_json() const {
  return {{"histogram", histogram.to_json()},
          {"count", count},
          {"mean", mean},
          {"median", median},
          {"q10", q10},
          {"q25", q25},
          {"q75", q75},
          {"q90", q90},
          {"max", max}};
}

DistanceDistribution distance_distribution(std::span<const double> distances, std::size_t bins, double hi) {
  if (bins == 0) throw InputError("histogram needs at least one bin");
  DistanceDistribution out;
  out.histogram.counts.assign(bins, 0);
  out.count = distances.size();
  if (distances.empty()) return out;
  Vector sorted(distances.begin(), distances.end());
  for (double v : sorted) {
    if (!std::isfinite(v) || v < 0.0) throw InputError("distances must be finite and non-negative");
  }
  std::sort(sorted.begin(), sorted.end());
  out.max = sorted.back();
  out.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
  out.median = quantile(sorted, 0.5);
  out.q10 = quantile(sorted, 0.1);
  out.q25 = quantile(sorted, 0.25);
  out.q75 = quantile(sorted, 0.75);
  out.q90 = quantile(sorted, 0.9);
  out.histogram.hi = hi > 0.0 ? std::max(hi, out.max) : out.max;
  for (double v : sorted) {
    std::size_t b = 0;
    if (out.histogram.hi > 0.0) {
      b = std::min(bins - 1, static_cast<std::size_t>(v / out.histogram.hi * static_cast<double>(bins)));
    }
    ++out.histogram.counts[b];
  }
  return out;
}

DistanceDistribution distance_distribution(std::span<const std::int64_t> pairs, const PairEmbeddings& emb,
                                           std::size_t bins, double hi) {
  Vector d;
  d.reserve(pairs.size());
  for (auto p : pairs) d.push_back(emb.distance(p));
  return distance_distribution(d, bins, hi);
}

PairEmbeddings model_pair_embeddings(const Model& model, std::size_t table, const std::string& user_field,
                                     const std::string& item_field) {
  const Schema& schema = model.schema();
  return {model.embedding_matrix(table, schema.index_of(user_field)),
          model.embedding_matrix(table, schema.index_of(item_field))};
}

AnalysisReport entanglement_report(const nlohmann::json& manifest,
                                   const std::map<std::string, const Model*>& models, double pctl) {
  for (const char* key : {"single_a", "single_b", "shared", "stem"}) {
    const auto it = models.find(key);
    if (it == models.end() || it->second == nullptr) {
      throw ConfigError(std::string("entanglement report needs model '") + key + "'");
    }
  }
  const Model& stem = *models.at("stem");
  const std::size_t stem_tables = stem.spec().table_dims.size();
  if (stem_tables < 3) throw ConfigError("stem model needs two task tables and a shared table");

  struct Panel {
    std::string name;
    PairEmbeddings emb;
  };
  std::vector<Panel> panels;
  panels.push_back({"single_a", model_pair_embeddings(*models.at("single_a"), 0)});
  panels.push_back({"single_b", model_pair_embeddings(*models.at("single_b"), 0)});
  panels.push_back({"shared", model_pair_embeddings(*models.at("shared"), 0)});
  panels.push_back({"stem_a", model_pair_embeddings(stem, 0)});
  panels.push_back({"stem_b", model_pair_embeddings(stem, 1)});
  panels.push_back({"stem_shared", model_pair_embeddings(stem, stem_tables - 1)});

  const std::int64_t universe = panels.front().emb.universe();
  for (const auto& p : panels) {
    if (p.emb.universe() != universe) throw ConfigError("models disagree on the user/item universe");
  }
  if (manifest.contains("users") && manifest.contains("items") &&
      manifest["users"].get<std::int64_t>() * manifest["items"].get<std::int64_t>() != universe) {
    throw ConfigError("manifest universe does not match the models");
  }

  std::vector<PairDistances> all;
  for (const auto& p : panels) all.push_back(p.emb.all_pairs());
  const std::vector<std::int64_t> s = contradictory_pairs(all[0], all[1], pctl);

  AnalysisReport r;
  r.kind = ReportKind::entangle;
  nlohmann::json panel_json = nlohmann::json::object();
  for (std::size_t k = 0; k < panels.size(); ++k) {
    const DistanceDistribution whole = distance_distribution(all[k].distance);
    const DistanceDistribution subset = distance_distribution(s, panels[k].emb, 50, whole.max);
    panel_json[panels[k].name] = {{"contradictory", subset.to_json()}, {"all", whole.to_json()}};
  }
  r.payload["panels"] = std::move(panel_json);
  r.payload["pctl"] = pctl;
  r.payload["pairs"] = universe;
  r.payload["contradictory_pairs"] = s;
  r.payload["spearman"] = {
      {"single_a_vs_shared", spearman(all[0].distance, all[2].distance)},
      {"single_a_vs_stem_a", spearman(all[0].distance, all[3].distance)},
      {"single_b_vs_shared", spearman(all[1].distance, all[2].distance)},
      {"single_b_vs_stem_b", spearman(all[1].distance, all[4].distance)},
  };
  r.provenance["dataset"] = manifest;
  return r;
}

void copy_pair_tables(const Model& src, std::size_t src_table, Model& dst, std::size_t dst_table,
                      const std::string& user_field, const std::string& item_field) {
  for (const auto& name : {user_field, item_field}) {
    const Matrix& from = src.params().value(src.field_param(src_table, src.schema().index_of(name)));
    Matrix& to = dst.params().value(dst.field_param(dst_table, dst.schema().index_of(name)));
    if (from.rows() != to.rows() || from.cols() != to.cols()) {
      throw ConfigError("embedding tables for '" + name + "' differ in shape");
    }
    to = from;
  }
}

EntanglementConfig::EntanglementConfig() {
  train.epochs = 3;
  train.lr = 0.05;
}

EntanglementConfig EntanglementConfig::from_config(const Config& c) {
  EntanglementConfig e;
  e.dim = static_cast<std::size_t>(c.get_int("dim", static_cast<std::int64_t>(e.dim)));
  if (c.has("expert_hidden")) {
    e.expert_hidden.clear();
    for (auto v : c.get_ints("expert_hidden")) e.expert_hidden.push_back(static_cast<std::size_t>(v));
  }
  if (c.has("tower_hidden")) {
    e.tower_hidden.clear();
    for (auto v : c.get_ints("tower_hidden")) e.tower_hidden.push_back(static_cast<std::size_t>(v));
  }
  e.pctl = c.get_double("pctl", e.pctl);
  Config train = c.subtree("train");
  if (!train.has("epochs")) train.set("epochs", std::to_string(e.train.epochs));
  if (!train.has("lr")) train.set("lr", "0.05");
  e.train = TrainConfig::from_config(train);
  if (e.dim == 0) throw ConfigError("entanglement dim must be positive");
  if (!(e.pctl > 0.0 && e.pctl <= 0.5)) throw ConfigError("entanglement pctl must lie in (0, 0.5]");
  return e;
}

std::map<std::string, const Model*> EntanglementModels::by_name() const {
  return {{"single_a", &single_a}, {"single_b", &single_b}, {"shared", &shared}, {"stem", &stem}};
}

EntanglementModels train_entanglement_models(const Dataset& data, const EntanglementConfig& cfg,
                                             std::uint64_t seed) {
  const auto& tasks = data.tasks();
  if (tasks.size() != 2) throw ConfigError("entanglement analysis needs a two-task dataset");
  BuildOptions opt;
  opt.op = ExpertOp::fm;
  opt.expert_hidden = cfg.expert_hidden;
  opt.tower_hidden = cfg.tower_hidden;
  EntanglementModels m{Model(data.schema, single_build(cfg.dim, {tasks[0]}, opt), seed),
                       Model(data.schema, single_build(cfg.dim, {tasks[1]}, opt), seed),
                       Model(data.schema, shared_build(cfg.dim, tasks, opt), seed),
                       Model(data.schema, stem_build(cfg.dim, tasks, opt), seed)};
  const Model& ref = m.single_a;
  copy_pair_tables(ref, 0, m.single_b, 0);
  copy_pair_tables(ref, 0, m.shared, 0);
  // Task tables only; the STEM shared table keeps its own draw.
  for (std::size_t t = 0; t < tasks.size(); ++t) copy_pair_tables(ref, 0, m.stem, t);
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  for (Model* model : {&m.single_a, &m.single_b, &m.shared, &m.stem}) train(*model, data.samples, {}, tc);
  return m;
}

}  // namespace collapsar
