#include "collapsar/data/generators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "collapsar/encoding/temporal.hpp"
#include "collapsar/errors.hpp"
#include "collapsar/numerics/ops.hpp"
#include "collapsar/numerics/rng.hpp"

namespace collapsar {

namespace {

constexpr std::int64_t kBaseTimestamp = 1'700'000'000;

FieldSchema categorical(std::string name, std::int64_t card, int part, int group) {
  FieldSchema f;
  f.name = std::move(name);
  f.kind = FieldKind::categorical;
  f.cardinality = card;
  f.part_id = part;
  f.group_id = group;
  return f;
}

// Solves mean_i sigmoid(b + shift_i) = rate for b by bisection.
double calibrate_bias(const std::vector<double>& shifts, double rate) {
  double lo = -60.0;
  double hi = 60.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    double mean = 0.0;
    for (double s : shifts) mean += sigmoid(mid + s);
    mean /= static_cast<double>(std::max<std::size_t>(shifts.size(), 1));
    (mean < rate ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

nlohmann::json common_manifest(const std::string& name, std::uint64_t seed, std::size_t n,
                               const Dataset& data) {
  nlohmann::json m;
  m["generator"] = name;
  m["seed"] = seed;
  m["rows"] = n;
  nlohmann::json means = nlohmann::json::object();
  const auto fm = field_means(data);
  for (std::size_t i = 0; i < fm.size(); ++i) means[data.schema.field(i).name] = fm[i];
  m["field_means"] = means;
  nlohmann::json rates = nlohmann::json::object();
  const auto lr = data.label_rates();
  for (std::size_t t = 0; t < lr.size(); ++t) rates[data.schema.tasks()[t]] = lr[t];
  m["label_rates"] = rates;
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------

CtrGenConfig CtrGenConfig::from_config(const Config& cfg) {
  CtrGenConfig c;
  c.categories = cfg.get_int("categories", c.categories);
  c.seq_len = static_cast<std::size_t>(cfg.get_int("seq_len", static_cast<std::int64_t>(c.seq_len)));
  c.base_rate = cfg.get_double("base_rate", c.base_rate);
  c.semantic_boost = cfg.get_double("semantic_boost", c.semantic_boost);
  c.temporal_decay = cfg.get_double("temporal_decay", c.temporal_decay);
  c.match_prob = cfg.get_double("match_prob", c.match_prob);
  c.max_log2_age = cfg.get_double("max_log2_age", c.max_log2_age);
  c.users = cfg.get_int("users", c.users);
  c.validate();
  return c;
}

void CtrGenConfig::validate() const {
  if (!(base_rate > 0.0 && base_rate < 1.0)) throw ConfigError("base_rate must lie in (0, 1)");
  if (!(match_prob >= 0.0 && match_prob <= 1.0)) throw ConfigError("match_prob must lie in [0, 1]");
  if (categories < 1 || seq_len < 1 || users < 1) {
    throw ConfigError("categories, seq_len and users must be positive");
  }
  if (temporal_decay < 0.0 || !std::isfinite(semantic_boost)) {
    throw ConfigError("temporal_decay must be >= 0 and semantic_boost finite");
  }
  if (!(max_log2_age > 0.0 && max_log2_age <= 30.0)) throw ConfigError("max_log2_age must lie in (0, 30]");
}

GeneratedData gen_synthetic_ctr(std::uint64_t seed, std::size_t n, const CtrGenConfig& cfg) {
  cfg.validate();
  Rng feature_rng = Rng(seed).fork(1);
  Rng label_rng = Rng(seed).fork(2);

  FieldSchema hist;
  hist.name = "hist";
  hist.kind = FieldKind::sequence;
  hist.cardinality = cfg.categories;
  hist.max_len = cfg.seq_len;
  Schema schema({categorical("user", cfg.users, 0, 0),
                 categorical("target_cat", cfg.categories, 1, 1), hist},
                {"click"});

  Dataset data;
  data.schema = schema;
  data.samples.reserve(n);
  std::vector<double> shifts(n, 0.0);
  std::vector<double> log_ages(cfg.seq_len);
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.ts = kBaseTimestamp + static_cast<std::int64_t>(i) * 10;
    s.user_id = static_cast<std::int64_t>(feature_rng.uniform_int(cfg.users));
    const auto target = static_cast<std::int64_t>(feature_rng.uniform_int(cfg.categories));
    for (double& u : log_ages) u = feature_rng.uniform(0.0, cfg.max_log2_age);
    std::sort(log_ages.begin(), log_ages.end());
    BehaviorList seq;
    seq.reserve(cfg.seq_len);
    double shift = 0.0;
    for (std::size_t p = 0; p < cfg.seq_len; ++p) {
      const bool copy = feature_rng.bernoulli(cfg.match_prob);
      const auto item = copy ? target
                             : static_cast<std::int64_t>(feature_rng.uniform_int(cfg.categories));
      const auto age = static_cast<std::int64_t>(std::floor(std::exp2(log_ages[p]))) - 1;
      seq.push_back({item, s.ts - age});
      if (item == target) {
        const auto bucket = temporal_bucket(age, TemporalMode::interval);
        shift += cfg.semantic_boost * std::exp(-cfg.temporal_decay * static_cast<double>(bucket));
      }
    }
    shifts[i] = shift;
    s.values = {FieldValue{s.user_id}, FieldValue{target}, FieldValue{std::move(seq)}};
    s.ad_id = target;
    data.samples.push_back(std::move(s));
  }
  const double bias = calibrate_bias(shifts, cfg.base_rate);
  for (std::size_t i = 0; i < n; ++i) {
    data.samples[i].labels = {static_cast<std::uint8_t>(label_rng.bernoulli(sigmoid(bias + shifts[i])))};
  }

  GeneratedData out{std::move(data), {}};
  out.manifest = common_manifest("ctr", seed, n, out.data);
  out.manifest["config"] = {{"categories", cfg.categories},
                            {"seq_len", cfg.seq_len},
                            {"base_rate", cfg.base_rate},
                            {"semantic_boost", cfg.semantic_boost},
                            {"temporal_decay", cfg.temporal_decay},
                            {"match_prob", cfg.match_prob},
                            {"max_log2_age", cfg.max_log2_age},
                            {"users", cfg.users}};
  out.manifest["bias"] = bias;
  return out;
}

// ---------------------------------------------------------------------------

TwoTaskGenConfig TwoTaskGenConfig::from_config(const Config& cfg) {
  TwoTaskGenConfig c;
  c.users = cfg.get_int("users", c.users);
  c.items = cfg.get_int("items", c.items);
  c.latent_dim = static_cast<std::size_t>(cfg.get_int("latent_dim", static_cast<std::int64_t>(c.latent_dim)));
  c.q = cfg.get_double("q", c.q);
  c.base_logit = cfg.get_double("base_logit", c.base_logit);
  c.affinity_scale = cfg.get_double("affinity_scale", c.affinity_scale);
  c.contrast = cfg.get_double("contrast", c.contrast);
  c.validate();
  return c;
}

void TwoTaskGenConfig::validate() const {
  // q = 0 is accepted: it yields identically distributed tasks.
  if (!(q >= 0.0 && q < 1.0)) throw ConfigError("q must lie in [0, 1)");
  if (users < 1 || items < 1 || latent_dim < 1) {
    throw ConfigError("users, items and latent_dim must be positive");
  }
}

GeneratedData gen_two_task_contradictory(std::uint64_t seed, std::size_t n,
                                         const TwoTaskGenConfig& cfg) {
  cfg.validate();
  Rng latent_rng = Rng(seed).fork(1);
  Rng plant_rng = Rng(seed).fork(2);
  Rng sample_rng = Rng(seed).fork(3);

  const auto d = cfg.latent_dim;
  Matrix user_factors(static_cast<std::size_t>(cfg.users), d);
  Matrix item_factors(static_cast<std::size_t>(cfg.items), d);
  for (double& v : user_factors.values()) v = latent_rng.normal();
  for (double& v : item_factors.values()) v = latent_rng.normal();

  const std::int64_t universe = cfg.users * cfg.items;
  std::vector<std::int64_t> ids(static_cast<std::size_t>(universe));
  std::iota(ids.begin(), ids.end(), 0);
  plant_rng.shuffle(ids);
  const auto planted_count =
      static_cast<std::size_t>(std::llround(cfg.q * static_cast<double>(universe)));
  std::vector<std::int64_t> planted(ids.begin(), ids.begin() + planted_count);
  std::sort(planted.begin(), planted.end());
  std::vector<bool> is_planted(static_cast<std::size_t>(universe), false);
  for (auto id : planted) is_planted[static_cast<std::size_t>(id)] = true;

  auto logits = [&](std::int64_t u, std::int64_t i) {
    const double a = cfg.affinity_scale *
                     dot(user_factors.row(static_cast<std::size_t>(u)),
                         item_factors.row(static_cast<std::size_t>(i))) /
                     std::sqrt(static_cast<double>(d));
    if (is_planted[static_cast<std::size_t>(pair_id(u, i, cfg.items))]) {
      return std::pair{cfg.base_logit + std::abs(a) + cfg.contrast,
                       cfg.base_logit - std::abs(a) - cfg.contrast};
    }
    return std::pair{cfg.base_logit + a, cfg.base_logit + a};
  };

  Schema schema({categorical("user", cfg.users, 0, 0), categorical("item", cfg.items, 1, 1)},
                {"task_a", "task_b"});
  Dataset data;
  data.schema = schema;
  data.samples.reserve(n);
  std::size_t planted_rows = 0;
  double planted_a = 0.0;
  double planted_b = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    Sample s;
    s.ts = kBaseTimestamp + static_cast<std::int64_t>(r);
    const auto u = static_cast<std::int64_t>(sample_rng.uniform_int(cfg.users));
    const auto i = static_cast<std::int64_t>(sample_rng.uniform_int(cfg.items));
    const auto [la, lb] = logits(u, i);
    const bool ya = sample_rng.bernoulli(sigmoid(la));
    const bool yb = sample_rng.bernoulli(sigmoid(lb));
    s.user_id = u;
    s.ad_id = i;
    s.values = {FieldValue{u}, FieldValue{i}};
    s.labels = {static_cast<std::uint8_t>(ya), static_cast<std::uint8_t>(yb)};
    if (is_planted[static_cast<std::size_t>(pair_id(u, i, cfg.items))]) {
      ++planted_rows;
      planted_a += ya;
      planted_b += yb;
    }
    data.samples.push_back(std::move(s));
  }

  GeneratedData out{std::move(data), {}};
  out.manifest = common_manifest("two_task", seed, n, out.data);
  out.manifest["config"] = {{"users", cfg.users},       {"items", cfg.items},
                            {"latent_dim", cfg.latent_dim}, {"q", cfg.q},
                            {"base_logit", cfg.base_logit}, {"affinity_scale", cfg.affinity_scale},
                            {"contrast", cfg.contrast}};
  out.manifest["users"] = cfg.users;
  out.manifest["items"] = cfg.items;
  out.manifest["user_field"] = "user";
  out.manifest["item_field"] = "item";
  out.manifest["planted_pairs"] = planted;
  out.manifest["planted_rows"] = planted_rows;
  out.manifest["planted_label_rates"] = {
      {"task_a", planted_rows ? planted_a / static_cast<double>(planted_rows) : 0.0},
      {"task_b", planted_rows ? planted_b / static_cast<double>(planted_rows) : 0.0}};
  return out;
}

// ---------------------------------------------------------------------------

CollapseGenConfig CollapseGenConfig::from_config(const Config& cfg) {
  CollapseGenConfig c;
  c.low_cardinality = cfg.get_int("low_cardinality", c.low_cardinality);
  c.high_cardinality = cfg.get_int("high_cardinality", c.high_cardinality);
  c.context_cardinality = cfg.get_int("context_cardinality", c.context_cardinality);
  c.low_scale = cfg.get_double("low_scale", c.low_scale);
  c.context_scale = cfg.get_double("context_scale", c.context_scale);
  c.base_logit = cfg.get_double("base_logit", c.base_logit);
  c.validate();
  return c;
}

void CollapseGenConfig::validate() const {
  if (low_cardinality < 2 || high_cardinality < 2 || context_cardinality < 2) {
    throw ConfigError("collapse probe cardinalities must be >= 2");
  }
}

CollapseTables collapse_preference_tables(std::uint64_t seed, const CollapseGenConfig& cfg) {
  cfg.validate();
  Rng rng = Rng(seed).fork(1);
  CollapseTables t{Matrix(static_cast<std::size_t>(cfg.low_cardinality),
                          static_cast<std::size_t>(cfg.high_cardinality)),
                   Matrix(static_cast<std::size_t>(cfg.context_cardinality),
                          static_cast<std::size_t>(cfg.high_cardinality))};
  for (double& v : t.low_high.values()) v = cfg.low_scale * rng.normal();
  for (double& v : t.context_high.values()) v = cfg.context_scale * rng.normal();
  return t;
}

GeneratedData gen_collapse_probe(std::uint64_t seed, std::size_t n, const CollapseGenConfig& cfg) {
  const CollapseTables tables = collapse_preference_tables(seed, cfg);
  Rng rng = Rng(seed).fork(2);
  Schema schema({categorical("low", cfg.low_cardinality, 0, 0),
                 categorical("context", cfg.context_cardinality, 0, 1),
                 categorical("high", cfg.high_cardinality, 1, 2)},
                {"click"});
  Dataset data;
  data.schema = schema;
  data.samples.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto l = static_cast<std::int64_t>(rng.uniform_int(cfg.low_cardinality));
    const auto c = static_cast<std::int64_t>(rng.uniform_int(cfg.context_cardinality));
    const auto h = static_cast<std::int64_t>(rng.uniform_int(cfg.high_cardinality));
    const double logit = cfg.base_logit +
                         tables.low_high(static_cast<std::size_t>(l), static_cast<std::size_t>(h)) +
                         tables.context_high(static_cast<std::size_t>(c), static_cast<std::size_t>(h));
    Sample s;
    s.ts = kBaseTimestamp + static_cast<std::int64_t>(r);
    s.ad_id = h;
    s.values = {FieldValue{l}, FieldValue{c}, FieldValue{h}};
    s.labels = {static_cast<std::uint8_t>(rng.bernoulli(sigmoid(logit)))};
    data.samples.push_back(std::move(s));
  }
  GeneratedData out{std::move(data), {}};
  out.manifest = common_manifest("collapse", seed, n, out.data);
  out.manifest["config"] = {{"low_cardinality", cfg.low_cardinality},
                            {"high_cardinality", cfg.high_cardinality},
                            {"context_cardinality", cfg.context_cardinality},
                            {"low_scale", cfg.low_scale},
                            {"context_scale", cfg.context_scale},
                            {"base_logit", cfg.base_logit}};
  return out;
}

// ---------------------------------------------------------------------------

GeneratedData generate(const std::string& kind, std::uint64_t seed, std::size_t n,
                       const Config& cfg) {
  if (kind == "ctr") return gen_synthetic_ctr(seed, n, CtrGenConfig::from_config(cfg));
  if (kind == "two_task") {
    return gen_two_task_contradictory(seed, n, TwoTaskGenConfig::from_config(cfg));
  }
  if (kind == "collapse") return gen_collapse_probe(seed, n, CollapseGenConfig::from_config(cfg));
  throw ConfigError("unknown generator '" + kind + "' (expected ctr, two_task, collapse)");
}

void write_generated(const GeneratedData& gen, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_dataset(gen.data, dir / "data.csv", dir / "schema.yaml");
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write manifest in " + dir.string());
  out << gen.manifest.dump(2) << '\n';
}

}  // namespace collapsar
