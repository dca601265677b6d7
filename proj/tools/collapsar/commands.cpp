#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>

#include "collapsar/analysis/correlation.hpp"
#include "collapsar/analysis/entanglement.hpp"
#include "collapsar/analysis/report.hpp"
#include "collapsar/analysis/spectrum.hpp"
#include "collapsar/data/generators.hpp"
#include "collapsar/encoding/mns.hpp"
#include "collapsar/encoding/temporal.hpp"
#include "collapsar/errors.hpp"
#include "collapsar/exploration/bandit.hpp"
#include "collapsar/model/checkpoint.hpp"
#include "collapsar/model/spec.hpp"
#include "collapsar/numerics/matrix_io.hpp"
#include "collapsar/training/feedback.hpp"
#include "collapsar/training/metrics.hpp"
#include "collapsar/training/trainer.hpp"

namespace collapsar::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) { return json(v).dump(); }

Config keys(std::initializer_list<std::pair<const char*, std::string>> entries) {
  Config c;
  for (const auto& [k, v] : entries) c.set(k, v);
  return c;
}

void add_prefixed(Config& into, const std::string& prefix, const Config& from) {
  for (const auto& [k, v] : from.entries()) into.set(prefix + "." + k, v);
}

void fill_missing(Config& cfg, const std::string& prefix, const Config& defaults) {
  for (const auto& [k, v] : defaults.entries()) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    if (!cfg.has(key)) cfg.set(key, v);
  }
}

std::string join(const std::vector<std::int64_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + num(v[i]);
  return out;
}

Config generator_defaults(const std::string& kind) {
  if (kind == "ctr") {
    const CtrGenConfig c;
    return keys({{"categories", std::to_string(c.categories)},
                 {"seq_len", std::to_string(c.seq_len)},
                 {"base_rate", num(c.base_rate)},
                 {"semantic_boost", num(c.semantic_boost)},
                 {"temporal_decay", num(c.temporal_decay)},
                 {"match_prob", num(c.match_prob)},
                 {"max_log2_age", num(c.max_log2_age)},
                 {"users", std::to_string(c.users)}});
  }
  if (kind == "two_task") {
    const TwoTaskGenConfig c;
    return keys({{"users", std::to_string(c.users)},
                 {"items", std::to_string(c.items)},
                 {"latent_dim", std::to_string(c.latent_dim)},
                 {"q", num(c.q)},
                 {"base_logit", num(c.base_logit)},
                 {"affinity_scale", num(c.affinity_scale)},
                 {"contrast", num(c.contrast)}});
  }
  if (kind == "collapse") {
    const CollapseGenConfig c;
    return keys({{"low_cardinality", std::to_string(c.low_cardinality)},
                 {"high_cardinality", std::to_string(c.high_cardinality)},
                 {"context_cardinality", std::to_string(c.context_cardinality)},
                 {"low_scale", num(c.low_scale)},
                 {"context_scale", num(c.context_scale)},
                 {"base_logit", num(c.base_logit)}});
  }
  throw ConfigError("unknown generator '" + kind + "' (expected ctr, two_task, collapse)");
}

/// Picks the kind from the positional argument or the `kind` key.
std::string resolve_kind(Run& run, const ExtraFlags& extra, const std::string& what) {
  if (!extra.kind.empty()) run.set_flag("kind", extra.kind);
  if (!run.config().has("kind") || run.config().get_string("kind").empty()) {
    throw ConfigError(what + " kind is required");
  }
  return run.config().get_string("kind");
}

Dataset load_data_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("data directory not found: " + dir.string());
  return load_dataset(dir / "data.csv", dir / "schema.yaml");
}

json load_manifest(const fs::path& dir) {
  const fs::path p = dir / "manifest.json";
  if (!fs::exists(p)) return {{"path", dir.string()}};
  std::ifstream f(p);
  try {
    json j = json::parse(f);
    j["path"] = dir.string();
    return j;
  } catch (const json::parse_error& e) {
    throw LoadError(0, "manifest.json: " + std::string(e.what()));
  }
}

std::size_t to_size(std::int64_t v, const std::string& key) {
  if (v < 0) throw ConfigError(key + " must be non-negative");
  return static_cast<std::size_t>(v);
}

}  // namespace

int cmd_gen(const RunOptions& opts, const ExtraFlags& extra) {
  Config known = keys({{"kind", ""}, {"n", "1000"}, {"seed", "0"}});
  for (const char* g : {"ctr", "two_task", "collapse"}) {
    const Config defaults = generator_defaults(g);
    for (const auto& [k, v] : defaults.entries()) known.set("generator." + k, "");
  }
  Run run(opts, known);
  const std::string kind = resolve_kind(run, extra, "generator");
  const Config gen_defaults = generator_defaults(kind);
  const Config given = run.config().subtree("generator");
  for (const auto& [k, v] : given.entries()) {
    if (!gen_defaults.has(k)) throw ConfigError("unknown config key 'generator." + k + "' for generator " + kind);
  }
  fill_missing(run.config(), "generator", gen_defaults);
  const auto n = run.config().get_int("n");
  if (n <= 0) throw ConfigError("n must be positive");

  const GeneratedData gen = generate(kind, run.seed(), static_cast<std::size_t>(n),
                                     run.config().subtree("generator"));
  run.begin();
  write_generated(gen, run.out());
  std::cout << "generated " << gen.data.size() << " rows (" << kind << ", seed " << run.seed()
            << ") into " << run.out().string() << "\n";
  return 0;
}

int cmd_train(const RunOptions& opts, const ExtraFlags& extra) {
  Config known = keys({{"data", ""}, {"valid_fraction", "0.2"}, {"seed", "0"}});
  add_prefixed(known, "model", model_config_keys());
  add_prefixed(known, "train", TrainConfig::keys());
  Run run(opts, known, {"data"});
  if (!extra.data.empty()) run.set_flag("data", extra.data);
  Config& cfg = run.config();
  if (!cfg.has("train.seed")) cfg.set("train.seed", std::to_string(run.seed()));

  const Dataset data = load_data_dir(run.path("data"));
  const double vf = cfg.get_double("valid_fraction");
  if (!(vf >= 0.0 && vf < 1.0)) throw ConfigError("valid_fraction must lie in [0, 1)");
  const auto n_valid = static_cast<std::size_t>(std::floor(vf * static_cast<double>(data.size())));
  if (n_valid >= data.size()) throw InputError("no training rows left after the validation split");
  const std::span<const Sample> all(data.samples);
  const auto train_rows = all.first(data.size() - n_valid);
  const auto valid_rows = all.last(n_valid);

  const ModelSpec spec = spec_from_config(cfg.subtree("model"), data.tasks());
  const TrainConfig tc = TrainConfig::from_config(cfg.subtree("train"));
  Model model(data.schema, spec, run.seed());
  run.begin();

  std::ofstream history(run.output("history.jsonl"));
  if (!history) throw IoError("cannot write history.jsonl");
  const TrainResult result = train(model, train_rows, valid_rows, tc, [&](const EpochRecord& r) {
    history << r.to_json().dump() << '\n' << std::flush;
  });
  save_checkpoint(model, run.output("checkpoint"));

  json metrics = {{"train", evaluate(model, train_rows).to_json()},
                  {"epochs", result.history.size()},
                  {"train_config", tc.to_json()}};
  if (!valid_rows.empty()) metrics["valid"] = evaluate(model, valid_rows).to_json();
  run.write_json("metrics.json", metrics);
  std::cout << metrics.dump() << "\n";
  return 0;
}

int cmd_eval(const RunOptions& opts, const ExtraFlags& extra) {
  Run run(opts, keys({{"checkpoint", ""}, {"data", ""}, {"seed", "0"}}), {"checkpoint", "data"});
  if (!extra.data.empty()) run.set_flag("data", extra.data);
  if (!extra.checkpoint.empty()) run.set_flag("checkpoint", extra.checkpoint);
  const Model model = load_checkpoint(run.path("checkpoint"));
  const Dataset data = load_data_dir(run.path("data"));
  if (!(data.schema == model.schema())) throw InputError("dataset schema differs from the checkpoint's");
  run.begin();
  const json metrics = evaluate(model, data.samples).to_json();
  run.write_json("metrics.json", metrics);
  std::cout << metrics.dump() << "\n";
  return 0;
}

int cmd_encode(const RunOptions& opts, const ExtraFlags& extra) {
  Run run(opts, keys({{"value", ""}, {"systems", "2,3,10"}, {"lengths", ""}, {"seed", "0"}}));
  if (!extra.value.empty()) run.set_flag("value", extra.value);
  if (!extra.systems.empty()) run.set_flag("systems", extra.systems);
  if (!extra.lengths.empty()) run.set_flag("lengths", extra.lengths);
  Config& cfg = run.config();
  if (!cfg.has("value") || cfg.get_string("value").empty()) throw ConfigError("encode needs a value");
  const std::int64_t value = cfg.get_int("value");
  if (value < 0) throw EncodeError("value must be non-negative, got " + std::to_string(value));

  MNSConfig mns;
  mns.bases.clear();
  for (auto b : cfg.get_ints("systems")) mns.bases.push_back(static_cast<int>(b));
  if (mns.bases.empty()) throw ConfigError("systems must list at least one base");
  if (cfg.has("lengths") && !cfg.get_string("lengths").empty()) {
    for (auto l : cfg.get_ints("lengths")) mns.lengths.push_back(static_cast<int>(l));
  } else {
    mns.lengths = MNSConfig::covering(std::max<std::int64_t>(value, 1), mns.bases.size(), mns.bases).lengths;
    cfg.set("lengths", join(std::vector<std::int64_t>(mns.lengths.begin(), mns.lengths.end())));
  }
  mns.dims.assign(mns.bases.size(), 1);
  const MNSCodes codes = mns_codes(value, mns);

  json out = {{"value", value}, {"systems", json::array()}};
  for (std::size_t s = 0; s < mns.num_systems(); ++s) {
    std::cout << codes.to_string(s) << "\n";
    out["systems"].push_back(
        {{"base", mns.bases[s]}, {"digits", codes.digits[s]}, {"code", codes.to_string(s)}});
  }
  if (!run.out().empty()) {
    run.begin();
    run.write_json("codes.json", out);
  }
  return 0;
}

namespace {

struct MatrixEntry {
  json meta;
  Matrix m;
};

Matrix hstack(const std::vector<Matrix>& parts) {
  std::size_t cols = 0;
  for (const auto& p : parts) cols += p.cols();
  Matrix out(parts.front().rows(), cols);
  std::size_t off = 0;
  for (const auto& p : parts) {
    for (std::size_t r = 0; r < p.rows(); ++r) {
      for (std::size_t c = 0; c < p.cols(); ++c) out(r, off + c) = p(r, c);
    }
    off += p.cols();
  }
  return out;
}

std::vector<MatrixEntry> collect_matrices(Run& run) {
  const Config& cfg = run.config();
  std::vector<MatrixEntry> entries;
  if (cfg.has("matrix")) {
    if (cfg.has("checkpoint")) throw ConfigError("give either 'matrix' or 'checkpoint', not both");
    const fs::path p = run.path("matrix");
    entries.push_back({{{"source", p.string()}}, read_matrix(p)});
    return entries;
  }
  const Model model = load_checkpoint(run.path("checkpoint"));
  const Schema& schema = model.schema();
  std::vector<std::size_t> tables;
  if (cfg.has("tables")) {
    for (auto t : cfg.get_ints("tables")) tables.push_back(to_size(t, "tables"));
  } else {
    tables.resize(model.spec().num_tables());
    std::iota(tables.begin(), tables.end(), 0);
  }
  std::vector<std::size_t> fields;
  if (cfg.has("fields")) {
    for (const auto& name : cfg.get_strings("fields")) {
      const auto f = schema.find(name);
      if (!f) throw ConfigError("unknown field '" + name + "'");
      fields.push_back(*f);
    }
  } else {
    for (std::size_t f = 0; f < schema.num_fields(); ++f) {
      const auto kind = schema.field(f).kind;
      if (kind == FieldKind::categorical || kind == FieldKind::sequence) fields.push_back(f);
    }
  }
  for (const auto f : fields) {
    std::vector<Matrix> parts;
    for (const auto t : tables) {
      if (t >= model.spec().num_tables()) throw ConfigError("table " + std::to_string(t) + " out of range");
      Matrix m;
      try {
        m = model.embedding_matrix(t, f);
      } catch (const InputError&) {
        continue;  // field not embedded in this table
      }
      entries.push_back({{{"table", t}, {"field", schema.field(f).name}}, m});
      parts.push_back(std::move(m));
    }
    if (parts.size() > 1) {
      entries.push_back({{{"table", "concat"}, {"field", schema.field(f).name}}, hstack(parts)});
    }
  }
  if (entries.empty()) throw InputError("no embedding matrices selected");
  return entries;
}

AnalysisReport analyze_spectral(Run& run, ReportKind kind) {
  const auto bins = to_size(run.config().get_int("bins"), "bins");
  if (bins == 0) throw ConfigError("bins must be positive");
  AnalysisReport rep;
  rep.kind = kind;
  rep.provenance = {{"seed", run.seed()}};
  if (run.config().has("checkpoint")) rep.provenance["checkpoint"] = run.path("checkpoint").string();
  json list = json::array();
  for (auto& e : collect_matrices(run)) {
    const Spectrum s = singular_spectrum(e.m);
    json item = e.meta;
    item["rows"] = e.m.rows();
    item["cols"] = e.m.cols();
    item["ia"] = information_abundance(s);
    if (kind == ReportKind::spectrum) {
      item["singular_values"] = s.singular_values;
      Histogram h{0.0, 1.0, std::vector<std::size_t>(bins, 0)};
      for (double v : s.singular_values) {
        const double r = s.max() > 0.0 ? v / s.max() : 0.0;
        ++h.counts[std::min(bins - 1, static_cast<std::size_t>(r * static_cast<double>(bins)))];
      }
      item["normalized_histogram"] = h.to_json();
    }
    list.push_back(std::move(item));
  }
  rep.payload = {{"matrices", std::move(list)}};
  return rep;
}

std::size_t sequence_field_index(const Schema& schema, const std::string& name) {
  if (!name.empty()) {
    const auto f = schema.find(name);
    if (!f) throw ConfigError("unknown field '" + name + "'");
    return *f;
  }
  for (std::size_t f = 0; f < schema.num_fields(); ++f) {
    if (schema.field(f).kind == FieldKind::sequence) return f;
  }
  throw InputError("dataset has no sequence field");
}

AnalysisReport analyze_mi(Run& run) {
  const Config& c = run.config();
  const Dataset data = load_data_dir(run.path("data"));
  CorrelationConfig cc;
  cc.sequence_field = c.get_string("sequence_field", "");
  cc.target_field = c.get_string("target_field", "");
  cc.task = to_size(c.get_int("task"), "task");
  const std::string slot = c.get_string("slot");
  if (slot == "position") {
    cc.slot = BehaviorSlot::position;
  } else if (slot == "interval") {
    cc.slot = BehaviorSlot::interval;
  } else {
    throw ConfigError("slot must be position or interval, got '" + slot + "'");
  }
  cc.min_support = to_size(c.get_int("min_support"), "min_support");
  const std::size_t seq = sequence_field_index(data.schema, cc.sequence_field);

  std::vector<std::int64_t> categories;
  if (c.has("categories")) {
    categories = c.get_ints("categories");
  } else {
    categories.resize(static_cast<std::size_t>(data.schema.field(seq).cardinality));
    std::iota(categories.begin(), categories.end(), 0);
  }
  std::vector<std::size_t> slots;
  if (c.has("slots")) {
    for (auto s : c.get_ints("slots")) slots.push_back(to_size(s, "slots"));
  } else {
    std::size_t top = 0;
    for (const auto& s : data.samples) {
      const auto& b = s.behaviors(seq);
      if (cc.slot == BehaviorSlot::position) {
        top = std::max(top, b.size());
      } else {
        for (const auto& x : b) top = std::max(top, temporal_bucket(s.ts - x.ts, TemporalMode::interval) + 1);
      }
    }
    slots.resize(top);
    std::iota(slots.begin(), slots.end(), 0);
  }
  const std::int64_t target = c.get_int("target_category");
  const CorrelationGrid grid = semantic_temporal_correlation(data, target, categories, slots, cc);

  AnalysisReport rep;
  rep.kind = ReportKind::mi;
  rep.payload = {{"grid", grid.to_json()}};
  // Rank correlation between slot index and the target category's MI row.
  json decay = nullptr;
  const auto it = std::find(categories.begin(), categories.end(), target);
  if (it != categories.end()) {
    const auto& row = grid.mi[static_cast<std::size_t>(it - categories.begin())];
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t j = 0; j < slots.size(); ++j) {
      if (!row[j]) continue;
      xs.push_back(static_cast<double>(slots[j]));
      ys.push_back(*row[j]);
    }
    if (xs.size() >= 2) {
      const double rho = spearman(xs, ys);
      if (!std::isnan(rho)) decay = rho;
    }
  }
  rep.payload["target_slot_spearman"] = decay;
  rep.provenance = {{"dataset", load_manifest(run.path("data"))}, {"seed", run.seed()}};
  return rep;
}

AnalysisReport analyze_entangle(Run& run) {
  const Config& c = run.config();
  const fs::path dir = run.path("data");
  const Dataset data = load_data_dir(dir);
  Config ec;
  for (const auto& [k, v] : c.entries()) {
    if (k == "dim" || k == "expert_hidden" || k == "tower_hidden" || k == "pctl" || k.rfind("train.", 0) == 0) {
      ec.set(k, v);
    }
  }
  const EntanglementConfig cfg = EntanglementConfig::from_config(ec);
  const EntanglementModels models = train_entanglement_models(data, cfg, run.seed());
  AnalysisReport rep = entanglement_report(load_manifest(dir), models.by_name(), cfg.pctl);
  rep.provenance["seed"] = run.seed();
  if (c.get_bool("save_models")) {
    for (const auto& [name, model] : models.by_name()) save_checkpoint(*model, run.output("models/" + name));
  }
  return rep;
}

}  // namespace

int cmd_analyze(const RunOptions& opts, const ExtraFlags& extra) {
  Config known = keys({{"kind", ""},
                       {"seed", "0"},
                       {"checkpoint", ""},
                       {"matrix", ""},
                       {"data", ""},
                       {"tables", ""},
                       {"fields", ""},
                       {"bins", "20"},
                       {"target_category", "0"},
                       {"categories", ""},
                       {"slots", ""},
                       {"slot", "position"},
                       {"min_support", "100"},
                       {"task", "0"},
                       {"sequence_field", ""},
                       {"target_field", ""},
                       {"dim", ""},
                       {"expert_hidden", ""},
                       {"tower_hidden", ""},
                       {"pctl", ""},
                       {"save_models", "true"}});
  add_prefixed(known, "train", TrainConfig::keys());
  Run run(opts, known, {"checkpoint", "matrix", "data"});
  const std::string kind_name = resolve_kind(run, extra, "analysis");
  if (!extra.data.empty()) run.set_flag("data", extra.data);
  if (!extra.checkpoint.empty()) run.set_flag("checkpoint", extra.checkpoint);
  const ReportKind kind = parse_report_kind(kind_name);
  run.begin();

  AnalysisReport rep;
  switch (kind) {
    case ReportKind::spectrum:
    case ReportKind::ia:
      rep = analyze_spectral(run, kind);
      break;
    case ReportKind::mi:
      rep = analyze_mi(run);
      break;
    case ReportKind::entangle:
      rep = analyze_entangle(run);
      break;
  }
  write_report(rep, run.out());
  std::cout << "wrote " << to_string(kind) << " report to " << (run.out() / "report.json").string() << "\n";
  return 0;
}

int cmd_simulate(const RunOptions& opts, const ExtraFlags& extra) {
  const BanditConfig bd;
  const FeedbackStreamConfig fs_default;
  const DelayedFeedbackConfig df;
  Config known = keys({{"kind", ""},
                       {"seed", "0"},
                       {"arms", ""},
                       {"rounds", ""},
                       {"epsilon", ""},
                       {"kernel.lengthscale", ""},
                       {"kernel.variance", ""},
                       {"policies", ""},
                       {"seeds", ""}});
  for (const char* k : {"intervals", "clicks_per_interval", "cvr", "window", "burst_factor", "burst_start",
                        "burst_end", "deterministic"}) {
    known.set(std::string("stream.") + k, "");
  }
  for (const char* k : {"min_wait", "max_wait", "threshold", "eps"}) known.set(std::string("scheduler.") + k, "");
  Run run(opts, known);
  const std::string kind = resolve_kind(run, extra, "simulation");
  Config& cfg = run.config();

  const auto reject_other = [&](const std::vector<std::string>& allowed_prefixes) {
    for (const auto& [k, v] : cfg.entries()) {
      if (k == "kind" || k == "seed") continue;
      const bool ok = std::any_of(allowed_prefixes.begin(), allowed_prefixes.end(),
                                  [&](const std::string& p) { return k == p || k.rfind(p + ".", 0) == 0; });
      if (!ok) throw ConfigError("key '" + k + "' does not apply to simulate " + kind);
    }
  };

  if (kind == "bandit") {
    reject_other({"arms", "rounds", "epsilon", "kernel", "policies", "seeds"});
    fill_missing(cfg, "", keys({{"arms", join(bd.arms)},
                                {"rounds", std::to_string(bd.rounds)},
                                {"epsilon", num(bd.epsilon)},
                                {"kernel.lengthscale", num(bd.kernel.lengthscale)},
                                {"kernel.variance", num(bd.kernel.variance)},
                                {"policies", "ts,epsilon_greedy,greedy"},
                                {"seeds", "20"}}));
    const BanditConfig bc = BanditConfig::from_config(cfg);
    std::vector<BanditPolicy> policies;
    for (const auto& p : cfg.get_strings("policies")) policies.push_back(parse_bandit_policy(p));
    const auto reps = cfg.get_int("seeds");
    if (reps <= 0) throw ConfigError("seeds must be positive");
    run.begin();

    json runs = json::array();
    for (const auto policy : policies) {
      std::vector<double> finals;
      std::vector<std::uint64_t> seeds;
      std::vector<double> mean_curve(bc.rounds, 0.0);
      for (std::int64_t r = 0; r < reps; ++r) {
        const std::uint64_t s = run.seed() + static_cast<std::uint64_t>(r);
        const BanditTrace t = bandit_simulate(bc, policy, s);
        seeds.push_back(s);
        finals.push_back(t.final_regret());
        for (std::size_t i = 0; i < mean_curve.size(); ++i) mean_curve[i] += t.cumulative_regret[i] / static_cast<double>(reps);
      }
      std::vector<double> sorted = finals;
      std::sort(sorted.begin(), sorted.end());
      const std::size_t m = sorted.size();
      const double median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
      runs.push_back({{"policy", to_string(policy)},
                      {"seeds", seeds},
                      {"final_regret", finals},
                      {"median_final_regret", median},
                      {"mean_cumulative_regret", mean_curve}});
      std::cout << to_string(policy) << ": median final regret " << median << "\n";
    }
    run.write_json("trace.json", {{"kind", "bandit"}, {"config", bc.to_json()}, {"runs", std::move(runs)}});
    return 0;
  }
  if (kind == "delayed_feedback") {
    reject_other({"stream", "scheduler"});
    fill_missing(cfg, "stream", keys({{"intervals", std::to_string(fs_default.intervals)},
                                      {"clicks_per_interval", num(fs_default.clicks_per_interval)},
                                      {"cvr", num(fs_default.cvr)},
                                      {"window", std::to_string(fs_default.window)},
                                      {"burst_factor", num(fs_default.burst_factor)},
                                      {"burst_start", std::to_string(fs_default.burst_start)},
                                      {"burst_end", std::to_string(fs_default.burst_end)},
                                      {"deterministic", fs_default.deterministic ? "true" : "false"}}));
    fill_missing(cfg, "scheduler", keys({{"min_wait", num(df.min_wait)},
                                         {"max_wait", num(df.max_wait)},
                                         {"threshold", num(df.threshold)},
                                         {"eps", num(df.eps)}}));
    const FeedbackStreamConfig stream = FeedbackStreamConfig::from_config(cfg.subtree("stream"));
    const DelayedFeedbackConfig sched = DelayedFeedbackConfig::from_config(cfg.subtree("scheduler"));
    run.begin();
    const FeedbackTrace trace = simulate_feedback(stream, sched, run.seed());
    run.write_json("trace.json", {{"kind", "delayed_feedback"}, {"trace", trace.to_json()}});
    const auto [lo, hi] = std::minmax_element(trace.wait.begin(), trace.wait.end());
    if (lo != trace.wait.end()) std::cout << "wait range [" << *lo << ", " << *hi << "]\n";
    return 0;
  }
  throw ConfigError("unknown simulation '" + kind + "' (expected bandit, delayed_feedback)");
}

}  // namespace collapsar::cli
