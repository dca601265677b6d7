#include "collapsar/model/spec.hpp"

#include <algorithm>
#include <set>

#include "collapsar/errors.hpp"

namespace collapsar {

namespace {

constexpr std::pair<Route, std::string_view> kRoutes[] = {
    {Route::backward, "backward"}, {Route::forward_only, "forward_only"}, {Route::hidden, "hidden"}};

constexpr std::pair<ExpertOp, std::string_view> kOps[] = {
    {ExpertOp::fm, "fm"},           {ExpertOp::fwfm, "fwfm"},
    {ExpertOp::ffm, "ffm"},         {ExpertOp::gwpfm, "gwpfm"},
    {ExpertOp::projected, "projected"}, {ExpertOp::flatdnn, "flatdnn"},
    {ExpertOp::tim, "tim"}};

ModelSpec base_spec(const std::string& paradigm, const std::vector<std::size_t>& dims,
                    const std::vector<std::string>& tasks, const BuildOptions& opt) {
  if (tasks.empty()) throw ConfigError(paradigm + ": at least one task is required");
  ModelSpec s;
  s.paradigm = paradigm;
  s.table_dims = dims;
  s.towers = tasks;
  s.tower_hidden = opt.tower_hidden;
  s.embedding_scale = opt.embedding_scale;
  s.experts.clear();
  return s;
}

ExpertSpec expert_for(std::size_t table, const BuildOptions& opt) {
  ExpertSpec e;
  e.table = table;
  e.op = opt.op;
  e.hidden = opt.expert_hidden;
  return e;
}

void fill_routes(ModelSpec& s, Route r) {
  s.table_routes.assign(s.num_towers(), std::vector<Route>(s.num_tables(), r));
  s.expert_routes.assign(s.num_towers(), std::vector<Route>(s.num_experts(), r));
}

std::vector<std::size_t> to_sizes(const std::vector<std::int64_t>& v) {
  std::vector<std::size_t> out;
  for (auto x : v) {
    if (x <= 0) throw ConfigError("dimensions must be positive");
    out.push_back(static_cast<std::size_t>(x));
  }
  return out;
}

}  // namespace

std::string_view to_string(Route r) {
  for (const auto& [v, name] : kRoutes) {
    if (v == r) return name;
  }
  return "?";
}

Route parse_route(std::string_view text) {
  for (const auto& [v, name] : kRoutes) {
    if (name == text) return v;
  }
  throw ConfigError("unknown route '" + std::string(text) + "'");
}

std::string_view to_string(ExpertOp op) {
  for (const auto& [v, name] : kOps) {
    if (v == op) return name;
  }
  return "?";
}

ExpertOp parse_expert_op(std::string_view text) {
  for (const auto& [v, name] : kOps) {
    if (name == text) return v;
  }
  throw ConfigError("unknown expert op '" + std::string(text) +
                    "' (expected fm, fwfm, ffm, gwpfm, projected, flatdnn, tim)");
}

std::size_t ModelSpec::expert_output_dim() const {
  if (experts.empty()) throw ConfigError("model has no experts");
  return experts.front().hidden.back();
}

void ModelSpec::validate() const {
  if (table_dims.empty()) throw ConfigError("model needs at least one table");
  if (experts.empty()) throw ConfigError("model needs at least one expert");
  if (towers.empty()) throw ConfigError("model needs at least one tower");
  for (auto d : table_dims) {
    if (d == 0) throw ConfigError("table width must be positive");
  }
  std::set<std::size_t> read;
  for (const auto& e : experts) {
    if (e.table >= table_dims.size()) throw ConfigError("expert reads a table that does not exist");
    if (e.hidden.empty()) throw ConfigError("expert MLP needs at least one layer");
    if (e.hidden.back() != experts.front().hidden.back()) {
      throw ConfigError("all experts must emit the same width");
    }
    read.insert(e.table);
  }
  if (read.size() != table_dims.size()) throw ConfigError("every table must be read by an expert");
  if (table_routes.size() != towers.size() || expert_routes.size() != towers.size()) {
    throw ConfigError("routing masks need one row per tower");
  }
  for (std::size_t t = 0; t < towers.size(); ++t) {
    if (table_routes[t].size() != table_dims.size() || expert_routes[t].size() != experts.size()) {
      throw ConfigError("routing mask row has the wrong width");
    }
    bool sees = false;
    for (std::size_t e = 0; e < experts.size(); ++e) {
      const Route er = expert_routes[t][e];
      const Route tr = table_routes[t][experts[e].table];
      if ((er == Route::hidden) != (tr == Route::hidden)) {
        throw ConfigError("tower '" + towers[t] + "' sees an expert without its table or vice versa");
      }
      sees = sees || er != Route::hidden;
    }
    if (!sees) throw ConfigError("tower '" + towers[t] + "' sees no expert");
  }
  std::set<std::string> names(towers.begin(), towers.end());
  if (names.size() != towers.size()) throw ConfigError("tower names must be unique");
  for (const auto& t : inference_towers) {
    if (!names.count(t)) throw ConfigError("inference tower '" + t + "' does not exist");
  }
}

nlohmann::json ModelSpec::to_json() const {
  nlohmann::json j;
  j["paradigm"] = paradigm;
  j["table_dims"] = table_dims;
  j["towers"] = towers;
  j["tower_hidden"] = tower_hidden;
  j["embedding_scale"] = embedding_scale;
  j["mlp_scale"] = mlp_scale;
  j["inference_towers"] = inference_towers;
  j["warnings"] = warnings;
  nlohmann::json ex = nlohmann::json::array();
  for (const auto& e : experts) {
    ex.push_back({{"table", e.table},
                  {"op", std::string(to_string(e.op))},
                  {"hidden", e.hidden},
                  {"linear", e.linear},
                  {"temporal", e.temporal},
                  {"sequence_field", e.sequence_field},
                  {"target_field", e.target_field}});
  }
  j["experts"] = ex;
  auto routes = [](const std::vector<std::vector<Route>>& m) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& row : m) {
      nlohmann::json r = nlohmann::json::array();
      for (auto v : row) r.push_back(std::string(to_string(v)));
      out.push_back(r);
    }
    return out;
  };
  j["table_routes"] = routes(table_routes);
  j["expert_routes"] = routes(expert_routes);
  return j;
}

ModelSpec ModelSpec::from_json(const nlohmann::json& j) {
  ModelSpec s;
  try {
    s.paradigm = j.at("paradigm").get<std::string>();
    s.table_dims = j.at("table_dims").get<std::vector<std::size_t>>();
    s.towers = j.at("towers").get<std::vector<std::string>>();
    s.tower_hidden = j.at("tower_hidden").get<std::vector<std::size_t>>();
    s.embedding_scale = j.at("embedding_scale").get<double>();
    s.mlp_scale = j.value("mlp_scale", 1.0);
    s.inference_towers = j.value("inference_towers", std::vector<std::string>{});
    s.warnings = j.value("warnings", std::vector<std::string>{});
    s.experts.clear();
    for (const auto& e : j.at("experts")) {
      ExpertSpec x;
      x.table = e.at("table").get<std::size_t>();
      x.op = parse_expert_op(e.at("op").get<std::string>());
      x.hidden = e.at("hidden").get<std::vector<std::size_t>>();
      x.linear = e.value("linear", false);
      x.temporal = e.value("temporal", true);
      x.sequence_field = e.value("sequence_field", "");
      x.target_field = e.value("target_field", "");
      s.experts.push_back(std::move(x));
    }
    auto routes = [](const nlohmann::json& m) {
      std::vector<std::vector<Route>> out;
      for (const auto& row : m) {
        std::vector<Route> r;
        for (const auto& v : row) r.push_back(parse_route(v.get<std::string>()));
        out.push_back(std::move(r));
      }
      return out;
    };
    s.table_routes = routes(j.at("table_routes"));
    s.expert_routes = routes(j.at("expert_routes"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model spec: ") + e.what());
  }
  s.validate();
  return s;
}

ModelSpec single_build(std::size_t dim, const std::vector<std::string>& tasks,
                       const BuildOptions& opt) {
  ModelSpec s = base_spec("single", {dim}, tasks, opt);
  s.experts.push_back(expert_for(0, opt));
  fill_routes(s, Route::backward);
  s.validate();
  return s;
}

ModelSpec me_build(const std::vector<std::size_t>& dims, const std::vector<std::string>& tasks,
                   const BuildOptions& opt) {
  ModelSpec s = base_spec("me", dims, tasks, opt);
  for (std::size_t t = 0; t < dims.size(); ++t) s.experts.push_back(expert_for(t, opt));
  fill_routes(s, Route::backward);
  s.validate();
  return s;
}

ModelSpec shared_build(std::size_t dim, const std::vector<std::string>& tasks,
                       const BuildOptions& opt) {
  ModelSpec s = base_spec("shared", {dim}, tasks, opt);
  for (std::size_t t = 0; t < tasks.size(); ++t) s.experts.push_back(expert_for(0, opt));
  fill_routes(s, Route::backward);
  s.validate();
  return s;
}

ModelSpec stem_build(std::size_t dim, const std::vector<std::string>& tasks,
                     const BuildOptions& opt) {
  if (tasks.size() < 2) throw ConfigError("stem: at least two tasks are required");
  const std::size_t n = tasks.size();
  ModelSpec s = base_spec("stem", std::vector<std::size_t>(n + 1, dim), tasks, opt);
  for (std::size_t t = 0; t <= n; ++t) s.experts.push_back(expert_for(t, opt));
  fill_routes(s, Route::forward_only);
  for (std::size_t tower = 0; tower < n; ++tower) {
    for (std::size_t b : {tower, n}) {
      s.table_routes[tower][b] = Route::backward;
      s.expert_routes[tower][b] = Route::backward;
    }
  }
  s.validate();
  return s;
}

ModelSpec ame_build(const std::vector<std::size_t>& sizes, const std::vector<std::string>& tasks,
                    const BuildOptions& opt) {
  if (sizes.size() < 2) throw ConfigError("ame: at least two tables are required");
  ModelSpec s = base_spec("ame", sizes, tasks, opt);
  for (std::size_t t = 0; t < sizes.size(); ++t) s.experts.push_back(expert_for(t, opt));
  fill_routes(s, Route::backward);
  if (std::all_of(sizes.begin(), sizes.end(), [&](auto k) { return k == sizes.front(); })) {
    s.warnings.push_back("ame: all table sizes are equal; the model is a symmetric multi-embedding "
                         "mixture and may stay entangled");
  }
  if (tasks.size() == 1) s.warnings.push_back("ame: single tower (atypical)");
  s.validate();
  return s;
}

ModelSpec stem_al_build(std::size_t dim, const std::string& main_task,
                        const std::vector<std::string>& aux_tasks, const BuildOptions& opt) {
  if (aux_tasks.empty()) throw ConfigError("stem_al: at least one auxiliary task is required");
  std::vector<std::string> tasks{main_task};
  tasks.insert(tasks.end(), aux_tasks.begin(), aux_tasks.end());
  ModelSpec s = base_spec("stem_al", {dim, dim}, tasks, opt);
  s.experts.push_back(expert_for(0, opt));  // main
  s.experts.push_back(expert_for(1, opt));  // shared
  fill_routes(s, Route::backward);
  for (std::size_t tower = 1; tower < tasks.size(); ++tower) {
    s.table_routes[tower][0] = Route::hidden;
    s.expert_routes[tower][0] = Route::hidden;
  }
  s.inference_towers = {main_task};
  s.validate();
  return s;
}

Config model_config_keys() {
  Config k;
  for (const char* key : {"paradigm", "op", "dim", "dims", "expert_hidden", "tower_hidden",
                          "embedding_scale", "main_task", "tim_temporal", "mlp_scale"}) {
    k.set(key, "");
  }
  return k;
}

ModelSpec spec_from_config(const Config& cfg, const std::vector<std::string>& tasks) {
  cfg.reject_unknown(model_config_keys());
  BuildOptions opt;
  opt.op = parse_expert_op(cfg.get_string("op", "fm"));
  if (cfg.has("expert_hidden")) opt.expert_hidden = to_sizes(cfg.get_ints("expert_hidden"));
  if (cfg.has("tower_hidden")) opt.tower_hidden = to_sizes(cfg.get_ints("tower_hidden"));
  opt.embedding_scale = cfg.get_double("embedding_scale", opt.embedding_scale);
  const std::string paradigm = cfg.get_string("paradigm", "single");
  const auto dim = static_cast<std::size_t>(cfg.get_int("dim", 16));
  if (dim == 0) throw ConfigError("model.dim must be positive");
  ModelSpec s;
  if (paradigm == "single") {
    s = single_build(dim, tasks, opt);
  } else if (paradigm == "me") {
    s = me_build(cfg.has("dims") ? to_sizes(cfg.get_ints("dims")) : std::vector<std::size_t>{8, 8},
                 tasks, opt);
  } else if (paradigm == "shared") {
    s = shared_build(dim, tasks, opt);
  } else if (paradigm == "stem") {
    s = stem_build(dim, tasks, opt);
  } else if (paradigm == "ame") {
    s = ame_build(cfg.has("dims") ? to_sizes(cfg.get_ints("dims")) : std::vector<std::size_t>{4, 8, 16},
                  tasks, opt);
  } else if (paradigm == "stem_al") {
    const std::string main = cfg.get_string("main_task", tasks.front());
    std::vector<std::string> aux;
    for (const auto& t : tasks) {
      if (t != main) aux.push_back(t);
    }
    if (aux.size() + 1 != tasks.size()) throw ConfigError("stem_al: main_task is not a dataset task");
    s = stem_al_build(dim, main, aux, opt);
  } else {
    throw ConfigError("unknown paradigm '" + paradigm +
                      "' (expected single, me, shared, stem, ame, stem_al)");
  }
  s.mlp_scale = cfg.get_double("mlp_scale", 1.0);
  const bool temporal = cfg.get_bool("tim_temporal", true);
  for (auto& e : s.experts) e.temporal = temporal;
  return s;
}

TaskGroupMap::TaskGroupMap(std::vector<std::string> groups,
                           std::vector<std::pair<std::string, std::string>> types)
    : groups_(std::move(groups)) {
  if (groups_.empty()) throw ConfigError("task groups: at least one group is required");
  std::set<std::string> seen;
  for (auto& [type, group] : types) {
    if (!seen.insert(type).second) throw ConfigError("conversion type '" + type + "' mapped twice");
    const auto it = std::find(groups_.begin(), groups_.end(), group);
    if (it == groups_.end()) throw ConfigError("conversion type '" + type + "' maps to unknown group '" + group + "'");
    types_.emplace_back(type, static_cast<std::size_t>(it - groups_.begin()));
  }
  if (types_.size() < groups_.size()) {
    throw ConfigError("task groups: fewer conversion types than groups");
  }
}

std::size_t TaskGroupMap::tower_of(const std::string& type) const {
  for (const auto& [t, g] : types_) {
    if (t == type) return g;
  }
  throw ConfigError("conversion type '" + type + "' is not mapped to a task group");
}

TaskGroupMap TaskGroupMap::from_config(const Config& cfg) {
  std::vector<std::pair<std::string, std::string>> types;
  for (const auto& type : cfg.children("types")) {
    types.emplace_back(type, cfg.get_string("types." + type));
  }
  return TaskGroupMap(cfg.get_strings("groups"), std::move(types));
}

}  // namespace collapsar
