#include "collapsar/data/schema.hpp"

#include <algorithm>
#include <set>

#include "collapsar/errors.hpp"

namespace collapsar {

std::string_view to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::categorical: return "categorical";
    case FieldKind::numeric: return "numeric";
    case FieldKind::sequence: return "sequence";
    case FieldKind::pretrained_embedding: return "pretrained_embedding";
  }
  return "unknown";
}

FieldKind parse_field_kind(std::string_view text) {
  if (text == "categorical") return FieldKind::categorical;
  if (text == "numeric") return FieldKind::numeric;
  if (text == "sequence") return FieldKind::sequence;
  if (text == "pretrained_embedding") return FieldKind::pretrained_embedding;
  throw ConfigError("unknown field kind '" + std::string(text) + "'");
}

bool operator==(const FieldSchema& a, const FieldSchema& b) {
  return a.field_id == b.field_id && a.name == b.name && a.kind == b.kind &&
         a.cardinality == b.cardinality && a.part_id == b.part_id &&
         a.group_id == b.group_id && a.max_len == b.max_len && a.dim == b.dim &&
         a.max_value == b.max_value;
}

bool operator==(const Schema& a, const Schema& b) {
  return a.fields_ == b.fields_ && a.tasks_ == b.tasks_;
}

Schema::Schema(std::vector<FieldSchema> fields, std::vector<std::string> tasks)
    : fields_(std::move(fields)), tasks_(std::move(tasks)) {
  validate();
}

void Schema::validate() {
  std::set<std::string> names;
  std::set<int> parts;
  std::set<int> groups;
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    auto& f = fields_[i];
    f.field_id = static_cast<int>(i);
    if (f.name.empty()) throw ConfigError("field " + std::to_string(i) + " has no name");
    if (!names.insert(f.name).second) throw ConfigError("duplicate field '" + f.name + "'");
    switch (f.kind) {
      case FieldKind::categorical:
        if (f.cardinality < 1) throw ConfigError("field '" + f.name + "' needs cardinality >= 1");
        break;
      case FieldKind::sequence:
        if (f.cardinality < 1 || f.max_len < 1) {
          throw ConfigError("sequence field '" + f.name + "' needs cardinality and max_len");
        }
        break;
      case FieldKind::pretrained_embedding:
        if (f.dim < 1) throw ConfigError("embedding field '" + f.name + "' needs dim >= 1");
        break;
      case FieldKind::numeric:
        if (f.max_value < 0) throw ConfigError("numeric field '" + f.name + "' has max_value < 0");
        break;
    }
    if (f.part_id < 0 || f.group_id < 0) {
      throw ConfigError("field '" + f.name + "' has a negative part or group");
    }
    parts.insert(f.part_id);
    groups.insert(f.group_id);
  }
  auto dense = [](const std::set<int>& ids) {
    int expect = 0;
    for (int id : ids)
      if (id != expect++) return false;
    return true;
  };
  if (!dense(parts)) throw ConfigError("part ids must be dense from 0");
  if (!dense(groups)) throw ConfigError("group ids must be dense from 0");
  num_parts_ = static_cast<int>(parts.size());
  num_groups_ = static_cast<int>(groups.size());
  std::set<std::string> task_names(tasks_.begin(), tasks_.end());
  if (task_names.size() != tasks_.size()) throw ConfigError("duplicate task names");
}

Schema Schema::from_config(const Config& cfg) {
  std::vector<FieldSchema> fields;
  for (const auto& name : cfg.children("fields")) {
    const Config f = cfg.subtree("fields." + name);
    FieldSchema fs;
    fs.name = name;
    fs.kind = parse_field_kind(f.get_string("kind"));
    fs.cardinality = f.get_int("cardinality", 0);
    fs.part_id = static_cast<int>(f.get_int("part", 0));
    fs.group_id = static_cast<int>(f.get_int("group", 0));
    fs.max_len = static_cast<std::size_t>(f.get_int("max_len", 0));
    fs.dim = static_cast<std::size_t>(f.get_int("dim", 0));
    if (fs.kind == FieldKind::numeric) fs.max_value = f.get_int("max_value", (1 << 20) - 1);
    static const std::set<std::string> known = {"kind",     "cardinality", "part",     "group",
                                                "max_len",  "dim",         "max_value"};
    for (const auto& [k, v] : f.entries())
      if (!known.count(k)) throw ConfigError("field '" + name + "': unknown key '" + k + "'");
    fields.push_back(std::move(fs));
  }
  std::vector<std::string> tasks = cfg.has("tasks") ? cfg.get_strings("tasks")
                                                    : std::vector<std::string>{};
  return Schema(std::move(fields), std::move(tasks));
}

Schema Schema::load(const std::string& path) { return from_config(Config::from_file(path)); }

std::string Schema::to_yaml() const {
  std::string out = "tasks: [";
  for (std::size_t i = 0; i < tasks_.size(); ++i) out += (i ? ", " : "") + tasks_[i];
  out += "]\nfields:\n";
  for (const auto& f : fields_) {
    out += "  " + f.name + ":\n";
    out += "    kind: " + std::string(to_string(f.kind)) + "\n";
    if (f.kind == FieldKind::categorical || f.kind == FieldKind::sequence)
      out += "    cardinality: " + std::to_string(f.cardinality) + "\n";
    out += "    part: " + std::to_string(f.part_id) + "\n";
    out += "    group: " + std::to_string(f.group_id) + "\n";
    if (f.kind == FieldKind::sequence) out += "    max_len: " + std::to_string(f.max_len) + "\n";
    if (f.kind == FieldKind::pretrained_embedding)
      out += "    dim: " + std::to_string(f.dim) + "\n";
    if (f.kind == FieldKind::numeric)
      out += "    max_value: " + std::to_string(f.max_value) + "\n";
  }
  return out;
}

std::optional<std::size_t> Schema::find(std::string_view name) const {
  for (std::size_t i = 0; i < fields_.size(); ++i)
    if (fields_[i].name == name) return i;
  return std::nullopt;
}

std::size_t Schema::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw ConfigError("unknown field '" + std::string(name) + "'");
}

std::optional<std::size_t> Schema::task_index(std::string_view name) const {
  for (std::size_t i = 0; i < tasks_.size(); ++i)
    if (tasks_[i] == name) return i;
  return std::nullopt;
}

}  // namespace collapsar
