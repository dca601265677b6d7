#include "collapsar/data/dataset.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include "collapsar/errors.hpp"
#include "collapsar/util/text.hpp"

namespace collapsar {

namespace {

constexpr std::string_view kLabelPrefix = "label_";

enum class Column { field, ts, user_id, ad_id, repeat_count, last_repeat_gap, label };

struct ColumnBinding {
  Column kind;
  std::size_t index = 0;  // field or task index
};

FieldValue parse_value(const FieldSchema& f, std::string_view cell) {
  switch (f.kind) {
    case FieldKind::categorical:
      return parse_int(cell);
    case FieldKind::numeric:
      return parse_double(cell);
    case FieldKind::sequence: {
      BehaviorList out;
      cell = trim(cell);
      if (cell.empty()) return out;
      for (const auto& item : split(cell, ';')) {
        const auto at = item.find('@');
        if (at == std::string::npos) throw InputError("malformed behavior '" + item + "'");
        out.push_back({parse_int(std::string_view(item).substr(0, at)),
                       parse_int(std::string_view(item).substr(at + 1))});
      }
      return out;
    }
    case FieldKind::pretrained_embedding: {
      EmbeddingValue out;
      for (const auto& item : split(trim(cell), '|')) out.push_back(parse_double(item));
      return out;
    }
  }
  throw InputError("unreachable field kind");
}

std::string format_value(const FieldValue& value) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(v);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(v);
        } else if constexpr (std::is_same_v<T, BehaviorList>) {
          std::string s;
          for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) s += ';';
            s += std::to_string(v[i].item) + "@" + std::to_string(v[i].ts);
          }
          return s;
        } else {
          std::string s;
          for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) s += '|';
            s += format_double(v[i]);
          }
          return s;
        }
      },
      value);
}

}  // namespace

std::string check_sample(const Schema& schema, const Sample& s) {
  if (s.values.size() != schema.num_fields()) return "wrong number of field values";
  if (s.labels.size() != schema.num_tasks()) return "wrong number of labels";
  for (auto y : s.labels)
    if (y > 1) return "label outside {0,1}";
  for (std::size_t i = 0; i < schema.num_fields(); ++i) {
    const auto& f = schema.field(i);
    const auto& v = s.values[i];
    switch (f.kind) {
      case FieldKind::categorical: {
        if (!std::holds_alternative<std::int64_t>(v)) return "field '" + f.name + "' type mismatch";
        const auto c = std::get<std::int64_t>(v);
        if (c < 0 || c >= f.cardinality) {
          return "field '" + f.name + "' index " + std::to_string(c) + " outside [0, " +
                 std::to_string(f.cardinality) + ")";
        }
        break;
      }
      case FieldKind::numeric:
        if (!std::holds_alternative<double>(v) || !std::isfinite(std::get<double>(v)))
          return "field '" + f.name + "' is not a finite number";
        break;
      case FieldKind::sequence: {
        if (!std::holds_alternative<BehaviorList>(v)) return "field '" + f.name + "' type mismatch";
        const auto& seq = std::get<BehaviorList>(v);
        if (seq.size() > f.max_len) return "field '" + f.name + "' longer than max_len";
        for (const auto& b : seq) {
          if (b.item < 0 || b.item >= f.cardinality)
            return "field '" + f.name + "' item " + std::to_string(b.item) + " out of range";
          if (b.ts > s.ts) return "field '" + f.name + "' behavior after the sample timestamp";
        }
        break;
      }
      case FieldKind::pretrained_embedding: {
        if (!std::holds_alternative<EmbeddingValue>(v)) return "field '" + f.name + "' type mismatch";
        const auto& e = std::get<EmbeddingValue>(v);
        if (e.size() != f.dim) return "field '" + f.name + "' has wrong dimension";
        for (double x : e)
          if (!std::isfinite(x)) return "field '" + f.name + "' has non-finite entries";
        break;
      }
    }
  }
  return {};
}

void Dataset::validate() const {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (auto msg = check_sample(schema, samples[i]); !msg.empty()) {
      throw InputError("sample " + std::to_string(i) + ": " + msg);
    }
  }
}

std::vector<double> Dataset::label_rates() const {
  std::vector<double> rates(schema.num_tasks(), 0.0);
  if (samples.empty()) return rates;
  for (const auto& s : samples)
    for (std::size_t t = 0; t < rates.size(); ++t) rates[t] += s.labels[t];
  for (double& r : rates) r /= static_cast<double>(samples.size());
  return rates;
}

Dataset load_dataset(const std::filesystem::path& data_path,
                     const std::filesystem::path& schema_path) {
  return load_dataset(data_path, Schema::load(schema_path.string()));
}

Dataset load_dataset(const std::filesystem::path& data_path, const Schema& schema) {
  std::ifstream in(data_path);
  if (!in) throw LoadError(0, "cannot open " + data_path.string());
  Dataset data;
  data.schema = schema;

  std::string line;
  if (!std::getline(in, line)) throw LoadError(1, "missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<ColumnBinding> columns;
  std::vector<bool> field_seen(schema.num_fields(), false);
  std::vector<bool> task_seen(schema.num_tasks(), false);
  bool ts_seen = false;
  for (const auto& raw : split(line, ',')) {
    const std::string name(trim(raw));
    if (name == "ts") {
      columns.push_back({Column::ts});
      ts_seen = true;
    } else if (name == "user_id") {
      columns.push_back({Column::user_id});
    } else if (name == "ad_id") {
      columns.push_back({Column::ad_id});
    } else if (name == "repeat_count") {
      columns.push_back({Column::repeat_count});
    } else if (name == "last_repeat_gap") {
      columns.push_back({Column::last_repeat_gap});
    } else if (name.rfind(kLabelPrefix, 0) == 0) {
      const auto task = schema.task_index(name.substr(kLabelPrefix.size()));
      if (!task) throw LoadError(1, "unknown task column '" + name + "'");
      columns.push_back({Column::label, *task});
      task_seen[*task] = true;
    } else {
      const auto field = schema.find(name);
      if (!field) throw LoadError(1, "unknown column '" + name + "'");
      if (field_seen[*field]) throw LoadError(1, "duplicate column '" + name + "'");
      columns.push_back({Column::field, *field});
      field_seen[*field] = true;
    }
  }
  if (!ts_seen) throw LoadError(1, "missing 'ts' column");
  for (std::size_t i = 0; i < field_seen.size(); ++i)
    if (!field_seen[i]) throw LoadError(1, "missing column for field '" + schema.field(i).name + "'");
  for (std::size_t i = 0; i < task_seen.size(); ++i)
    if (!task_seen[i]) throw LoadError(1, "missing label column for task '" + schema.tasks()[i] + "'");

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != columns.size()) {
      throw LoadError(lineno, "expected " + std::to_string(columns.size()) + " cells, got " +
                                  std::to_string(cells.size()));
    }
    Sample s;
    s.values.resize(schema.num_fields());
    s.labels.assign(schema.num_tasks(), 0);
    try {
      for (std::size_t c = 0; c < cells.size(); ++c) {
        const auto& cell = cells[c];
        switch (columns[c].kind) {
          case Column::field:
            s.values[columns[c].index] = parse_value(schema.field(columns[c].index), cell);
            break;
          case Column::ts: s.ts = parse_int(cell); break;
          case Column::user_id: s.user_id = parse_int(cell); break;
          case Column::ad_id: s.ad_id = parse_int(cell); break;
          case Column::repeat_count:
            if (!trim(cell).empty()) s.repeat_count = parse_double(cell);
            break;
          case Column::last_repeat_gap:
            if (!trim(cell).empty()) s.last_repeat_gap = parse_double(cell);
            break;
          case Column::label: {
            const auto y = parse_int(cell);
            if (y != 0 && y != 1) throw InputError("label must be 0 or 1");
            s.labels[columns[c].index] = static_cast<std::uint8_t>(y);
            break;
          }
        }
      }
    } catch (const InputError& e) {
      throw LoadError(lineno, e.what());
    }
    if (auto msg = check_sample(schema, s); !msg.empty()) throw LoadError(lineno, msg);
    data.samples.push_back(std::move(s));
  }
  return data;
}

void save_dataset(const Dataset& data, const std::filesystem::path& data_path) {
  std::ofstream out(data_path);
  if (!out) throw IoError("cannot write " + data_path.string());
  const auto& schema = data.schema;
  out << "ts,user_id,ad_id,repeat_count,last_repeat_gap";
  for (const auto& t : schema.tasks()) out << ',' << kLabelPrefix << t;
  for (const auto& f : schema.fields()) out << ',' << f.name;
  out << '\n';
  for (const auto& s : data.samples) {
    out << s.ts << ',' << s.user_id << ',' << s.ad_id << ',';
    if (s.repeat_count) out << format_double(*s.repeat_count);
    out << ',';
    if (s.last_repeat_gap) out << format_double(*s.last_repeat_gap);
    for (auto y : s.labels) out << ',' << static_cast<int>(y);
    for (const auto& v : s.values) out << ',' << format_value(v);
    out << '\n';
  }
}

void save_dataset(const Dataset& data, const std::filesystem::path& data_path,
                  const std::filesystem::path& schema_path) {
  save_dataset(data, data_path);
  std::ofstream out(schema_path);
  if (!out) throw IoError("cannot write " + schema_path.string());
  out << data.schema.to_yaml();
}

std::vector<double> field_means(const Dataset& data) {
  const auto& schema = data.schema;
  std::vector<double> sums(schema.num_fields(), 0.0);
  std::vector<double> counts(schema.num_fields(), 0.0);
  for (const auto& s : data.samples) {
    for (std::size_t i = 0; i < schema.num_fields(); ++i) {
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::int64_t>) {
              sums[i] += static_cast<double>(v);
              counts[i] += 1.0;
            } else if constexpr (std::is_same_v<T, double>) {
              sums[i] += v;
              counts[i] += 1.0;
            } else if constexpr (std::is_same_v<T, BehaviorList>) {
              sums[i] += static_cast<double>(v.size());
              counts[i] += 1.0;
            } else {
              for (double x : v) sums[i] += x;
              counts[i] += static_cast<double>(v.size());
            }
          },
          s.values[i]);
    }
  }
  for (std::size_t i = 0; i < sums.size(); ++i) sums[i] = counts[i] > 0 ? sums[i] / counts[i] : 0.0;
  return sums;
}

}  // namespace collapsar
