#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "collapsar/config.hpp"

namespace collapsar {

enum class FieldKind { categorical, numeric, sequence, pretrained_embedding };

std::string_view to_string(FieldKind kind);
FieldKind parse_field_kind(std::string_view text);

struct FieldSchema {
  int field_id = 0;
  std::string name;
  FieldKind kind = FieldKind::categorical;
  /// Category count (categorical) or item vocabulary (sequence).
  std::int64_t cardinality = 0;
  int part_id = 0;
  int group_id = 0;
  /// Sequence fields only.
  std::size_t max_len = 0;
  /// Pre-trained embedding width.
  std::size_t dim = 0;
  /// Largest value a numeric field may take (sizes the numeral-system codes).
  std::int64_t max_value = 0;
};

/// Field declarations plus task names. Field ids are dense and equal to the
/// declaration order; part and group ids must be dense from 0.
class Schema {
 public:
  Schema() = default;
  Schema(std::vector<FieldSchema> fields, std::vector<std::string> tasks);

  /// Parses the structured-text form: a `tasks` list and one `fields.<name>`
  /// section per field with keys kind, cardinality, part, group, max_len,
  /// dim, max_value.
  static Schema from_config(const Config& cfg);
  static Schema load(const std::string& path);
  std::string to_yaml() const;

  const std::vector<FieldSchema>& fields() const noexcept { return fields_; }
  const FieldSchema& field(std::size_t i) const { return fields_.at(i); }
  const std::vector<std::string>& tasks() const noexcept { return tasks_; }
  std::size_t num_fields() const noexcept { return fields_.size(); }
  std::size_t num_tasks() const noexcept { return tasks_.size(); }

  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;
  std::optional<std::size_t> task_index(std::string_view name) const;

  int num_parts() const noexcept { return num_parts_; }
  int num_groups() const noexcept { return num_groups_; }

  friend bool operator==(const Schema& a, const Schema& b);

 private:
  void validate();

  std::vector<FieldSchema> fields_;
  std::vector<std::string> tasks_;
  int num_parts_ = 0;
  int num_groups_ = 0;
};

bool operator==(const FieldSchema& a, const FieldSchema& b);

}  // namespace collapsar
