#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <variant>
#include <vector>

#include "collapsar/data/schema.hpp"

namespace collapsar {

/// One element of a behavior sequence. Sequences are stored most recent
/// first, so position 0 is the behavior closest to the sample.
struct Behavior {
  std::int64_t item = 0;
  std::int64_t ts = 0;
  friend bool operator==(const Behavior&, const Behavior&) = default;
};

using BehaviorList = std::vector<Behavior>;
using EmbeddingValue = std::vector<double>;
/// category index | numeric value | behavior list | pre-trained vector
using FieldValue = std::variant<std::int64_t, double, BehaviorList, EmbeddingValue>;

struct Sample {
  std::vector<FieldValue> values;
  std::vector<std::uint8_t> labels;
  std::int64_t ts = 0;
  std::int64_t user_id = 0;
  std::int64_t ad_id = 0;
  std::optional<double> repeat_count;
  std::optional<double> last_repeat_gap;

  std::int64_t category(std::size_t field) const { return std::get<std::int64_t>(values[field]); }
  double numeric(std::size_t field) const { return std::get<double>(values[field]); }
  const BehaviorList& behaviors(std::size_t field) const {
    return std::get<BehaviorList>(values[field]);
  }
  const EmbeddingValue& embedding(std::size_t field) const {
    return std::get<EmbeddingValue>(values[field]);
  }

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Dataset {
  Schema schema;
  std::vector<Sample> samples;

  std::size_t size() const noexcept { return samples.size(); }
  const std::vector<std::string>& tasks() const noexcept { return schema.tasks(); }
  /// Throws InputError describing the first sample that violates the schema.
  void validate() const;
  /// Positive rate per task.
  std::vector<double> label_rates() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Checks one sample against the schema; returns an error message or empty.
std::string check_sample(const Schema& schema, const Sample& sample);

/// Loads a CSV with a header row. Reserved columns: ts (required), user_id,
/// ad_id, repeat_count, last_repeat_gap (optional), label_<task> (one per
/// task, required). Every other column must be a schema field. Sequences are
/// "item@ts;item@ts", pre-trained vectors are "x|y|z". Throws LoadError with
/// the 1-based line number.
Dataset load_dataset(const std::filesystem::path& data_path,
                     const std::filesystem::path& schema_path);
Dataset load_dataset(const std::filesystem::path& data_path, const Schema& schema);

/// Writes CSV in the layout `load_dataset` reads; values round-trip exactly.
void save_dataset(const Dataset& data, const std::filesystem::path& data_path);
/// CSV plus schema YAML next to each other.
void save_dataset(const Dataset& data, const std::filesystem::path& data_path,
                  const std::filesystem::path& schema_path);

/// Per-field means used in manifests: category index for categorical,
/// value for numeric, length for sequence, entry mean for embeddings.
std::vector<double> field_means(const Dataset& data);

}  // namespace collapsar
