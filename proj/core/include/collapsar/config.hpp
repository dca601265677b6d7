#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace collapsar {

/// Structured-text (YAML) configuration flattened to dotted keys.
///
/// Nested maps become "a.b.c"; sequences of scalars become a single
/// comma-joined value ("4,8,16"); sequences of maps are indexed
/// ("fields.0.name"). Entry order follows the source document, which is
/// what schema files rely on for field ids. Overrides use the same dotted
/// keys, so `--set model.table_sizes=4,8,16` behaves like the file form.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::filesystem::path& path);
  static Config from_string(const std::string& text);

  /// Applies "key=value"; throws ConfigError on a malformed assignment.
  void apply_override(const std::string& assignment);
  void set(const std::string& key, std::string value);
  void erase(const std::string& key);

  bool has(const std::string& key) const { return index_.count(key) != 0; }
  bool empty() const { return entries_.empty(); }
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_strings(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<std::int64_t> get_ints(const std::string& key) const;

  /// Entries under "prefix." with the prefix stripped.
  Config subtree(const std::string& prefix) const;
  /// Distinct first path components under "prefix.", in document order.
  std::vector<std::string> children(const std::string& prefix) const;

  /// Copies every entry of `defaults` that is missing here.
  void merge_defaults(const Config& defaults);
  /// Throws ConfigError naming the first key not present in `known`.
  void reject_unknown(const Config& known) const;

  /// Flat "key: value" YAML; `from_string(to_yaml())` reproduces the entries.
  std::string to_yaml() const;

 private:
  const std::string& require(const std::string& key) const;

  std::vector<std::pair<std::string, std::string>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace collapsar
