#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "collapsar/config.hpp"

namespace collapsar::cli {

/// Flags shared by every subcommand.
struct RunOptions {
  std::string command;
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out;
};

/// One invocation: the resolved config, the seed and the output directory.
///
/// Precedence is defaults < config file < --set < dedicated flags. Relative
/// paths read from the config file resolve against the file's directory;
/// paths given on the command line resolve against the working directory.
class Run {
 public:
  /// `known` lists accepted keys with their defaults; `path_keys` are keys
  /// holding filesystem paths.
  Run(const RunOptions& opts, const Config& known, std::vector<std::string> path_keys = {});

  Config& config() noexcept { return cfg_; }
  const Config& config() const noexcept { return cfg_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::filesystem::path& out() const noexcept { return out_; }

  /// Sets a key from a dedicated flag; path keys resolve against the cwd.
  void set_flag(const std::string& key, const std::string& value);
  /// Absolute path for a path key; ConfigError when unset.
  std::filesystem::path path(const std::string& key) const;

  /// Creates the output directory and writes resolved_config.yaml and
  /// run.json. Call once the config is final.
  void begin();
  /// Path inside the output directory; rejects escapes.
  std::filesystem::path output(const std::string& relative) const;
  void write_json(const std::string& relative, const nlohmann::json& j) const;
  void write_text(const std::string& relative, const std::string& text) const;

 private:
  std::string command_;
  Config cfg_;
  std::vector<std::string> path_keys_;
  std::uint64_t seed_ = 0;
  std::filesystem::path out_;
};

/// Worker-thread cap from COLLAPSAR_THREADS (default 1); ConfigError on a
/// malformed value.
std::size_t thread_cap();

}  // namespace collapsar::cli
