#include "run.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>

#include "collapsar/errors.hpp"

namespace collapsar::cli {

namespace fs = std::filesystem;

namespace {

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

std::string absolute_from(const fs::path& base, const std::string& value) {
  if (value.empty()) return value;
  const fs::path p(value);
  return (p.is_absolute() ? p : base / p).lexically_normal().string();
}

std::uint64_t parse_seed(const std::string& text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    throw ConfigError("seed must be a non-negative integer, got '" + text + "'");
  }
  return v;
}

}  // namespace

Run::Run(const RunOptions& opts, const Config& known, std::vector<std::string> path_keys)
    : command_(opts.command), path_keys_(std::move(path_keys)) {
  const fs::path cwd = fs::current_path();
  if (!opts.config_path.empty()) {
    const fs::path file = fs::absolute(opts.config_path);
    if (!fs::exists(file)) throw ConfigError("config file not found: " + opts.config_path);
    cfg_ = Config::from_file(file);
    for (const auto& key : path_keys_) {
      if (cfg_.has(key)) cfg_.set(key, absolute_from(file.parent_path(), cfg_.get_string(key)));
    }
  }
  for (const auto& assignment : opts.overrides) {
    cfg_.apply_override(assignment);
    const auto key = assignment.substr(0, assignment.find('='));
    if (contains(path_keys_, key)) cfg_.set(key, absolute_from(cwd, cfg_.get_string(key)));
  }
  cfg_.reject_unknown(known);
  for (const auto& [key, value] : known.entries()) {
    if (!value.empty() && !cfg_.has(key)) cfg_.set(key, value);
  }
  seed_ = opts.seed ? *opts.seed : (cfg_.has("seed") ? parse_seed(cfg_.get_string("seed")) : 0);
  cfg_.set("seed", std::to_string(seed_));
  if (!opts.out.empty()) out_ = fs::absolute(opts.out).lexically_normal();
}

void Run::set_flag(const std::string& key, const std::string& value) {
  cfg_.set(key, contains(path_keys_, key) ? absolute_from(fs::current_path(), value) : value);
}

fs::path Run::path(const std::string& key) const {
  if (!cfg_.has(key) || cfg_.get_string(key).empty()) {
    throw ConfigError("'" + key + "' is required for " + command_);
  }
  return cfg_.get_string(key);
}

void Run::begin() {
  if (out_.empty()) throw ConfigError(command_ + " needs --out");
  fs::create_directories(out_);
  write_text("resolved_config.yaml", cfg_.to_yaml());
  write_json("run.json", {{"command", command_},
                          {"seed", seed_},
                          {"threads", thread_cap()},
                          {"config", "resolved_config.yaml"}});
}

fs::path Run::output(const std::string& relative) const {
  const fs::path rel = fs::path(relative).lexically_normal();
  if (rel.empty() || rel.is_absolute() || *rel.begin() == "..") {
    throw IoError("refusing to write outside the output directory: " + relative);
  }
  const fs::path full = out_ / rel;
  fs::create_directories(full.parent_path());
  return full;
}

void Run::write_json(const std::string& relative, const nlohmann::json& j) const {
  write_text(relative, j.dump(2) + "\n");
}

void Run::write_text(const std::string& relative, const std::string& text) const {
  const fs::path p = output(relative);
  std::ofstream f(p);
  if (!f) throw IoError("cannot write " + p.string());
  f << text;
  if (!f) throw IoError("write failed: " + p.string());
}

std::size_t thread_cap() {
  const char* env = std::getenv("COLLAPSAR_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  const std::string text(env);
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || v == 0) {
    throw ConfigError("COLLAPSAR_THREADS must be a positive integer, got '" + text + "'");
  }
  return v;
}

}  // namespace collapsar::cli
