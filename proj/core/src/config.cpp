#include "collapsar/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <sstream>

#include "collapsar/errors.hpp"
#include "collapsar/util/text.hpp"

namespace collapsar {

namespace {

void flatten(const YAML::Node& node, const std::string& prefix, Config& out) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
      if (!prefix.empty()) out.set(prefix, "");
      break;
    case YAML::NodeType::Scalar:
      out.set(prefix, node.Scalar());
      break;
    case YAML::NodeType::Sequence: {
      bool scalars = true;
      for (const auto& item : node) scalars = scalars && item.IsScalar();
      if (scalars) {
        std::vector<std::string> parts;
        for (const auto& item : node) parts.push_back(item.Scalar());
        out.set(prefix, join(parts, ","));
      } else {
        std::size_t i = 0;
        for (const auto& item : node) {
          flatten(item, prefix + "." + std::to_string(i++), out);
        }
      }
      break;
    }
    case YAML::NodeType::Map:
      for (const auto& kv : node) {
        const std::string key = kv.first.as<std::string>();
        flatten(kv.second, prefix.empty() ? key : prefix + "." + key, out);
      }
      break;
    case YAML::NodeType::Undefined:
      break;
  }
}

template <typename F>
auto convert(const std::string& key, const std::string& raw, F&& f) {
  try {
    return f(raw);
  } catch (const InputError& e) {
    throw ConfigError("key '" + key + "': " + e.what());
  }
}

}  // namespace

Config Config::from_string(const std::string& text) {
  Config cfg;
  try {
    flatten(YAML::Load(text), "", cfg);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return cfg;
}

Config Config::from_file(const std::filesystem::path& path) {
  Config cfg;
  try {
    flatten(YAML::LoadFile(path.string()), "", cfg);
  } catch (const YAML::BadFile&) {
    throw ConfigError("cannot open config " + path.string());
  } catch (const YAML::Exception& e) {
    throw ConfigError(path.string() + ": malformed config: " + e.what());
  }
  return cfg;
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must look like key=value: '" + assignment + "'");
  }
  set(std::string(trim(assignment.substr(0, eq))),
      std::string(trim(assignment.substr(eq + 1))));
}

void Config::set(const std::string& key, std::string value) {
  if (auto it = index_.find(key); it != index_.end()) {
    entries_[it->second].second = std::move(value);
    return;
  }
  index_.emplace(key, entries_.size());
  entries_.emplace_back(key, std::move(value));
}

void Config::erase(const std::string& key) {
  auto it = index_.find(key);
  if (it == index_.end()) return;
  entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(it->second));
  index_.clear();
  for (std::size_t i = 0; i < entries_.size(); ++i) index_.emplace(entries_[i].first, i);
}

const std::string& Config::require(const std::string& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) throw ConfigError("missing config key '" + key + "'");
  return entries_[it->second].second;
}

std::string Config::get_string(const std::string& key) const { return require(key); }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? require(key) : fallback;
}

double Config::get_double(const std::string& key) const {
  return convert(key, require(key), [](const std::string& s) { return parse_double(s); });
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::int64_t Config::get_int(const std::string& key) const {
  return convert(key, require(key), [](const std::string& s) { return parse_int(s); });
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool Config::get_bool(const std::string& key) const {
  return convert(key, require(key), [](const std::string& s) { return parse_bool(s); });
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}

std::vector<std::string> Config::get_strings(const std::string& key) const {
  const std::string& raw = require(key);
  std::vector<std::string> out;
  if (trim(raw).empty()) return out;
  for (const auto& part : split(raw, ',')) out.emplace_back(trim(part));
  return out;
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : get_strings(key))
    out.push_back(convert(key, s, [](const std::string& v) { return parse_double(v); }));
  return out;
}

std::vector<std::int64_t> Config::get_ints(const std::string& key) const {
  std::vector<std::int64_t> out;
  for (const auto& s : get_strings(key))
    out.push_back(convert(key, s, [](const std::string& v) { return parse_int(v); }));
  return out;
}

Config Config::subtree(const std::string& prefix) const {
  Config out;
  const std::string p = prefix + ".";
  for (const auto& [k, v] : entries_)
    if (k.rfind(p, 0) == 0) out.set(k.substr(p.size()), v);
  return out;
}

std::vector<std::string> Config::children(const std::string& prefix) const {
  std::vector<std::string> out;
  const std::string p = prefix + ".";
  for (const auto& [k, v] : entries_) {
    if (k.rfind(p, 0) != 0) continue;
    const std::string rest = k.substr(p.size());
    const std::string head = rest.substr(0, rest.find('.'));
    if (std::find(out.begin(), out.end(), head) == out.end()) out.push_back(head);
  }
  return out;
}

void Config::merge_defaults(const Config& defaults) {
  for (const auto& [k, v] : defaults.entries_)
    if (!has(k)) set(k, v);
}

void Config::reject_unknown(const Config& known) const {
  for (const auto& [k, v] : entries_)
    if (!known.has(k)) throw ConfigError("unknown config key '" + k + "'");
}

std::string Config::to_yaml() const {
  YAML::Emitter emitter;
  emitter << YAML::BeginMap;
  for (const auto& [k, v] : entries_) {
    emitter << YAML::Key << k << YAML::Value << YAML::DoubleQuoted << v;
  }
  emitter << YAML::EndMap;
  return std::string(emitter.c_str()) + "\n";
}

}  // namespace collapsar
