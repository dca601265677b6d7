#include "collapsar/analysis/report.hpp"

#include <fstream>

#include "collapsar/errors.hpp"

namespace collapsar {

std::string to_string(ReportKind k) {
  switch (k) {
    case ReportKind::spectrum: return "spectrum";
    case ReportKind::ia: return "ia";
    case ReportKind::mi: return "mi";
    case ReportKind::entangle: return "entangle";
  }
  return "?";
}

ReportKind parse_report_kind(const std::string& name) {
  if (name == "spectrum") return ReportKind::spectrum;
  if (name == "ia") return ReportKind::ia;
  if (name == "mi") return ReportKind::mi;
  if (name == "entangle") return ReportKind::entangle;
  throw ConfigError("unknown analysis kind '" + name + "' (expected spectrum, ia, mi, entangle)");
}

nlohmann::json Histogram::to_json() const { return {{"lo", lo}, {"hi", hi}, {"counts", counts}}; }

Histogram Histogram::from_json(const nlohmann::json& j) {
  Histogram h;
  h.lo = j.at("lo").get<double>();
  h.hi = j.at("hi").get<double>();
  h.counts = j.at("counts").get<std::vector<std::size_t>>();
  return h;
}

std::string Histogram::to_csv() const {
  std::string out = "bin_left,bin_right,count\n";
  const double w = bin_width();
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const nlohmann::json left = lo + w * static_cast<double>(i);
    const nlohmann::json right = lo + w * static_cast<double>(i + 1);
    out += left.dump() + "," + right.dump() + "," + std::to_string(counts[i]) + "\n";
  }
  return out;
}

nlohmann::json AnalysisReport::to_json() const {
  return {{"kind", to_string(kind)}, {"payload", payload}, {"provenance", provenance}};
}

AnalysisReport AnalysisReport::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind")) throw InputError("analysis report needs a kind");
  AnalysisReport r;
  r.kind = parse_report_kind(j.at("kind").get<std::string>());
  r.payload = j.value("payload", nlohmann::json::object());
  r.provenance = j.value("provenance", nlohmann::json::object());
  return r;
}

namespace {

bool is_histogram(const nlohmann::json& j) {
  return j.is_object() && j.contains("lo") && j.contains("hi") && j.contains("counts") && j["counts"].is_array();
}

void collect(const nlohmann::json& j, const std::string& path, const std::filesystem::path& dir) {
  if (is_histogram(j)) {
    std::ofstream out(dir / (path + ".csv"));
    if (!out) throw IoError("cannot write histogram " + path);
    out << Histogram::from_json(j).to_csv();
    return;
  }
  if (!j.is_object() && !j.is_array()) return;
  for (const auto& [key, value] : j.items()) collect(value, path.empty() ? key : path + "." + key, dir);
}

}  // namespace

void write_report(const AnalysisReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "report.json");
  if (!out) throw IoError("cannot write report in " + dir.string());
  out << report.to_json().dump(2) << '\n';
  collect(report.payload, "", dir);
}

}  // namespace collapsar
