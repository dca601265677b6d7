#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

namespace collapsar {

/// Fixed-width bins over [lo, hi].
struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> counts;

  double bin_width() const { return counts.empty() ? 0.0 : (hi - lo) / static_cast<double>(counts.size()); }
  nlohmann::json to_json() const;
  static Histogram from_json(const nlohmann::json& j);
  /// bin_left,bin_right,count rows with a header.
  std::string to_csv() const;
};

enum class ReportKind { spectrum, ia, mi, entangle };

std::string to_string(ReportKind k);
ReportKind parse_report_kind(const std::string& name);

struct AnalysisReport {
  ReportKind kind = ReportKind::ia;
  nlohmann::json payload = nlohmann::json::object();
  /// Dataset/model ids, seed and anything else needed to reproduce the run.
  nlohmann::json provenance = nlohmann::json::object();

  nlohmann::json to_json() const;
  static AnalysisReport from_json(const nlohmann::json& j);
  friend bool operator==(const AnalysisReport&, const AnalysisReport&) = default;
};

/// Writes report.json and, for every payload entry holding a histogram
/// (an object with "lo", "hi", "counts"), a CSV named after its JSON path
/// (array elements contribute their index).
void write_report(const AnalysisReport& report, const std::filesystem::path& dir);

}  // namespace collapsar
