#pragma once

#include <algorithm>
#include <chrono>
#include <sstream>
#include <string>
#include <vector>

namespace collapsar::acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

/// Accumulates named checks; a criterion passes when every check does.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
    ++count_;
  }
  Outcome outcome(const std::string& summary) const {
    if (failures_.empty()) return {true, summary};
    std::string d = summary + "; failed: ";
    for (std::size_t i = 0; i < failures_.size() && i < 4; ++i) d += (i ? "; " : "") + failures_[i];
    if (failures_.size() > 4) d += "; +" + std::to_string(failures_.size() - 4) + " more";
    return {false, d};
  }

 private:
  std::vector<std::string> failures_;
  std::size_t count_ = 0;
};

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Outcome gradient_integrity();
Outcome mnse_fidelity();
Outcome information_abundance_properties();
Outcome collapse_mitigation();
Outcome multi_embedding_equivalence();
Outcome gradient_vanishing();
Outcome rew_calibration();
Outcome stem_routing();
Outcome entanglement_direction();
Outcome tim_temporal_structure();
Outcome mi_tool_correctness();
Outcome gp_thompson_sampling();
Outcome gwpfm_candidate_scoring();
Outcome delayed_feedback_scheduler();
Outcome cli_smoke();

}  // namespace collapsar::acceptance
