#pragma once

#include <cstddef>
#include <deque>
#include <nlohmann/json.hpp>
#include <vector>

#include "collapsar/config.hpp"

namespace collapsar {

/// Rolling conversion statistics over the last `window` reporting intervals.
struct FeedbackWindowStats {
  double observed_cvr = 0.0;
  double historical_cvr = 0.0;
  /// Variance of the per-interval CVR inside the window.
  double variance = 0.0;
  std::size_t window = 0;
};

struct DelayedFeedbackConfig {
  double min_wait = 60.0;
  double max_wait = 3600.0;
  /// Relative deviation at which the wait saturates.
  double threshold = 0.5;
  double eps = 1e-9;

  void validate() const;
  static DelayedFeedbackConfig from_config(const Config& cfg);
};

/// Relative deviation D = sqrt((obs - hist)^2 + variance) / (hist + eps).
double feedback_deviation(const FeedbackWindowStats& stats, const DelayedFeedbackConfig& cfg);

/// min_wait + (max_wait - min_wait) * clamp(D / threshold, 0, 1).
/// Throws SchedulerError on an empty window.
double delayed_feedback_wait(const FeedbackWindowStats& stats, const DelayedFeedbackConfig& cfg);

/// Sliding window of (conversions, clicks) per reporting interval.
class FeedbackWindow {
 public:
  FeedbackWindow(std::size_t window, double historical_cvr);

  void push(double conversions, double clicks);
  std::size_t size() const noexcept { return cvr_.size(); }
  FeedbackWindowStats stats() const;

 private:
  std::size_t window_;
  double historical_;
  std::deque<double> cvr_;
  std::deque<double> conversions_;
  std::deque<double> clicks_;
};

/// Synthetic reporting stream: Binomial(clicks, cvr) conversions per
/// interval, with the CVR multiplied by `burst_factor` inside
/// [burst_start, burst_end).
struct FeedbackStreamConfig {
  std::size_t intervals = 200;
  double clicks_per_interval = 2000.0;
  double cvr = 0.05;
  std::size_t window = 12;
  double burst_factor = 1.0;
  std::size_t burst_start = 0;
  std::size_t burst_end = 0;
  /// Zero variance: conversions are exactly cvr * clicks every interval.
  bool deterministic = false;

  static FeedbackStreamConfig from_config(const Config& cfg);
};

struct FeedbackTrace {
  std::vector<double> observed_cvr;
  std::vector<double> variance;
  std::vector<double> deviation;
  std::vector<double> wait;

  nlohmann::json to_json() const;
};

FeedbackTrace simulate_feedback(const FeedbackStreamConfig& stream, const DelayedFeedbackConfig& cfg,
                                std::uint64_t seed);

}  // namespace collapsar
