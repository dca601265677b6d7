#include "collapsar/training/feedback.hpp"

#include <algorithm>
#include <cmath>

#include "collapsar/errors.hpp"
#include "collapsar/numerics/rng.hpp"

namespace collapsar {

void DelayedFeedbackConfig::validate() const {
  if (!(min_wait >= 0.0) || !(max_wait >= min_wait)) throw ConfigError("need 0 <= min_wait <= max_wait");
  if (!(threshold > 0.0)) throw ConfigError("scheduler threshold must be positive");
  if (!(eps >= 0.0)) throw ConfigError("scheduler eps must be >= 0");
}

DelayedFeedbackConfig DelayedFeedbackConfig::from_config(const Config& c) {
  DelayedFeedbackConfig cfg;
  cfg.min_wait = c.get_double("min_wait", cfg.min_wait);
  cfg.max_wait = c.get_double("max_wait", cfg.max_wait);
  cfg.threshold = c.get_double("threshold", cfg.threshold);
  cfg.eps = c.get_double("eps", cfg.eps);
  cfg.validate();
  return cfg;
}

double feedback_deviation(const FeedbackWindowStats& s, const DelayedFeedbackConfig& cfg) {
  if (s.window == 0) throw SchedulerError("feedback window is empty");
  if (!(s.variance >= 0.0)) throw SchedulerError("feedback variance must be >= 0");
  const double gap = s.observed_cvr - s.historical_cvr;
  return std::sqrt(gap * gap + s.variance) / (std::abs(s.historical_cvr) + cfg.eps);
}

double delayed_feedback_wait(const FeedbackWindowStats& s, const DelayedFeedbackConfig& cfg) {
  cfg.validate();
  const double z = std::clamp(feedback_deviation(s, cfg) / cfg.threshold, 0.0, 1.0);
  return cfg.min_wait + (cfg.max_wait - cfg.min_wait) * z;
}

FeedbackWindow::FeedbackWindow(std::size_t window, double historical_cvr)
    : window_(window), historical_(historical_cvr) {
  if (window == 0) throw ConfigError("feedback window must be positive");
}

void FeedbackWindow::push(double conversions, double clicks) {
  if (!(clicks > 0.0) || conversions < 0.0) throw InputError("feedback interval needs clicks > 0, conversions >= 0");
  cvr_.push_back(conversions / clicks);
  conversions_.push_back(conversions);
  clicks_.push_back(clicks);
  if (cvr_.size() > window_) {
    cvr_.pop_front();
    conversions_.pop_front();
    clicks_.pop_front();
  }
}

FeedbackWindowStats FeedbackWindow::stats() const {
  FeedbackWindowStats s;
  s.window = cvr_.size();
  s.historical_cvr = historical_;
  if (cvr_.empty()) return s;
  double conv = 0.0;
  double clicks = 0.0;
  for (std::size_t i = 0; i < cvr_.size(); ++i) {
    conv += conversions_[i];
    clicks += clicks_[i];
  }
  s.observed_cvr = conv / clicks;
  double mean = 0.0;
  for (double c : cvr_) mean += c;
  mean /= static_cast<double>(cvr_.size());
  double var = 0.0;
  for (double c : cvr_) var += (c - mean) * (c - mean);
  s.variance = var / static_cast<double>(cvr_.size());
  return s;
}

FeedbackStreamConfig FeedbackStreamConfig::from_config(const Config& c) {
  FeedbackStreamConfig s;
  s.intervals = static_cast<std::size_t>(c.get_int("intervals", static_cast<std::int64_t>(s.intervals)));
  s.clicks_per_interval = c.get_double("clicks_per_interval", s.clicks_per_interval);
  s.cvr = c.get_double("cvr", s.cvr);
  s.window = static_cast<std::size_t>(c.get_int("window", static_cast<std::int64_t>(s.window)));
  s.burst_factor = c.get_double("burst_factor", s.burst_factor);
  s.burst_start = static_cast<std::size_t>(c.get_int("burst_start", 0));
  s.burst_end = static_cast<std::size_t>(c.get_int("burst_end", 0));
  s.deterministic = c.get_bool("deterministic", false);
  if (!(s.cvr > 0.0 && s.cvr < 1.0)) throw ConfigError("stream cvr must lie in (0, 1)");
  if (!(s.clicks_per_interval >= 1.0)) throw ConfigError("clicks_per_interval must be >= 1");
  if (!(s.burst_factor >= 0.0)) throw ConfigError("burst_factor must be >= 0");
  return s;
}

nlohmann::json FeedbackTrace::to_json() const {
  return {{"observed_cvr", observed_cvr}, {"variance", variance}, {"deviation", deviation}, {"wait", wait}};
}

FeedbackTrace simulate_feedback(const FeedbackStreamConfig& stream, const DelayedFeedbackConfig& cfg,
                                std::uint64_t seed) {
  cfg.validate();
  Rng rng = Rng(seed).fork(0x6664ULL);
  FeedbackWindow window(stream.window, stream.cvr);
  FeedbackTrace trace;
  const auto clicks = static_cast<std::size_t>(std::llround(stream.clicks_per_interval));
  for (std::size_t t = 0; t < stream.intervals; ++t) {
    const bool burst = t >= stream.burst_start && t < stream.burst_end;
    const double p = std::min(1.0, stream.cvr * (burst ? stream.burst_factor : 1.0));
    double conv = 0.0;
    if (stream.deterministic) {
      conv = p * static_cast<double>(clicks);
    } else {
      for (std::size_t c = 0; c < clicks; ++c) conv += rng.bernoulli(p) ? 1.0 : 0.0;
    }
    window.push(conv, static_cast<double>(clicks));
    const auto s = window.stats();
    trace.observed_cvr.push_back(s.observed_cvr);
    trace.variance.push_back(s.variance);
    trace.deviation.push_back(feedback_deviation(s, cfg));
    trace.wait.push_back(delayed_feedback_wait(s, cfg));
  }
  return trace;
}

}  // namespace collapsar
