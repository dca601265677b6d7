#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "collapsar/config.hpp"
#include "collapsar/exploration/gp.hpp"

namespace collapsar {

enum class BanditPolicy { ts, epsilon_greedy, greedy };

std::string to_string(BanditPolicy p);
BanditPolicy parse_bandit_policy(const std::string& name);

/// Arms are one-hot feature vectors for the GP; the value for each arm is its
/// true click probability.
struct BanditConfig {
  std::vector<double> arms{0.02, 0.04, 0.06, 0.08, 0.10};
  std::size_t rounds = 2000;
  double epsilon = 0.1;
  KernelConfig kernel{2.0, 9.0};

  void validate() const;
  static BanditConfig from_config(const Config& cfg);
  nlohmann::json to_json() const;
};

struct BanditTrace {
  BanditPolicy policy = BanditPolicy::ts;
  /// Expected regret sum_t (p_best - p_chosen), cumulative per round.
  std::vector<double> cumulative_regret;
  std::vector<std::size_t> pulls;
  std::vector<std::size_t> clicks;

  double final_regret() const { return cumulative_regret.empty() ? 0.0 : cumulative_regret.back(); }
  nlohmann::json to_json() const;
};

/// Greedy choices use the empirical CTR, with untried arms pulled first and
/// ties going to the lowest index. Deterministic per seed.
BanditTrace bandit_simulate(const BanditConfig& cfg, BanditPolicy policy, std::uint64_t seed);

}  // namespace collapsar
