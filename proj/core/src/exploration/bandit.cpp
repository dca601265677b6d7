#include "collapsar/exploration/bandit.hpp"

#include <algorithm>
#include <cmath>

#include "collapsar/errors.hpp"
#include "collapsar/numerics/rng.hpp"

namespace collapsar {

std::string to_string(BanditPolicy p) {
  switch (p) {
    case BanditPolicy::ts: return "ts";
    case BanditPolicy::epsilon_greedy: return "epsilon_greedy";
    case BanditPolicy::greedy: return "greedy";
  }
  return "?";
}

BanditPolicy parse_bandit_policy(const std::string& name) {
  if (name == "ts") return BanditPolicy::ts;
  if (name == "epsilon_greedy") return BanditPolicy::epsilon_greedy;
  if (name == "greedy") return BanditPolicy::greedy;
  throw ConfigError("unknown bandit policy '" + name + "' (expected ts, epsilon_greedy, greedy)");
}

void BanditConfig::validate() const {
  if (arms.size() < 2) throw ConfigError("bandit needs at least 2 arms");
  for (double p : arms) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("arm CTRs must lie in [0, 1]");
  }
  if (rounds == 0) throw ConfigError("bandit rounds must be positive");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
  kernel.validate();
}

BanditConfig BanditConfig::from_config(const Config& c) {
  BanditConfig b;
  if (c.has("arms")) b.arms = c.get_doubles("arms");
  b.rounds = static_cast<std::size_t>(c.get_int("rounds", static_cast<std::int64_t>(b.rounds)));
  b.epsilon = c.get_double("epsilon", b.epsilon);
  b.kernel.lengthscale = c.get_double("kernel.lengthscale", b.kernel.lengthscale);
  b.kernel.variance = c.get_double("kernel.variance", b.kernel.variance);
  b.validate();
  return b;
}

nlohmann::json BanditConfig::to_json() const {
  return {{"arms", arms},
          {"rounds", rounds},
          {"epsilon", epsilon},
          {"kernel", {{"lengthscale", kernel.lengthscale}, {"variance", kernel.variance}}}};
}

nlohmann::json BanditTrace::to_json() const {
  return {{"policy", to_string(policy)},
          {"final_regret", final_regret()},
          {"pulls", pulls},
          {"clicks", clicks},
          {"cumulative_regret", cumulative_regret}};
}

namespace {

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::size_t greedy_choice(const std::vector<std::size_t>& pulls, const std::vector<std::size_t>& clicks) {
  for (std::size_t a = 0; a < pulls.size(); ++a) {
    if (pulls[a] == 0) return a;
  }
  std::vector<double> rate(pulls.size());
  for (std::size_t a = 0; a < pulls.size(); ++a) {
    rate[a] = static_cast<double>(clicks[a]) / static_cast<double>(pulls[a]);
  }
  return argmax(rate);
}

}  // namespace

BanditTrace bandit_simulate(const BanditConfig& cfg, BanditPolicy policy, std::uint64_t seed) {
  cfg.validate();
  const std::size_t k = cfg.arms.size();
  // One reward tape per arm, so every policy sees the same outcome for the
  // n-th pull of a given arm under a given seed.
  std::vector<Rng> tapes;
  for (std::size_t a = 0; a < k; ++a) tapes.push_back(Rng(seed).fork(100 + a));
  Rng policy_rng = Rng(seed).fork(2);
  const double best = *std::max_element(cfg.arms.begin(), cfg.arms.end());

  BanditTrace tr;
  tr.policy = policy;
  tr.pulls.assign(k, 0);
  tr.clicks.assign(k, 0);
  tr.cumulative_regret.reserve(cfg.rounds);

  GpData data;
  data.x = Matrix::identity(k);
  data.successes.assign(k, 0.0);
  data.trials.assign(k, 0.0);
  std::vector<double> draws(k);

  double regret = 0.0;
  for (std::size_t t = 0; t < cfg.rounds; ++t) {
    std::size_t arm = 0;
    switch (policy) {
      case BanditPolicy::ts: {
        const GpState st = gp_fit(data, cfg.kernel);
        for (std::size_t a = 0; a < k; ++a) draws[a] = thompson_pctr(st, data.x.row(a), policy_rng);
        arm = argmax(draws);
        break;
      }
      case BanditPolicy::epsilon_greedy:
        arm = policy_rng.bernoulli(cfg.epsilon) ? policy_rng.uniform_int(k) : greedy_choice(tr.pulls, tr.clicks);
        break;
      case BanditPolicy::greedy:
        arm = greedy_choice(tr.pulls, tr.clicks);
        break;
    }
    const bool click = tapes[arm].bernoulli(cfg.arms[arm]);
    ++tr.pulls[arm];
    tr.clicks[arm] += click ? 1 : 0;
    data.trials[arm] += 1.0;
    data.successes[arm] += click ? 1.0 : 0.0;
    regret += best - cfg.arms[arm];
    tr.cumulative_regret.push_back(regret);
  }
  return tr;
}

}  // namespace collapsar
