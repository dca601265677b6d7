#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <vector>

#include "collapsar/config.hpp"
#include "collapsar/model/model.hpp"
#include "collapsar/training/loss.hpp"
#include "collapsar/training/metrics.hpp"
#include "collapsar/training/rew.hpp"

namespace collapsar {

struct TrainConfig {
  LossConfig loss;
  bool rew = false;
  RewConfig rew_cfg;
  double lr = 0.05;
  double adagrad_eps = 1e-8;
  std::size_t epochs = 1;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;
  bool shuffle = true;

  void validate() const;
  nlohmann::json to_json() const;
  /// Reads a `train.*` section: loss, lambda, lr, adagrad_eps, epochs,
  /// batch_size, seed, shuffle, rew, rew.alpha, rew.half_life,
  /// rew.count_scale, rew.max_count_weight, rew.recency_scale.
  static TrainConfig from_config(const Config& train_cfg);
  static Config keys();
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  Metrics train;
  std::optional<Metrics> valid;

  nlohmann::json to_json() const;
};

struct TrainResult {
  std::vector<EpochRecord> history;
};

/// Observer called after every epoch (e.g. to stream JSON lines).
using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch Adagrad on the summed per-tower losses. Deterministic given
/// cfg.seed. Throws DivergenceError on a non-finite loss.
TrainResult train(Model& model, std::span<const Sample> train_samples,
                  std::span<const Sample> valid_samples, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

/// Gradient of the batch loss wrt each sample's logit for one tower, as
/// used by `train` (exposed for diagnostics).
BatchLoss tower_batch_loss(const Model& model, std::span<const Sample> batch, std::size_t tower,
                           const TrainConfig& cfg);

}  // namespace collapsar
