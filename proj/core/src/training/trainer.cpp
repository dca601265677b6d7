#include "collapsar/training/trainer.hpp"

#include <cmath>
#include <numeric>

#include "collapsar/errors.hpp"
#include "collapsar/numerics/ops.hpp"
#include "collapsar/numerics/rng.hpp"
#include "collapsar/training/optimizer.hpp"

namespace collapsar {

void TrainConfig::validate() const {
  if (!std::isfinite(loss.lambda) || loss.lambda < 0.0) throw ConfigError("train.lambda must be finite and >= 0");
  if (!std::isfinite(lr) || lr < 0.0) throw ConfigError("train.lr must be finite and >= 0");
  if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (rew) rew_cfg.validate();
}

nlohmann::json TrainConfig::to_json() const {
  return {{"loss", to_string(loss.mode)},
          {"lambda", loss.lambda},
          {"lr", lr},
          {"adagrad_eps", adagrad_eps},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"seed", seed},
          {"shuffle", shuffle},
          {"rew", rew},
          {"rew_cfg",
           {{"alpha", rew_cfg.alpha},
            {"half_life", rew_cfg.half_life},
            {"count_scale", rew_cfg.count_scale},
            {"max_count_weight", rew_cfg.max_count_weight},
            {"recency_scale", rew_cfg.recency_scale}}}};
}

Config TrainConfig::keys() {
  Config k;
  for (const char* key : {"loss", "lambda", "lr", "adagrad_eps", "epochs", "batch_size", "seed", "shuffle",
                          "rew", "rew.enabled", "rew.alpha", "rew.half_life", "rew.count_scale",
                          "rew.max_count_weight", "rew.recency_scale"}) {
    k.set(key, "");
  }
  return k;
}

TrainConfig TrainConfig::from_config(const Config& c) {
  c.reject_unknown(keys());
  TrainConfig cfg;
  cfg.loss.mode = parse_loss_mode(c.get_string("loss", "bce"));
  cfg.loss.lambda = c.get_double("lambda", cfg.loss.lambda);
  cfg.lr = c.get_double("lr", cfg.lr);
  cfg.adagrad_eps = c.get_double("adagrad_eps", cfg.adagrad_eps);
  const auto epochs = c.get_int("epochs", 1);
  const auto batch = c.get_int("batch_size", 256);
  if (epochs < 0) throw ConfigError("train.epochs must be >= 0");
  if (batch <= 0) throw ConfigError("train.batch_size must be positive");
  cfg.epochs = static_cast<std::size_t>(epochs);
  cfg.batch_size = static_cast<std::size_t>(batch);
  cfg.seed = static_cast<std::uint64_t>(c.get_int("seed", 0));
  cfg.shuffle = c.get_bool("shuffle", true);
  cfg.rew = c.get_bool("rew.enabled", c.get_bool("rew", false));
  cfg.rew_cfg.alpha = c.get_double("rew.alpha", cfg.rew_cfg.alpha);
  cfg.rew_cfg.half_life = c.get_double("rew.half_life", cfg.rew_cfg.half_life);
  cfg.rew_cfg.count_scale = c.get_double("rew.count_scale", cfg.rew_cfg.count_scale);
  cfg.rew_cfg.max_count_weight = c.get_double("rew.max_count_weight", cfg.rew_cfg.max_count_weight);
  cfg.rew_cfg.recency_scale = c.get_double("rew.recency_scale", cfg.rew_cfg.recency_scale);
  cfg.validate();
  return cfg;
}

nlohmann::json EpochRecord::to_json() const {
  nlohmann::json j = {{"epoch", epoch}, {"train_loss", train_loss}, {"train", train.to_json()}};
  if (valid) j["valid"] = valid->to_json();
  return j;
}

namespace {

std::vector<std::size_t> label_columns(const Model& model) {
  std::vector<std::size_t> out;
  for (const auto& t : model.spec().towers) {
    const auto idx = model.schema().task_index(t);
    if (!idx) throw ConfigError("tower '" + t + "' has no task column in the schema");
    out.push_back(*idx);
  }
  return out;
}

Vector sample_weights(std::span<const Sample* const> batch, std::span<const std::uint8_t> labels,
                      const TrainConfig& cfg) {
  if (!cfg.rew) return {};
  Vector w_rep;
  w_rep.reserve(batch.size());
  for (const Sample* s : batch) w_rep.push_back(rew_weight(s->repeat_count.value_or(0.0), s->last_repeat_gap, cfg.rew_cfg));
  return rew_batch_weights(labels, w_rep);
}

}  // namespace

BatchLoss tower_batch_loss(const Model& model, std::span<const Sample> batch, std::size_t tower,
                           const TrainConfig& cfg) {
  const std::size_t col = label_columns(model).at(tower);
  Vector logits;
  std::vector<std::uint8_t> labels;
  std::vector<const Sample*> ptrs;
  for (const auto& s : batch) {
    logits.push_back(model.logits(s)[tower]);
    labels.push_back(s.labels.at(col));
    ptrs.push_back(&s);
  }
  return combined_loss(logits, labels, cfg.loss, sample_weights(ptrs, labels, cfg));
}

TrainResult train(Model& model, std::span<const Sample> train_samples,
                  std::span<const Sample> valid_samples, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  const std::size_t towers = model.num_towers();
  const auto columns = label_columns(model);
  Adagrad opt(model.params(), cfg.lr, cfg.adagrad_eps);
  Gradients grads(model.params());
  Rng rng = Rng(cfg.seed).fork(0x747261696eULL);
  std::vector<std::size_t> order(train_samples.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  std::vector<Model::Cache> caches(cfg.batch_size);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.shuffle) rng.shuffle(order);
    std::vector<Vector> probs(towers);
    std::vector<std::vector<std::uint8_t>> seen(towers);
    double loss_sum = 0.0;
    std::size_t step = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++step) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - start);
      std::vector<const Sample*> batch(n);
      std::vector<Vector> logits(towers, Vector(n));
      for (std::size_t i = 0; i < n; ++i) {
        batch[i] = &train_samples[order[start + i]];
        const Vector l = model.logits(*batch[i], &caches[i]);
        for (std::size_t t = 0; t < towers; ++t) logits[t][i] = l[t];
      }
      std::vector<Vector> dlogits(n, Vector(towers, 0.0));
      double batch_loss = 0.0;
      for (std::size_t t = 0; t < towers; ++t) {
        std::vector<std::uint8_t> labels(n);
        for (std::size_t i = 0; i < n; ++i) labels[i] = batch[i]->labels.at(columns[t]);
        const BatchLoss bl = combined_loss(logits[t], labels, cfg.loss, sample_weights(batch, labels, cfg));
        batch_loss += bl.loss;
        for (std::size_t i = 0; i < n; ++i) {
          dlogits[i][t] = bl.grads[i];
          probs[t].push_back(sigmoid(logits[t][i]));
          seen[t].push_back(labels[i]);
        }
      }
      if (!std::isfinite(batch_loss)) throw DivergenceError(epoch, step, "non-finite training loss");
      loss_sum += batch_loss * static_cast<double>(n);
      grads.zero();
      for (std::size_t i = 0; i < n; ++i) model.backward(caches[i], dlogits[i], grads);
      opt.step(model.params(), grads);
      for (const auto& p : model.params()) {
        if (!p.value.all_finite()) throw DivergenceError(epoch, step, "non-finite parameter '" + p.name + "'");
      }
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_samples.empty() ? 0.0 : loss_sum / static_cast<double>(train_samples.size());
    rec.train = compute_metrics(model.spec().towers, seen, probs);
    if (!valid_samples.empty()) rec.valid = evaluate(model, valid_samples);
    if (on_epoch) on_epoch(rec);
    result.history.push_back(std::move(rec));
  }
  return result;
}

}  // namespace collapsar
