#pragma once

// Schemas, random samples and a parameter-level gradient check for whole
// models. Shared by the unit and acceptance suites, so free of gtest.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "collapsar/model/model.hpp"
#include "collapsar/numerics/grad_check.hpp"
#include "collapsar/numerics/rng.hpp"

namespace collapsar::fixtures {

inline Schema mixed_schema(std::vector<std::string> tasks = {"click"}) {
  std::vector<FieldSchema> f(5);
  f[0] = {0, "user", FieldKind::categorical, 5, 0, 0, 0, 0, 0};
  f[1] = {1, "item", FieldKind::categorical, 6, 1, 1, 0, 0, 0};
  f[2] = {2, "price", FieldKind::numeric, 0, 1, 1, 0, 0, 100};
  f[3] = {3, "hist", FieldKind::sequence, 6, 0, 0, 4, 0, 0};
  f[4] = {4, "img", FieldKind::pretrained_embedding, 0, 1, 1, 0, 3, 0};
  return Schema(f, std::move(tasks));
}

inline Schema categorical_schema(std::vector<std::string> tasks) {
  std::vector<FieldSchema> f(3);
  f[0] = {0, "a", FieldKind::categorical, 4, 0, 0, 0, 0, 0};
  f[1] = {1, "b", FieldKind::categorical, 5, 1, 1, 0, 0, 0};
  f[2] = {2, "c", FieldKind::categorical, 3, 1, 1, 0, 0, 0};
  return Schema(f, std::move(tasks));
}

inline Sample random_sample(const Schema& schema, Rng& rng) {
  Sample s;
  s.ts = 1'000'000;
  for (const auto& f : schema.fields()) {
    switch (f.kind) {
      case FieldKind::categorical:
        s.values.emplace_back(static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(f.cardinality))));
        break;
      case FieldKind::numeric:
        s.values.emplace_back(static_cast<double>(rng.uniform_int(static_cast<std::uint64_t>(f.max_value) + 1)));
        break;
      case FieldKind::sequence: {
        BehaviorList seq;
        const std::size_t len = 1 + rng.uniform_int(f.max_len);
        std::int64_t ts = s.ts;
        for (std::size_t i = 0; i < len; ++i) {
          ts -= static_cast<std::int64_t>(rng.uniform_int(5000));
          seq.push_back({static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(f.cardinality))), ts});
        }
        s.values.emplace_back(seq);
        break;
      }
      case FieldKind::pretrained_embedding:
        {
          EmbeddingValue v(f.dim);
          for (double& x : v) x = rng.normal();
          s.values.emplace_back(std::move(v));
        }
        break;
    }
  }
  s.labels.assign(schema.num_tasks(), 0);
  return s;
}

inline std::vector<Sample> random_samples(const Schema& schema, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_sample(schema, rng));
  return out;
}

inline void randomize(Model& m, Rng& rng, double scale, bool gates) {
  for (auto& p : m.params()) {
    const bool gate = p.name.rfind("g.", 0) == 0;
    if (gate && !gates) continue;
    for (double& v : p.value.values()) v = scale * rng.normal();
  }
}

/// Grad check of the per-sample logits wrt the parameters selected by `pick`.
inline double model_grad_check(Model& model, const std::vector<Sample>& samples,
                        const std::function<bool(const Param&)>& pick, std::uint64_t seed) {
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    if (pick(model.params()[i])) chosen.push_back(i);
  }
  auto load = [&](std::span<const double> x) {
    std::size_t off = 0;
    for (auto i : chosen) {
      auto dst = model.params().value(i).values();
      std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(off), dst.size(), dst.begin());
      off += dst.size();
    }
  };
  Vector x0;
  for (auto i : chosen) {
    const auto v = model.params().value(i).values();
    x0.insert(x0.end(), v.begin(), v.end());
  }
  const std::size_t towers = model.num_towers();
  LambdaOp op(
      x0.size(), samples.size() * towers,
      [&](std::span<const double> x) {
        load(x);
        Vector out;
        for (const auto& s : samples) {
          const Vector l = model.logits(s);
          out.insert(out.end(), l.begin(), l.end());
        }
        return out;
      },
      [&](std::span<const double> x, std::span<const double> up) {
        load(x);
        Gradients g(model.params());
        for (std::size_t k = 0; k < samples.size(); ++k) {
          Model::Cache cache;
          model.logits(samples[k], &cache);
          model.backward(cache, up.subspan(k * towers, towers), g);
        }
        Vector out;
        for (auto i : chosen) {
          const auto v = g[i].values();
          out.insert(out.end(), v.begin(), v.end());
        }
        return out;
      });
  const double err = grad_check(op, x0, kGradCheckEps, seed);
  load(x0);
  return err;
}

/// Smallest |pre-activation| feeding a ReLU over the samples. Finite
/// differences are only meaningful away from the kinks.
inline double relu_margin(const Model& model, const std::vector<Sample>& samples) {
  double margin = INFINITY;
  for (const auto& s : samples) {
    Model::Cache c;
    model.logits(s, &c);
    for (const auto& ex : c.experts) {
      for (const auto& pre : ex.mlp.pre) {
        for (double v : pre) margin = std::min(margin, std::abs(v));
      }
    }
    for (const auto& t : c.towers) {
      for (std::size_t l = 0; l + 1 < t.mlp.pre.size(); ++l) {
        for (double v : t.mlp.pre[l]) margin = std::min(margin, std::abs(v));
      }
    }
  }
  return margin;
}

/// Randomizes until every ReLU input is at least 1e-2 from its kink;
/// false when no such point was found.
inline bool randomize_smooth(Model& m, const std::vector<Sample>& samples, Rng& rng, double scale,
                             bool gates) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    randomize(m, rng, scale, gates);
    if (relu_margin(m, samples) > 1e-2) return true;
  }
  return false;
}

inline bool not_gate_weight(const Param& p) {
  return !(p.name.rfind("g.", 0) == 0 && p.name.ends_with(".w"));
}

}  // namespace collapsar::fixtures
