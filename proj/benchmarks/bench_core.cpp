// Hot paths: MNSE lookup, spectrum/IA, per-sample model steps, candidate
// scoring and the Laplace GP fit.

#include <benchmark/benchmark.h>

#include "collapsar/analysis/spectrum.hpp"
#include "collapsar/config.hpp"
#include "collapsar/data/generators.hpp"
#include "collapsar/encoding/mns.hpp"
#include "collapsar/exploration/gp.hpp"
#include "collapsar/interactions/interactions.hpp"
#include "collapsar/model/model.hpp"
#include "collapsar/numerics/rng.hpp"

namespace {

using namespace collapsar;

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

void BM_MnsEncode(benchmark::State& state) {
  const MNSConfig cfg = MNSConfig::covering((1 << 20) - 1, 16);
  Rng rng(1);
  const MNSTables tables = MNSTables::random(cfg, rng, 0.1);
  std::int64_t v = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mns_encode(v, cfg, tables));
    v = (v + 7919) & ((1 << 20) - 1);
  }
}
BENCHMARK(BM_MnsEncode);

void BM_InformationAbundance(benchmark::State& state) {
  Rng rng(2);
  const Matrix e = random_matrix(static_cast<std::size_t>(state.range(0)), 16, rng);
  for (auto _ : state) benchmark::DoNotOptimize(information_abundance(e));
}
BENCHMARK(BM_InformationAbundance)->Arg(100)->Arg(1000)->Arg(10000);

struct CtrFixture {
  GeneratedData gen = generate("ctr", 3, 512, Config{});
};

const CtrFixture& ctr() {
  static const CtrFixture f;
  return f;
}

void BM_ModelStep(benchmark::State& state) {
  const auto op = static_cast<ExpertOp>(state.range(0));
  const Dataset& data = ctr().gen.data;
  BuildOptions opt;
  opt.op = op;
  Model model(data.schema, single_build(8, data.tasks(), opt), 4);
  Gradients grads(model.params());
  std::size_t i = 0;
  for (auto _ : state) {
    Model::Cache cache;
    const Vector logits = model.logits(data.samples[i], &cache);
    const Vector dlogits(logits.size(), 1.0);
    model.backward(cache, dlogits, grads);
    i = (i + 1) % data.size();
  }
  state.SetLabel(std::string(to_string(op)));
}
BENCHMARK(BM_ModelStep)->DenseRange(0, 6);

// Batched candidate scoring against a pooled request, C candidates.
void BM_GwpfmCandidates(benchmark::State& state) {
  const std::size_t c = static_cast<std::size_t>(state.range(0));
  const std::size_t parts = 3, groups = 4, k = 16;
  Rng rng(5);
  auto side = [&](std::size_t n, std::size_t part_lo, std::size_t part_hi) {
    PartFeatures f;
    for (std::size_t i = 0; i < n; ++i) {
      f.copies.push_back(random_matrix(parts, k, rng));
      f.parts.push_back(part_lo + rng.uniform_int(part_hi - part_lo));
      f.groups.push_back(rng.uniform_int(groups));
      f.x.push_back(1.0);
    }
    return f;
  };
  const PartFeatures user = side(20, 0, 1);
  SymmetricWeights r(groups);
  for (double& v : r.values()) v = rng.normal();
  std::vector<PartFeatures> cands;
  for (std::size_t i = 0; i < c; ++i) cands.push_back(side(6, 1, parts));
  for (auto _ : state) {
    PairEvalCounter counter;
    const auto req = gwpfm_pool_request(user, r, parts, counter);
    benchmark::DoNotOptimize(gwpfm_score_candidates(req, cands, r, Reduce::scalar, counter));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c));
}
BENCHMARK(BM_GwpfmCandidates)->RangeMultiplier(4)->Range(1, 256);

void BM_GpFitBernoulli(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(6);
  const Matrix x = random_matrix(n, 2, rng);
  std::vector<int> y(n);
  for (auto& v : y) v = rng.uniform() < 0.3 ? 1 : 0;
  const GpData data = GpData::bernoulli(x, y);
  for (auto _ : state) benchmark::DoNotOptimize(gp_fit(data, KernelConfig{}));
}
BENCHMARK(BM_GpFitBernoulli)->Arg(50)->Arg(200)->Arg(800);

}  // namespace

BENCHMARK_MAIN();
