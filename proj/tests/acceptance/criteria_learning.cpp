// Directional criteria that train models or run simulations on synthetic
// data: collapse, entanglement, TIM, the MI tool and GP Thompson sampling.

#include <Eigen/Dense>
#include <cmath>

#include "acceptance.hpp"
#include "collapsar/analysis/correlation.hpp"
#include "collapsar/analysis/entanglement.hpp"
#include "collapsar/analysis/spectrum.hpp"
#include "collapsar/data/generators.hpp"
#include "collapsar/encoding/temporal.hpp"
#include "collapsar/exploration/bandit.hpp"
#include "collapsar/exploration/gp.hpp"
#include "collapsar/training/metrics.hpp"
#include "collapsar/training/trainer.hpp"

namespace collapsar::acceptance {

namespace {

Matrix hstack(const std::vector<Matrix>& parts) {
  std::size_t cols = 0;
  for (const auto& p : parts) cols += p.cols();
  Matrix out(parts.front().rows(), cols);
  std::size_t off = 0;
  for (const auto& p : parts) {
    for (std::size_t r = 0; r < p.rows(); ++r) {
      for (std::size_t c = 0; c < p.cols(); ++c) out(r, off + c) = p(r, c);
    }
    off += p.cols();
  }
  return out;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

}  // namespace

Outcome collapse_mitigation() {
  Checks c;
  CollapseGenConfig gc;
  gc.context_cardinality = 128;
  gc.low_scale = 4.0;
  const std::size_t n = 200000;
  std::vector<double> fm;
  std::vector<double> proj;
  std::vector<double> me;
  double slowest = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto gen = gen_collapse_probe(seed, n, gc);
    const std::size_t high = gen.data.schema.index_of("high");
    const std::span<const Sample> all(gen.data.samples);
    for (int variant = 0; variant < 3; ++variant) {
      Stopwatch sw;
      BuildOptions opt;
      opt.op = variant == 1 ? ExpertOp::projected : ExpertOp::fm;
      opt.expert_hidden = {32};
      opt.tower_hidden = {64};
      ModelSpec spec = variant == 2 ? me_build({8, 8}, gen.data.tasks(), opt) : single_build(16, gen.data.tasks(), opt);
      spec.embedding_scale = 0.01;
      Model model(gen.data.schema, spec, seed);
      TrainConfig tc;
      tc.seed = seed;
      tc.lr = 0.05;
      train(model, all.first(n * 9 / 10), {}, tc);
      std::vector<Matrix> tables;
      for (std::size_t t = 0; t < spec.num_tables(); ++t) tables.push_back(model.embedding_matrix(t, high));
      const double ia = information_abundance(hstack(tables));
      (variant == 0 ? fm : variant == 1 ? proj : me).push_back(ia);
      slowest = std::max(slowest, sw.seconds());
    }
  }
  const double mf = median(fm);
  const double mp = median(proj);
  const double mm = median(me);
  c.expect(mp >= 1.10 * mf, "projected/FM " + fmt(mp / mf));
  c.expect(mm >= 1.10 * mf, "ME/single " + fmt(mm / mf));
  c.expect(slowest < 120.0, "slowest run " + fmt(slowest) + " s");
  return c.outcome("median IA(high) FM " + fmt(mf) + ", projected " + fmt(mp) + " (x" + fmt(mp / mf, 3) +
                   "), ME 2x8 " + fmt(mm) + " (x" + fmt(mm / mf, 3) + "); slowest run " + fmt(slowest, 3) + " s");
}

Outcome entanglement_direction() {
  Checks c;
  const EntanglementConfig cfg;
  int wins = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto gen = gen_two_task_contradictory(seed, 30000, TwoTaskGenConfig{});
    const auto models = train_entanglement_models(gen.data, cfg, seed);
    const auto rep = entanglement_report(gen.manifest, models.by_name(), cfg.pctl);
    const double stem = rep.payload["spearman"]["single_a_vs_stem_a"].get<double>();
    const double shared = rep.payload["spearman"]["single_a_vs_shared"].get<double>();
    wins += stem > shared;
    per_seed += (seed > 1 ? ", " : "") + fmt(stem, 2) + " vs " + fmt(shared, 2);
  }
  c.expect(wins >= 4, std::to_string(wins) + "/5 seeds");
  return c.outcome("STEM-A beats shared in " + std::to_string(wins) + "/5 seeds (rho " + per_seed + ")");
}

Outcome tim_temporal_structure() {
  Checks c;
  const std::size_t n = 40000;
  std::vector<double> diffs;
  std::string alphas;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto gen = gen_synthetic_ctr(seed, n, CtrGenConfig{});
    const std::span<const Sample> all(gen.data.samples);
    const auto tr = all.first(n * 3 / 4);
    const auto va = all.subspan(n * 3 / 4);
    const std::size_t hist = gen.data.schema.index_of("hist");
    double auc[2] = {0.0, 0.0};
    double a0 = 0.0;
    double a5 = 0.0;
    std::size_t c0 = 0;
    std::size_t c5 = 0;
    for (int temporal = 0; temporal < 2; ++temporal) {
      BuildOptions opt;
      opt.op = ExpertOp::tim;
      ModelSpec spec = single_build(8, gen.data.tasks(), opt);
      for (auto& e : spec.experts) e.temporal = temporal == 1;
      Model model(gen.data.schema, spec, seed);
      TrainConfig tc;
      tc.seed = seed;
      tc.epochs = 2;
      train(model, tr, {}, tc);
      auc[temporal] = evaluate(model, va).auc[0];
      if (temporal == 0) continue;
      for (const auto& s : va) {
        const Vector alpha = model.tim_attention(0, s);
        const auto& seq = s.behaviors(hist);
        for (std::size_t i = 0; i < seq.size(); ++i) {
          const auto b = temporal_bucket(s.ts - seq[i].ts, TemporalMode::interval);
          if (b == 0) {
            a0 += alpha[i];
            ++c0;
          } else if (b >= 5) {
            a5 += alpha[i];
            ++c5;
          }
        }
      }
    }
    diffs.push_back(auc[1] - auc[0]);
    const double m0 = a0 / static_cast<double>(c0);
    const double m5 = a5 / static_cast<double>(c5);
    c.expect(m0 > m5, "seed " + std::to_string(seed) + " alpha bucket0 " + fmt(m0) + " <= bucket5+ " + fmt(m5));
    alphas += (seed > 1 ? ", " : "") + fmt(m0, 3) + ">" + fmt(m5, 3);
  }
  const double md = median(diffs);
  c.expect(md >= 0.01, "median AUC gain " + fmt(md));
  return c.outcome("median AUC gain over no-temporal ablation " + fmt(md, 3) + "; mean alpha bucket 0 > bucket>=5: " +
                   alphas);
}

Outcome mi_tool_correctness() {
  Checks c;
  std::vector<std::int64_t> a;
  std::vector<std::int64_t> b;
  for (auto [u, v, k] : {std::tuple{0, 0, 40}, {0, 1, 10}, {1, 0, 10}, {1, 1, 40}}) {
    for (int i = 0; i < k; ++i) {
      a.push_back(u);
      b.push_back(v);
    }
  }
  const double closed = 0.8 * std::log(0.4 / 0.25) + 0.2 * std::log(0.1 / 0.25);
  const double mi22 = mutual_information(a, b);
  c.expect(std::abs(mi22 - closed) < 1e-6, "2x2 " + fmt(mi22, 8) + " vs " + fmt(closed, 8));

  Rng rng(1);
  std::vector<std::int64_t> x(100000);
  std::vector<std::int64_t> y(100000);
  for (auto& v : x) v = static_cast<std::int64_t>(rng.uniform_int(2));
  for (auto& v : y) v = static_cast<std::int64_t>(rng.uniform_int(2));
  const double mi_ind = mutual_information(x, y);
  c.expect(mi_ind < 0.01, "independent series MI " + fmt(mi_ind));

  const std::vector<std::int64_t> cats{0, 1, 2, 3, 4, 5, 6, 7};
  const std::vector<std::size_t> positions{0, 1, 2, 3, 4, 5, 6, 7};
  CtrGenConfig flat;
  flat.semantic_boost = 0.0;
  const auto g0 = semantic_temporal_correlation(gen_synthetic_ctr(1, 100000, flat).data, 0, cats, positions);
  double grid_max = 0.0;
  for (const auto& row : g0.mi) {
    for (const auto& v : row) grid_max = std::max(grid_max, v.value_or(INFINITY));
  }
  c.expect(grid_max < 0.01, "independent grid max MI " + fmt(grid_max));

  CtrGenConfig decay;
  decay.temporal_decay = 0.25;
  std::string rhos;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto g = semantic_temporal_correlation(gen_synthetic_ctr(seed, 100000, decay).data, 3, cats, positions);
    Vector pos;
    Vector row;
    for (std::size_t j = 0; j < positions.size(); ++j) {
      pos.push_back(static_cast<double>(j));
      row.push_back(g.mi[3][j].value_or(0.0));
    }
    const double rho = spearman(pos, row);
    c.expect(rho < -0.8, "seed " + std::to_string(seed) + " rho " + fmt(rho));
    rhos += (seed > 1 ? ", " : "") + fmt(rho, 3);
  }
  return c.outcome("2x2 |err| " + fmt(std::abs(mi22 - closed), 2) + "; independence MI " + fmt(mi_ind, 2) +
                   " (grid max " + fmt(grid_max, 2) + "); planted decay rho " + rhos);
}

Outcome gp_thompson_sampling() {
  Stopwatch sw;
  Checks c;
  Rng rng(3);
  double worst_mean = 0.0;
  double worst_var = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 12;
    const Matrix x = random_matrix(n, 3, rng);
    Vector y(n);
    for (double& v : y) v = rng.normal();
    const KernelConfig k{0.5 + rng.uniform(), 0.5 + rng.uniform()};
    GpFitOptions opt;
    opt.likelihood = Likelihood::gaussian;
    opt.noise = 0.05 + 0.2 * rng.uniform();
    const GpState st = gp_fit(GpData::regression(x, y), k, opt);
    Eigen::MatrixXd kx(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) kx(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rbf_kernel(x.row(i), x.row(j), k);
    }
    const Eigen::MatrixXd a = kx + (opt.noise + opt.jitter) * Eigen::MatrixXd::Identity(n, n);
    const Eigen::LDLT<Eigen::MatrixXd> solver(a);
    const Eigen::VectorXd alpha = solver.solve(Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(n)));
    for (int q = 0; q < 5; ++q) {
      Vector xs(3);
      for (double& v : xs) v = rng.normal();
      Eigen::VectorXd ks(n);
      for (std::size_t i = 0; i < n; ++i) ks(static_cast<Eigen::Index>(i)) = rbf_kernel(xs, x.row(i), k);
      const auto p = gp_predict(st, xs);
      worst_mean = std::max(worst_mean, std::abs(p.mean - ks.dot(alpha)));
      worst_var = std::max(worst_var, std::abs(p.variance - (rbf_kernel(xs, xs, k) - ks.dot(solver.solve(ks)))));
    }
  }
  c.expect(worst_mean < 1e-8 && worst_var < 1e-8, "closed form dev mean " + fmt(worst_mean) + " var " + fmt(worst_var));

  std::size_t above = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.uniform_int(20);
    const Matrix x = random_matrix(n, 2, rng);
    std::vector<int> labels(n);
    for (int& l : labels) l = rng.bernoulli(0.3);
    const KernelConfig k{0.3 + 2.0 * rng.uniform(), 0.5 + 4.0 * rng.uniform()};
    const GpState st = gp_fit(GpData::bernoulli(x, labels), k);
    for (int q = 0; q < 10; ++q) {
      Vector xs(2);
      for (double& v : xs) v = rng.normal();
      if (q < 3) {
        // Training inputs too, where the posterior is tightest.
        const auto row = x.row(rng.uniform_int(n));
        xs.assign(row.begin(), row.end());
      }
      above += gp_predict(st, xs).variance > k.variance;
    }
  }
  c.expect(above == 0, std::to_string(above) + " predictions above the prior variance");

  const BanditConfig bc;
  std::vector<double> ts;
  std::vector<double> eg;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ts.push_back(bandit_simulate(bc, BanditPolicy::ts, seed).final_regret());
    eg.push_back(bandit_simulate(bc, BanditPolicy::epsilon_greedy, seed).final_regret());
  }
  const double mts = median(ts);
  const double meg = median(eg);
  c.expect(mts < meg, "TS median regret " + fmt(mts) + " >= eps-greedy " + fmt(meg));
  const double t = sw.seconds();
  c.expect(t < 180.0, "runtime " + fmt(t) + " s");
  return c.outcome("Gaussian path dev " + fmt(std::max(worst_mean, worst_var), 2) +
                   "; variance <= prior in 2000 queries; median regret TS " + fmt(mts) + " vs eps-greedy " +
                   fmt(meg) + " (seeds 0-19); " + fmt(t, 3) + " s");
}

}  // namespace collapsar::acceptance
