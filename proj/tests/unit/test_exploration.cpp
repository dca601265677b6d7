#include <algorithm>
#include <cmath>
#include <numeric>

#include "collapsar/errors.hpp"
#include "collapsar/exploration/bandit.hpp"
#include "collapsar/exploration/gp.hpp"
#include "collapsar/numerics/ops.hpp"
#include "test_support.hpp"

namespace collapsar {
namespace {

using testing::random_matrix;
using testing::to_eigen;

Matrix points(std::initializer_list<double> xs) {
  Matrix m(xs.size(), 1);
  std::size_t i = 0;
  for (double x : xs) m(i++, 0) = x;
  return m;
}

GpData random_bernoulli(std::size_t n, std::size_t d, Rng& rng) {
  Matrix x = random_matrix(n, d, rng);
  std::vector<int> y(n);
  for (auto& v : y) v = rng.bernoulli(0.4) ? 1 : 0;
  return GpData::bernoulli(std::move(x), y);
}

TEST(Kernel, ClosedForms) {
  const KernelConfig k{1.0, 1.0};
  const Vector a{0.0, 0.0};
  const Vector b{1.0, 0.0};
  EXPECT_DOUBLE_EQ(rbf_kernel(a, a, {0.7, 2.5}), 2.5);
  EXPECT_NEAR(rbf_kernel(a, b, k), 0.6065306597126334, 1e-15);
  EXPECT_LT(rbf_kernel(a, Vector{100.0, 0.0}, k), 1e-300);
  EXPECT_THROW(rbf_kernel(a, Vector{1.0}, k), InputError);
  EXPECT_THROW((KernelConfig{0.0, 1.0}.validate()), ConfigError);
  EXPECT_THROW((KernelConfig{1.0, -1.0}.validate()), ConfigError);
}

TEST(Gp, NoDataIsPrior) {
  const KernelConfig k{1.3, 2.0};
  const GpState st = gp_fit(GpData::bernoulli(Matrix(0, 2), std::vector<int>{}), k);
  const auto p = gp_predict(st, Vector{0.4, -1.0});
  EXPECT_EQ(p.mean, 0.0);
  EXPECT_EQ(p.variance, 2.0);
}

TEST(Gp, SingleObservationMatchesScalarNewton) {
  const KernelConfig k{1.0, 1.5};
  const GpState st = gp_fit(GpData::bernoulli(points({0.3}), std::vector<int>{1}), k);
  // Scalar mode of -f^2/(2K) + log sigma(f): f = K (1 - sigma(f)).
  const double kk = 1.5 + 1e-8;
  double f = 0.0;
  for (int it = 0; it < 100; ++it) {
    const double s = sigmoid(f);
    const double g = kk * (1.0 - s) - f;
    const double dg = -kk * s * (1.0 - s) - 1.0;
    f -= g / dg;
  }
  EXPECT_TRUE(st.converged);
  EXPECT_NEAR(st.f_map[0], f, 1e-9);
  const auto p = gp_predict(st, Vector{0.3});
  EXPECT_GT(p.mean, 0.0);
  EXPECT_NEAR(p.mean, 1.5 * (1.0 - sigmoid(f)), 1e-9);
  const double w = sigmoid(f) * (1.0 - sigmoid(f));
  EXPECT_NEAR(p.variance, 1.5 - 1.5 * 1.5 / (kk + 1.0 / w), 1e-9);
}

TEST(Gp, GaussianPathMatchesClosedForm) {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 12;
    Matrix x = random_matrix(n, 3, rng);
    Vector y = testing::random_vector(n, rng);
    const KernelConfig k{0.5 + rng.uniform(), 0.5 + rng.uniform()};
    GpFitOptions opt;
    opt.likelihood = Likelihood::gaussian;
    opt.noise = 0.05 + 0.2 * rng.uniform();
    const GpState st = gp_fit(GpData::regression(x, y), k, opt);

    Eigen::MatrixXd kx(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) kx(i, j) = rbf_kernel(x.row(i), x.row(j), k);
    }
    const Eigen::MatrixXd a = kx + (opt.noise + opt.jitter) * Eigen::MatrixXd::Identity(n, n);
    const Eigen::LDLT<Eigen::MatrixXd> solver(a);
    const Eigen::VectorXd alpha = solver.solve(Eigen::Map<const Eigen::VectorXd>(y.data(), n));
    for (int q = 0; q < 5; ++q) {
      const Vector xs = testing::random_vector(3, rng);
      Eigen::VectorXd ks(n);
      for (std::size_t i = 0; i < n; ++i) ks(i) = rbf_kernel(xs, x.row(i), k);
      const double mean = ks.dot(alpha);
      const double var = rbf_kernel(xs, xs, k) - ks.dot(solver.solve(ks));
      const auto p = gp_predict(st, xs);
      EXPECT_NEAR(p.mean, mean, 1e-8);
      EXPECT_NEAR(p.variance, var, 1e-8);
    }
  }
}

TEST(Gp, ModeIsStationary) {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const GpData d = random_bernoulli(15, 2, rng);
    const KernelConfig k{1.0, 2.0};
    const GpState st = gp_fit(d, k);
    ASSERT_TRUE(st.converged);
    const Eigen::MatrixXd kx = to_eigen(rbf_gram(d.x, k, st.options.jitter));
    const Eigen::VectorXd f = Eigen::Map<const Eigen::VectorXd>(st.f_map.data(), 15);
    Eigen::VectorXd g(15);
    for (int i = 0; i < 15; ++i) g(i) = d.successes[i] - sigmoid(f(i));
    const Eigen::VectorXd grad = g - kx.ldlt().solve(f);
    EXPECT_LT(grad.norm(), 1e-6);
  }
}

TEST(Gp, PredictiveVarianceNeverExceedsPrior) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const GpData d = random_bernoulli(10, 2, rng);
    const KernelConfig k{0.3 + rng.uniform(), 0.5 + 3.0 * rng.uniform()};
    const GpState st = gp_fit(d, k);
    for (int q = 0; q < 20; ++q) {
      const Vector xs = q < 10 ? Vector(d.x.row(q).begin(), d.x.row(q).end()) : testing::random_vector(2, rng);
      const auto p = gp_predict(st, xs);
      EXPECT_GT(p.variance, 0.0);
      EXPECT_LE(p.variance, rbf_kernel(xs, xs, k));
    }
  }
}

TEST(Gp, FarPointRevertsToPrior) {
  const KernelConfig k{0.5, 1.7};
  const GpState st = gp_fit(GpData::bernoulli(points({0.0, 0.2, 0.5}), std::vector<int>{1, 1, 0}), k);
  const auto p = gp_predict(st, Vector{50.0});
  EXPECT_NEAR(p.mean, 0.0, 1e-12);
  EXPECT_NEAR(p.variance, 1.7, 1e-12);
}

TEST(Gp, RepeatedObservationShrinksVariance) {
  const KernelConfig k{1.0, 1.0};
  for (int label : {0, 1}) {
    double prev = 1.0;
    std::vector<int> y;
    std::vector<double> xs;
    for (int n = 1; n <= 12; ++n) {
      y.push_back(n % 2 == 0 ? 1 - label : label);
      xs.push_back(0.0);
      Matrix x(xs.size(), 1, xs);
      const double v = gp_predict(gp_fit(GpData::bernoulli(x, y), k), Vector{0.0}).variance;
      EXPECT_LT(v, prev) << n;
      prev = v;
    }
  }
}

TEST(Gp, SymmetricObservationsGiveZeroMean) {
  const GpState st = gp_fit(GpData::bernoulli(points({0.8, -0.8}), std::vector<int>{1, 0}), {1.0, 1.0});
  EXPECT_NEAR(gp_predict(st, Vector{0.0}).mean, 0.0, 1e-14);
  EXPECT_GT(gp_predict(st, Vector{0.8}).mean, 0.0);
}

TEST(Gp, PermutationInvariant) {
  Rng rng(9);
  const GpData d = random_bernoulli(9, 2, rng);
  std::vector<std::size_t> order(9);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  GpData p;
  p.x = Matrix(9, 2);
  for (std::size_t i = 0; i < 9; ++i) {
    std::copy(d.x.row(order[i]).begin(), d.x.row(order[i]).end(), p.x.row(i).begin());
    p.successes.push_back(d.successes[order[i]]);
    p.trials.push_back(d.trials[order[i]]);
  }
  const KernelConfig k{0.9, 1.4};
  const GpState a = gp_fit(d, k);
  const GpState b = gp_fit(p, k);
  for (int q = 0; q < 10; ++q) {
    const Vector xs = testing::random_vector(2, rng);
    EXPECT_NEAR(gp_predict(a, xs).mean, gp_predict(b, xs).mean, 1e-10);
    EXPECT_NEAR(gp_predict(a, xs).variance, gp_predict(b, xs).variance, 1e-10);
  }
}

TEST(Gp, CountsMatchRepeatedRows) {
  // 3 of 7 positives at one point, 1 of 4 at another.
  GpData counts;
  counts.x = points({0.0, 1.0});
  counts.successes = {3, 1};
  counts.trials = {7, 4};
  std::vector<double> xs;
  std::vector<int> y;
  for (int i = 0; i < 7; ++i) { xs.push_back(0.0); y.push_back(i < 3); }
  for (int i = 0; i < 4; ++i) { xs.push_back(1.0); y.push_back(i < 1); }
  const KernelConfig k{1.0, 2.0};
  const GpState a = gp_fit(counts, k);
  const GpState b = gp_fit(GpData::bernoulli(Matrix(xs.size(), 1, xs), y), k);
  for (double q : {0.0, 0.5, 1.0, 3.0}) {
    EXPECT_NEAR(gp_predict(a, Vector{q}).mean, gp_predict(b, Vector{q}).mean, 1e-6);
    EXPECT_NEAR(gp_predict(a, Vector{q}).variance, gp_predict(b, Vector{q}).variance, 1e-6);
  }
}

TEST(Gp, InputErrors) {
  EXPECT_THROW(GpData::bernoulli(points({0.0}), std::vector<int>{2}), InputError);
  EXPECT_THROW(GpData::bernoulli(points({0.0, 1.0}), std::vector<int>{1}), InputError);
  GpData bad;
  bad.x = points({0.0});
  bad.successes = {3};
  bad.trials = {2};
  EXPECT_THROW(gp_fit(bad, {}), InputError);
  GpFitOptions opt;
  opt.jitter = 0.0;
  EXPECT_THROW(gp_fit(GpData::bernoulli(points({0.0, 0.0}), std::vector<int>{1, 0}), {}, opt), NumericError);
}

TEST(Thompson, MatchesQuadrature) {
  const GpState st = gp_fit(GpData::bernoulli(points({0.0, 0.3, 1.0}), std::vector<int>{1, 1, 0}), {1.0, 2.0});
  const Vector xs{0.2};
  const auto p = gp_predict(st, xs);
  // Trapezoid rule over +-10 standard deviations.
  const double sd = std::sqrt(p.variance);
  const int m = 20000;
  double integral = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double z = -10.0 + 20.0 * i / m;
    const double w = (i == 0 || i == m) ? 0.5 : 1.0;
    integral += w * sigmoid(p.mean + sd * z) * std::exp(-0.5 * z * z);
  }
  integral *= (20.0 / m) / std::sqrt(2.0 * std::acos(-1.0));
  Rng rng(11);
  double mean = 0.0;
  for (int i = 0; i < 100000; ++i) mean += thompson_pctr(st, xs, rng);
  mean /= 100000;
  EXPECT_NEAR(mean, integral, 0.005);
}

TEST(Thompson, ReproducibleAndConcentrates) {
  const GpState st = gp_fit(GpData::bernoulli(points({0.0}), std::vector<int>{1}), {1.0, 1.0});
  Rng a(4);
  Rng b(4);
  EXPECT_EQ(thompson_pctr(st, Vector{0.0}, a), thompson_pctr(st, Vector{0.0}, b));

  // Heavily observed point: variance near zero, draws collapse onto sigma(mean).
  GpData d;
  d.x = points({0.0});
  d.successes = {3e6};
  d.trials = {1e7};
  const GpState tight = gp_fit(d, {1.0, 1.0});
  const auto p = gp_predict(tight, Vector{0.0});
  EXPECT_LT(p.variance, 1e-6);
  Rng rng(1);
  for (int i = 0; i < 20; ++i) EXPECT_NEAR(thompson_pctr(tight, Vector{0.0}, rng), sigmoid(p.mean), 1e-3);
}

TEST(Bandit, IdenticalArmsHaveZeroRegret) {
  BanditConfig cfg;
  cfg.arms = {0.05, 0.05, 0.05};
  cfg.rounds = 300;
  for (auto pol : {BanditPolicy::ts, BanditPolicy::epsilon_greedy, BanditPolicy::greedy}) {
    EXPECT_EQ(bandit_simulate(cfg, pol, 1).final_regret(), 0.0);
  }
}

TEST(Bandit, GreedyCanLockOntoWorseArm) {
  BanditConfig cfg;
  cfg.arms = {0.02, 0.10};
  cfg.rounds = 2000;
  int locked = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto tr = bandit_simulate(cfg, BanditPolicy::greedy, s);
    // Linear regret: most rounds spent on the 0.02 arm.
    if (tr.final_regret() > 0.5 * 0.08 * 2000) ++locked;
  }
  EXPECT_GT(locked, 0);
}

TEST(Bandit, DeterministicPerSeed) {
  BanditConfig cfg;
  cfg.rounds = 200;
  for (auto pol : {BanditPolicy::ts, BanditPolicy::epsilon_greedy}) {
    const auto a = bandit_simulate(cfg, pol, 12);
    const auto b = bandit_simulate(cfg, pol, 12);
    EXPECT_EQ(a.cumulative_regret, b.cumulative_regret);
    EXPECT_EQ(a.pulls, b.pulls);
    EXPECT_EQ(std::accumulate(a.pulls.begin(), a.pulls.end(), std::size_t{0}), 200u);
  }
}

TEST(Bandit, RegretIsCumulative) {
  BanditConfig cfg;
  cfg.rounds = 500;
  const auto tr = bandit_simulate(cfg, BanditPolicy::ts, 3);
  ASSERT_EQ(tr.cumulative_regret.size(), 500u);
  double expected = 0.0;
  for (std::size_t a = 0; a < cfg.arms.size(); ++a) expected += tr.pulls[a] * (0.10 - cfg.arms[a]);
  EXPECT_NEAR(tr.final_regret(), expected, 1e-9);
  EXPECT_TRUE(std::is_sorted(tr.cumulative_regret.begin(), tr.cumulative_regret.end()));
}

TEST(Bandit, ConfigParsing) {
  const Config c = Config::from_string("arms: [0.1, 0.3]\nrounds: 50\nepsilon: 0.2\nkernel:\n  lengthscale: 3\n");
  const BanditConfig b = BanditConfig::from_config(c);
  EXPECT_EQ(b.arms, (std::vector<double>{0.1, 0.3}));
  EXPECT_EQ(b.rounds, 50u);
  EXPECT_EQ(b.epsilon, 0.2);
  EXPECT_EQ(b.kernel.lengthscale, 3.0);
  EXPECT_THROW(BanditConfig::from_config(Config::from_string("arms: [0.1]\n")), ConfigError);
  EXPECT_THROW(BanditConfig::from_config(Config::from_string("arms: [0.1, 1.5]\n")), ConfigError);
  EXPECT_THROW(parse_bandit_policy("ucb"), ConfigError);
  EXPECT_EQ(parse_bandit_policy(to_string(BanditPolicy::epsilon_greedy)), BanditPolicy::epsilon_greedy);
}

}  // namespace
}  // namespace collapsar
