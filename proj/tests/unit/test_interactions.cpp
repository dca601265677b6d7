#include <numeric>

#include "collapsar/errors.hpp"
#include "collapsar/interactions/interactions.hpp"
#include "test_support.hpp"

namespace collapsar {
namespace {

using testing::random_matrix;
using testing::random_vector;

double dot_rows(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t c = 0; c < a.size(); ++c) s += a[c] * b[c];
  return s;
}

SymmetricWeights random_weights(std::size_t n, Rng& rng) {
  SymmetricWeights r(n);
  for (double& v : r.values()) v = rng.normal();
  return r;
}

double sum(const Vector& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

TEST(SymmetricWeights, StorageIsSymmetricAndDistinct) {
  SymmetricWeights r(5);
  double next = 1;
  for (std::size_t a = 0; a < 5; ++a) {
    for (std::size_t b = a; b < 5; ++b) r(a, b) = next++;
  }
  EXPECT_EQ(next - 1, 15.0);
  std::vector<double> seen(r.values().begin(), r.values().end());
  std::sort(seen.begin(), seen.end());
  for (std::size_t i = 0; i < seen.size(); ++i) EXPECT_EQ(seen[i], static_cast<double>(i + 1));
  for (std::size_t a = 0; a < 5; ++a) {
    for (std::size_t b = 0; b < 5; ++b) EXPECT_EQ(r(a, b), r(b, a));
  }
}

TEST(Fm, HandExamples) {
  EXPECT_EQ(fm_score(Matrix::from_rows({{1, 0}, {0, 1}})), 0.0);
  EXPECT_EQ(fm_score(Matrix::from_rows({{1, 2}, {3, 4}})), 11.0);
  EXPECT_EQ(fm_score(Matrix::from_rows({{1, 2}})), 0.0);
}

TEST(Fm, MatchesDoubleLoop) {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    const Matrix e = random_matrix(5, 6, rng);
    const Vector x = random_vector(5, rng);
    double expect = 0;
    Vector expect_vec(6, 0.0);
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = i + 1; j < 5; ++j) {
        expect += x[i] * x[j] * dot_rows(e.row(i), e.row(j));
        for (std::size_t c = 0; c < 6; ++c) expect_vec[c] += x[i] * x[j] * e(i, c) * e(j, c);
      }
    }
    EXPECT_NEAR(fm_score(e, x), expect, 1e-12);
    const Vector v = fm_vector(e, x);
    for (std::size_t c = 0; c < 6; ++c) EXPECT_NEAR(v[c], expect_vec[c], 1e-12);
  }
}

TEST(Fm, SymmetricUnderReordering) {
  Rng rng(2);
  const Matrix e = random_matrix(6, 4, rng);
  const Vector x = random_vector(6, rng);
  std::vector<std::size_t> perm(6);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  Matrix pe(6, 4);
  Vector px(6);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t c = 0; c < 4; ++c) pe(i, c) = e(perm[i], c);
    px[i] = x[perm[i]];
  }
  EXPECT_NEAR(fm_score(e, x), fm_score(pe, px), 1e-12);
}

TEST(Fm, BackwardPassesGradCheck) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    Rng rng(seed);
    const std::size_t n = 2 + rng.uniform_int(5);
    const std::size_t k = 1 + rng.uniform_int(8);
    const Vector x = random_vector(n, rng);
    LambdaOp op(
        n * k, k,
        [&](std::span<const double> in) { return fm_vector(Matrix(n, k, Vector(in.begin(), in.end())), x); },
        [&](std::span<const double> in, std::span<const double> up) {
          const Matrix g = fm_backward(Matrix(n, k, Vector(in.begin(), in.end())), up, x);
          return Vector(g.values().begin(), g.values().end());
        });
    const Matrix e = random_matrix(n, k, rng);
    EXPECT_LT(grad_check(op, e.values(), kGradCheckEps, seed), 1e-4);
  }
}

TEST(Ffm, TiedCopiesReduceToFm) {
  Rng rng(3);
  const Matrix e = random_matrix(4, 5, rng);
  std::vector<Matrix> copies;
  for (std::size_t i = 0; i < 4; ++i) {
    Matrix c(3, 5);
    for (std::size_t f = 0; f < 3; ++f) {
      for (std::size_t k = 0; k < 5; ++k) c(f, k) = e(i, k);
    }
    copies.push_back(c);
  }
  const std::vector<std::size_t> fields = {0, 1, 2, 2};
  EXPECT_NEAR(ffm_score(copies, fields), fm_score(e), 1e-12);
}

TEST(Ffm, TwoFieldHandComputation) {
  // Feature 0 in field 0, feature 1 in field 1: <v_{0,1}, v_{1,0}>.
  std::vector<Matrix> copies = {Matrix::from_rows({{9, 9}, {1, 2}}), Matrix::from_rows({{3, -1}, {7, 7}})};
  const std::vector<std::size_t> fields = {0, 1};
  EXPECT_EQ(ffm_score(copies, fields), 1.0 * 3 + 2.0 * -1);
  EXPECT_EQ(ffm_score(copies, fields, Vector{2, 0.5}), 1.0);
}

TEST(Ffm, MatchesDoubleLoopAndRejectsMissingCopy) {
  Rng rng(4);
  const std::size_t n = 6;
  const std::size_t nf = 4;
  std::vector<Matrix> copies;
  std::vector<std::size_t> fields;
  for (std::size_t i = 0; i < n; ++i) {
    copies.push_back(random_matrix(nf, 3, rng));
    fields.push_back(rng.uniform_int(nf));
  }
  const Vector x = random_vector(n, rng);
  double expect = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      expect += x[i] * x[j] * dot_rows(copies[i].row(fields[j]), copies[j].row(fields[i]));
    }
  }
  EXPECT_NEAR(ffm_score(copies, fields, x), expect, 1e-12);
  copies[2] = random_matrix(2, 3, rng);
  fields = {3, 3, 0, 3, 3, 3};
  EXPECT_THROW(ffm_score(copies, fields), ConfigError);
}

TEST(Fwfm, ReductionsAndOracle) {
  Rng rng(5);
  const Matrix e = random_matrix(5, 4, rng);
  const std::vector<std::size_t> fields = {0, 1, 1, 2, 0};
  EXPECT_EQ(fwfm_score(e, fields, SymmetricWeights(3, 0.0)), 0.0);
  EXPECT_NEAR(fwfm_score(e, fields, SymmetricWeights(3, 1.0)), fm_score(e), 1e-12);
  const auto r = random_weights(3, rng);
  const Vector x = random_vector(5, rng);
  double expect = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = i + 1; j < 5; ++j) {
      expect += x[i] * x[j] * r(fields[i], fields[j]) * dot_rows(e.row(i), e.row(j));
    }
  }
  EXPECT_NEAR(fwfm_score(e, fields, r, x), expect, 1e-12);
}

struct GwInstance {
  std::vector<Matrix> emb;
  std::vector<std::size_t> parts;
  std::vector<std::size_t> groups;
  SymmetricWeights r;
  Vector x;
};

GwInstance random_gw(std::size_t n, std::size_t p, std::size_t g, std::size_t k, Rng& rng) {
  GwInstance in;
  for (std::size_t i = 0; i < n; ++i) {
    in.emb.push_back(random_matrix(p, k, rng));
    in.parts.push_back(rng.uniform_int(p));
    in.groups.push_back(rng.uniform_int(g));
  }
  in.r = random_weights(g, rng);
  in.x = random_vector(n, rng);
  return in;
}

Vector gw_oracle(const GwInstance& in) {
  const std::size_t k = in.emb[0].cols();
  Vector out(k, 0.0);
  for (std::size_t i = 0; i < in.emb.size(); ++i) {
    for (std::size_t j = i + 1; j < in.emb.size(); ++j) {
      const double w = in.x[i] * in.x[j] * in.r(in.groups[i], in.groups[j]);
      for (std::size_t c = 0; c < k; ++c) {
        out[c] += w * in.emb[i](in.parts[j], c) * in.emb[j](in.parts[i], c);
      }
    }
  }
  return out;
}

TEST(Gwpfm, DegeneratesToFm) {
  Rng rng(6);
  const Matrix e = random_matrix(5, 4, rng);
  std::vector<Matrix> emb;
  for (std::size_t i = 0; i < 5; ++i) emb.push_back(Matrix(1, 4, Vector(e.row(i).begin(), e.row(i).end())));
  const std::vector<std::size_t> zeros(5, 0);
  const auto s = gwpfm_interaction(emb, zeros, zeros, SymmetricWeights(1, 1.0), Reduce::scalar);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_NEAR(s[0], fm_score(e), 1e-12);
}

TEST(Gwpfm, MatchesOracleAndScalarIsCoordinateSum) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    const auto in = random_gw(7, 2, 3, 5, rng);
    const Vector expect = gw_oracle(in);
    const Vector v = gwpfm_interaction(in.emb, in.parts, in.groups, in.r, Reduce::vector, in.x);
    for (std::size_t c = 0; c < 5; ++c) EXPECT_NEAR(v[c], expect[c], 1e-12);
    const Vector s = gwpfm_interaction(in.emb, in.parts, in.groups, in.r, Reduce::scalar, in.x);
    EXPECT_NEAR(s[0], sum(v), 1e-12);
  }
}

TEST(Gwpfm, RejectsOutOfRangeIds) {
  Rng rng(7);
  auto in = random_gw(4, 2, 2, 3, rng);
  in.groups[1] = 2;
  EXPECT_THROW(gwpfm_interaction(in.emb, in.parts, in.groups, in.r, Reduce::vector), ConfigError);
  in.groups[1] = 0;
  in.parts[2] = 5;
  EXPECT_THROW(gwpfm_interaction(in.emb, in.parts, in.groups, in.r, Reduce::vector), ConfigError);
}

TEST(FieldAware, BackwardPassesGradCheck) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    Rng rng(seed);
    const std::size_t n = 2 + rng.uniform_int(5);
    const std::size_t copies_per = 1 + rng.uniform_int(3);
    const std::size_t classes = 1 + rng.uniform_int(3);
    const std::size_t k = 1 + rng.uniform_int(8);
    std::vector<std::size_t> key;
    std::vector<std::size_t> cls;
    std::vector<std::pair<std::size_t, std::size_t>> shapes;
    for (std::size_t i = 0; i < n; ++i) {
      key.push_back(rng.uniform_int(copies_per));
      cls.push_back(rng.uniform_int(classes));
      shapes.emplace_back(copies_per, k);
    }
    const std::size_t r_size = classes * (classes + 1) / 2;
    shapes.emplace_back(1, r_size);
    const Vector x = random_vector(n, rng);
    auto split = [&](std::span<const double> in) {
      auto parts = testing::unpack(in, shapes);
      SymmetricWeights r(classes);
      std::copy(parts.back().values().begin(), parts.back().values().end(), r.values().begin());
      parts.pop_back();
      return std::pair{parts, r};
    };
    LambdaOp op(
        n * copies_per * k + r_size, k,
        [&](std::span<const double> in) {
          auto [copies, r] = split(in);
          return field_aware_vector({copies, key, cls, &r, x});
        },
        [&](std::span<const double> in, std::span<const double> up) {
          auto [copies, r] = split(in);
          auto g = field_aware_backward({copies, key, cls, &r, x}, up);
          Vector out = testing::pack(g.copies);
          out.insert(out.end(), g.r.values().begin(), g.r.values().end());
          return out;
        });
    Vector init;
    for (std::size_t i = 0; i < n * copies_per * k + r_size; ++i) init.push_back(rng.normal());
    EXPECT_LT(grad_check(op, init, kGradCheckEps, seed), 1e-4) << "seed " << seed;
  }
}

TEST(FieldAware, UnweightedBackwardHasNoWeightGradient) {
  Rng rng(8);
  std::vector<Matrix> copies = {random_matrix(1, 3, rng), random_matrix(1, 3, rng)};
  const std::vector<std::size_t> zero = {0, 0};
  const auto g = field_aware_backward({copies, zero, zero}, Vector{1, 1, 1});
  EXPECT_EQ(g.r.size(), 0u);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(g.copies[0](0, c), copies[1](0, c), 1e-15);
}

TEST(Projected, PairExamples) {
  Rng rng(9);
  const Vector a = random_vector(4, rng);
  const Vector b = random_vector(4, rng);
  const Vector id = projected_pair(a, b, Matrix::identity(4));
  for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(id[c], a[c] * b[c], 1e-15);
  for (double v : projected_pair(a, b, Matrix(4, 4))) EXPECT_EQ(v, 0.0);
  const Matrix m = random_matrix(4, 4, rng);
  const Vector out = projected_pair(a, b, m);
  for (std::size_t c = 0; c < 4; ++c) {
    double am = 0;
    for (std::size_t r = 0; r < 4; ++r) am += a[r] * m(r, c);
    EXPECT_NEAR(out[c], am * b[c], 1e-14);
  }
  EXPECT_THROW(projected_pair(a, b, Matrix(3, 4)), InputError);
  EXPECT_THROW(projected_pair(a, Vector{1, 2}, m), InputError);
}

TEST(Projected, IdentityProjectionsReproduceFm) {
  Rng rng(10);
  const Matrix e = random_matrix(5, 3, rng);
  const std::vector<Matrix> proj(10, Matrix::identity(3));
  const Vector v = projected_interaction(e, proj);
  const Vector f = fm_vector(e);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(v[c], f[c], 1e-12);
  EXPECT_EQ(field_pair_index(0, 1, 5), 0u);
  EXPECT_EQ(field_pair_index(0, 4, 5), 3u);
  EXPECT_EQ(field_pair_index(1, 2, 5), 4u);
  EXPECT_EQ(field_pair_index(3, 4, 5), 9u);
  EXPECT_EQ(projected_interaction(Matrix(0, 3), {}), Vector(3, 0.0));
  EXPECT_THROW(projected_interaction(e, std::vector<Matrix>(9, Matrix::identity(3))), InputError);
}

TEST(Projected, BackwardPassesGradCheck) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    Rng rng(seed);
    const std::size_t n = 2 + rng.uniform_int(4);
    const std::size_t k = 1 + rng.uniform_int(8);
    const std::size_t pairs = n * (n - 1) / 2;
    std::vector<std::pair<std::size_t, std::size_t>> shapes = {{n, k}};
    for (std::size_t p = 0; p < pairs; ++p) shapes.emplace_back(k, k);
    auto split = [&](std::span<const double> in) {
      auto parts = testing::unpack(in, shapes);
      Matrix emb = parts.front();
      parts.erase(parts.begin());
      return std::pair{emb, parts};
    };
    LambdaOp op(
        n * k + pairs * k * k, k,
        [&](std::span<const double> in) {
          auto [emb, proj] = split(in);
          return projected_interaction(emb, proj);
        },
        [&](std::span<const double> in, std::span<const double> up) {
          auto [emb, proj] = split(in);
          auto g = projected_interaction_backward(emb, proj, up);
          std::vector<Matrix> all = {g.emb};
          all.insert(all.end(), g.projections.begin(), g.projections.end());
          return testing::pack(all);
        });
    Vector init;
    for (std::size_t i = 0; i < op.input_size(); ++i) init.push_back(rng.normal());
    EXPECT_LT(grad_check(op, init, kGradCheckEps, seed), 1e-4) << "seed " << seed;
  }
}

PartFeatures random_side(std::size_t n, std::size_t part_lo, std::size_t parts, std::size_t groups,
                         std::size_t k, Rng& rng) {
  PartFeatures f;
  for (std::size_t i = 0; i < n; ++i) {
    f.copies.push_back(random_matrix(parts, k, rng));
    f.parts.push_back(part_lo + rng.uniform_int(parts - part_lo));
    f.groups.push_back(rng.uniform_int(groups));
    f.x.push_back(rng.uniform(0.5, 1.5));
  }
  return f;
}

Vector naive_candidate(const PartFeatures& user, const PartFeatures& cand, const SymmetricWeights& r,
                       Reduce reduce) {
  std::vector<Matrix> emb = user.copies;
  emb.insert(emb.end(), cand.copies.begin(), cand.copies.end());
  std::vector<std::size_t> parts = user.parts;
  parts.insert(parts.end(), cand.parts.begin(), cand.parts.end());
  std::vector<std::size_t> groups = user.groups;
  groups.insert(groups.end(), cand.groups.begin(), cand.groups.end());
  Vector x = user.x;
  x.insert(x.end(), cand.x.begin(), cand.x.end());
  return gwpfm_interaction(emb, parts, groups, r, reduce, x);
}

TEST(CandidateScoring, MatchesNaiveForSixteenCandidates) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const std::size_t parts = 3;
    const std::size_t groups = 4;
    const std::size_t k = 8;
    const PartFeatures user = random_side(9, 0, 1, groups, k, rng);
    PartFeatures user_full = user;
    for (auto& m : user_full.copies) m = random_matrix(parts, k, rng);
    const auto r = random_weights(groups, rng);
    std::vector<PartFeatures> cands;
    for (int c = 0; c < 16; ++c) cands.push_back(random_side(5, 1, parts, groups, k, rng));
    for (Reduce reduce : {Reduce::vector, Reduce::scalar}) {
      PairEvalCounter counter;
      const auto req = gwpfm_pool_request(user_full, r, parts, counter);
      const auto scores = gwpfm_score_candidates(req, cands, r, reduce, counter);
      ASSERT_EQ(scores.size(), 16u);
      double worst = 0;
      for (std::size_t c = 0; c < 16; ++c) {
        const Vector naive = naive_candidate(user_full, cands[c], r, reduce);
        ASSERT_EQ(naive.size(), scores[c].size());
        for (std::size_t i = 0; i < naive.size(); ++i) worst = std::max(worst, std::abs(naive[i] - scores[c][i]));
      }
      EXPECT_LT(worst, 1e-9);
    }
  }
}

TEST(CandidateScoring, PartOneWorkIsIndependentOfCandidateCount) {
  Rng rng(21);
  const PartFeatures user = random_side(6, 0, 1, 3, 4, rng);
  PartFeatures full = user;
  for (auto& m : full.copies) m = random_matrix(2, 4, rng);
  const auto r = random_weights(3, rng);
  std::vector<std::size_t> part1;
  std::vector<std::size_t> cross;
  for (std::size_t c : {1, 4, 16, 64}) {
    std::vector<PartFeatures> cands;
    for (std::size_t i = 0; i < c; ++i) cands.push_back(random_side(3, 1, 2, 3, 4, rng));
    PairEvalCounter counter;
    const auto req = gwpfm_pool_request(full, r, 2, counter);
    const auto scores = gwpfm_score_candidates(req, cands, r, Reduce::vector, counter);
    if (c == 1) {
      const Vector naive = naive_candidate(full, cands[0], r, Reduce::vector);
      for (std::size_t i = 0; i < naive.size(); ++i) EXPECT_NEAR(scores[0][i], naive[i], 1e-12);
    }
    part1.push_back(counter.part1);
    cross.push_back(counter.cross);
  }
  for (std::size_t v : part1) EXPECT_EQ(v, part1.front());
  EXPECT_GT(part1.front(), 0u);
  EXPECT_LT(cross[0], cross[3]);
}

TEST(CandidateScoring, RejectsMisplacedParts) {
  Rng rng(22);
  PartFeatures user = random_side(3, 0, 1, 2, 4, rng);
  for (auto& m : user.copies) m = random_matrix(2, 4, rng);
  const auto r = random_weights(2, rng);
  PairEvalCounter counter;
  const auto req = gwpfm_pool_request(user, r, 2, counter);
  PartFeatures bad = random_side(2, 1, 2, 2, 4, rng);
  bad.parts[0] = 0;
  EXPECT_THROW(gwpfm_score_candidates(req, {bad}, r, Reduce::vector, counter), ConfigError);
  user.parts[0] = 1;
  EXPECT_THROW(gwpfm_pool_request(user, r, 2, counter), ConfigError);
}

}  // namespace
}  // namespace collapsar
