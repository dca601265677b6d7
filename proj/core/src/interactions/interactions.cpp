#include "collapsar/interactions/interactions.hpp"

#include <numeric>

#include "collapsar/errors.hpp"

namespace collapsar {

namespace {

double value_at(std::span<const double> x, std::size_t i) { return x.empty() ? 1.0 : x[i]; }

void check_field_aware(const FieldAwareInput& in) {
  const std::size_t n = in.copies.size();
  if (in.key.size() != n || in.cls.size() != n) {
    throw InputError("interaction: key/class count differs from feature count");
  }
  if (!in.x.empty() && in.x.size() != n) throw InputError("interaction: value count mismatch");
  const std::size_t k = n ? in.copies[0].cols() : 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (in.copies[i].cols() != k) throw InputError("interaction: embedding widths differ");
    if (in.r && in.cls[i] >= in.r->size()) {
      throw ConfigError("interaction: class id " + std::to_string(in.cls[i]) + " out of range");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && in.key[j] >= in.copies[i].rows()) {
        throw ConfigError("interaction: feature " + std::to_string(i) + " has no copy for key " +
                          std::to_string(in.key[j]));
      }
    }
  }
}

std::vector<Matrix> single_copies(const Matrix& emb) {
  std::vector<Matrix> copies;
  copies.reserve(emb.rows());
  for (std::size_t i = 0; i < emb.rows(); ++i) {
    copies.emplace_back(1, emb.cols(), Vector(emb.row(i).begin(), emb.row(i).end()));
  }
  return copies;
}

double sum(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

Vector field_aware_vector(const FieldAwareInput& in) {
  check_field_aware(in);
  const std::size_t n = in.copies.size();
  const std::size_t k = n ? in.copies[0].cols() : 0;
  Vector out(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = value_at(in.x, i) * value_at(in.x, j) *
                       (in.r ? (*in.r)(in.cls[i], in.cls[j]) : 1.0);
      const auto a = in.copies[i].row(in.key[j]);
      const auto b = in.copies[j].row(in.key[i]);
      for (std::size_t c = 0; c < k; ++c) out[c] += w * a[c] * b[c];
    }
  }
  return out;
}

FieldAwareGrads field_aware_backward(const FieldAwareInput& in, std::span<const double> upstream) {
  check_field_aware(in);
  const std::size_t n = in.copies.size();
  const std::size_t k = n ? in.copies[0].cols() : 0;
  if (upstream.size() != k) throw InputError("interaction: upstream width mismatch");
  FieldAwareGrads g;
  g.copies.reserve(n);
  for (const auto& m : in.copies) g.copies.emplace_back(m.rows(), m.cols());
  if (in.r) g.r = SymmetricWeights(in.r->size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double xx = value_at(in.x, i) * value_at(in.x, j);
      const double rw = in.r ? (*in.r)(in.cls[i], in.cls[j]) : 1.0;
      const auto a = in.copies[i].row(in.key[j]);
      const auto b = in.copies[j].row(in.key[i]);
      auto da = g.copies[i].row(in.key[j]);
      auto db = g.copies[j].row(in.key[i]);
      double inner = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        da[c] += xx * rw * upstream[c] * b[c];
        db[c] += xx * rw * upstream[c] * a[c];
        inner += upstream[c] * a[c] * b[c];
      }
      if (in.r) g.r(in.cls[i], in.cls[j]) += xx * inner;
    }
  }
  return g;
}

// -- FM ---------------------------------------------------------------------

Vector fm_vector(const Matrix& emb, std::span<const double> x) {
  const std::size_t n = emb.rows();
  const std::size_t k = emb.cols();
  if (!x.empty() && x.size() != n) throw InputError("fm: value count mismatch");
  // (sum x_i v_i)^2 - sum x_i^2 v_i^2, halved.
  Vector s(k, 0.0);
  Vector sq(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = value_at(x, i);
    const auto v = emb.row(i);
    for (std::size_t c = 0; c < k; ++c) {
      s[c] += xi * v[c];
      sq[c] += xi * xi * v[c] * v[c];
    }
  }
  for (std::size_t c = 0; c < k; ++c) s[c] = 0.5 * (s[c] * s[c] - sq[c]);
  return s;
}

double fm_score(const Matrix& emb, std::span<const double> x) { return sum(fm_vector(emb, x)); }

Matrix fm_backward(const Matrix& emb, std::span<const double> upstream, std::span<const double> x) {
  const std::size_t n = emb.rows();
  const std::size_t k = emb.cols();
  if (upstream.size() != k) throw InputError("fm: upstream width mismatch");
  if (!x.empty() && x.size() != n) throw InputError("fm: value count mismatch");
  Vector s(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) axpy(value_at(x, i), emb.row(i), s);
  Matrix g(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = value_at(x, i);
    const auto v = emb.row(i);
    auto d = g.row(i);
    for (std::size_t c = 0; c < k; ++c) d[c] = upstream[c] * xi * (s[c] - xi * v[c]);
  }
  return g;
}

// -- FFM / FwFM / GwPFM -------------------------------------------------------

double ffm_score(const std::vector<Matrix>& copies, std::span<const std::size_t> fields,
                 std::span<const double> x) {
  return sum(field_aware_vector({copies, fields, fields, nullptr, x}));
}

double fwfm_score(const Matrix& emb, std::span<const std::size_t> fields,
                  const SymmetricWeights& r, std::span<const double> x) {
  const auto copies = single_copies(emb);
  const std::vector<std::size_t> key(emb.rows(), 0);
  return sum(field_aware_vector({copies, key, fields, &r, x}));
}

Vector gwpfm_interaction(const std::vector<Matrix>& part_emb, std::span<const std::size_t> parts,
                         std::span<const std::size_t> groups, const SymmetricWeights& r,
                         Reduce reduce, std::span<const double> x) {
  Vector v = field_aware_vector({part_emb, parts, groups, &r, x});
  if (reduce == Reduce::scalar) return {sum(v)};
  return v;
}

// -- Projected --------------------------------------------------------------

Vector projected_pair(std::span<const double> ei, std::span<const double> ej, const Matrix& m) {
  if (ei.size() != m.rows() || ej.size() != m.cols()) {
    throw InputError("projected_pair: shapes must be K, K x K, K");
  }
  Vector out(m.cols(), 0.0);
  for (std::size_t a = 0; a < m.rows(); ++a) axpy(ei[a], m.row(a), out);
  for (std::size_t c = 0; c < out.size(); ++c) out[c] *= ej[c];
  return out;
}

ProjectedPairGrads projected_pair_backward(std::span<const double> ei, std::span<const double> ej,
                                           const Matrix& m, std::span<const double> upstream) {
  if (ei.size() != m.rows() || ej.size() != m.cols() || upstream.size() != m.cols()) {
    throw InputError("projected_pair: shapes must be K, K x K, K");
  }
  ProjectedPairGrads g{Vector(ei.size(), 0.0), Vector(ej.size(), 0.0), Matrix(m.rows(), m.cols())};
  Vector proj(m.cols(), 0.0);
  for (std::size_t a = 0; a < m.rows(); ++a) axpy(ei[a], m.row(a), proj);
  Vector gj(m.cols());
  for (std::size_t c = 0; c < m.cols(); ++c) {
    g.ej[c] = upstream[c] * proj[c];
    gj[c] = upstream[c] * ej[c];
  }
  for (std::size_t a = 0; a < m.rows(); ++a) {
    g.ei[a] = dot(m.row(a), gj);
    axpy(ei[a], gj, g.m.row(a));
  }
  return g;
}

std::size_t field_pair_index(std::size_t a, std::size_t b, std::size_t num_fields) {
  if (!(a < b && b < num_fields)) throw InputError("field_pair_index: need a < b < fields");
  return a * num_fields - a * (a + 1) / 2 + (b - a - 1);
}

Vector projected_interaction(const Matrix& emb, const std::vector<Matrix>& projections) {
  const std::size_t n = emb.rows();
  if (projections.size() != (n ? n * (n - 1) / 2 : 0)) throw InputError("projected: one matrix per field pair");
  Vector out(emb.cols(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      axpy(1.0, projected_pair(emb.row(i), emb.row(j), projections[field_pair_index(i, j, n)]), out);
    }
  }
  return out;
}

ProjectedGrads projected_interaction_backward(const Matrix& emb,
                                              const std::vector<Matrix>& projections,
                                              std::span<const double> upstream) {
  const std::size_t n = emb.rows();
  if (projections.size() != (n ? n * (n - 1) / 2 : 0)) throw InputError("projected: one matrix per field pair");
  ProjectedGrads g{Matrix(n, emb.cols()), {}};
  g.projections.reserve(projections.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const std::size_t p = field_pair_index(i, j, n);
      auto pg = projected_pair_backward(emb.row(i), emb.row(j), projections[p], upstream);
      axpy(1.0, pg.ei, g.emb.row(i));
      axpy(1.0, pg.ej, g.emb.row(j));
      g.projections.push_back(std::move(pg.m));
    }
  }
  return g;
}

// -- Candidate scoring --------------------------------------------------------

PartPooledRequest gwpfm_pool_request(const PartFeatures& user, const SymmetricWeights& r,
                                     std::size_t num_parts, PairEvalCounter& counter) {
  const std::size_t n = user.copies.size();
  if (user.parts.size() != n || user.groups.size() != n || (!user.x.empty() && user.x.size() != n)) {
    throw InputError("candidate scoring: ragged part-1 features");
  }
  PartPooledRequest req;
  req.num_parts = num_parts;
  req.num_groups = r.size();
  req.dim = n ? user.copies[0].cols() : 0;
  const std::size_t k = req.dim;
  const std::size_t groups = req.num_groups;
  for (std::size_t p = 0; p < num_parts; ++p) req.pooled.emplace_back(groups, k);
  req.present.assign(groups, false);
  Matrix squares(groups, k);
  for (std::size_t i = 0; i < n; ++i) {
    if (user.parts[i] != 0) throw ConfigError("candidate scoring: request features must be part 0");
    if (user.groups[i] >= groups) throw ConfigError("candidate scoring: group id out of range");
    if (user.copies[i].rows() < num_parts || user.copies[i].cols() != k) {
      throw ConfigError("candidate scoring: request feature lacks part copies");
    }
    const double xi = value_at(user.x, i);
    const std::size_t g = user.groups[i];
    req.present[g] = true;
    for (std::size_t p = 0; p < num_parts; ++p) axpy(xi, user.copies[i].row(p), req.pooled[p].row(g));
    const auto e0 = user.copies[i].row(0);
    auto sq = squares.row(g);
    for (std::size_t c = 0; c < k; ++c) sq[c] += xi * xi * e0[c] * e0[c];
  }
  req.part1_term.assign(k, 0.0);
  const Matrix& s0 = req.pooled[0];
  for (std::size_t g = 0; g < groups; ++g) {
    if (!req.present[g]) continue;
    for (std::size_t h = g; h < groups; ++h) {
      if (!req.present[h]) continue;
      ++counter.part1;
      const double w = r(g, h);
      const auto a = s0.row(g);
      const auto b = s0.row(h);
      if (g == h) {
        const auto sq = squares.row(g);
        for (std::size_t c = 0; c < k; ++c) req.part1_term[c] += w * 0.5 * (a[c] * a[c] - sq[c]);
      } else {
        for (std::size_t c = 0; c < k; ++c) req.part1_term[c] += w * a[c] * b[c];
      }
    }
  }
  return req;
}

std::vector<Vector> gwpfm_score_candidates(const PartPooledRequest& req,
                                           const std::vector<PartFeatures>& candidates,
                                           const SymmetricWeights& r, Reduce reduce,
                                           PairEvalCounter& counter) {
  if (r.size() != req.num_groups) throw ConfigError("candidate scoring: weights changed shape");
  std::vector<Vector> scores;
  scores.reserve(candidates.size());
  const std::size_t k = req.dim;
  for (const auto& cand : candidates) {
    const std::size_t n = cand.copies.size();
    if (cand.parts.size() != n || cand.groups.size() != n || (!cand.x.empty() && cand.x.size() != n)) {
      throw InputError("candidate scoring: ragged candidate features");
    }
    Vector v = req.part1_term;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t pj = cand.parts[j];
      if (pj == 0 || pj >= req.num_parts) throw ConfigError("candidate scoring: candidate part out of range");
      if (cand.groups[j] >= req.num_groups) throw ConfigError("candidate scoring: group id out of range");
      if (cand.copies[j].cols() != k) throw InputError("candidate scoring: embedding widths differ");
      const double xj = value_at(cand.x, j);
      const auto ej = cand.copies[j].row(0);
      for (std::size_t g = 0; g < req.num_groups; ++g) {
        if (!req.present[g]) continue;
        ++counter.cross;
        const double w = xj * r(g, cand.groups[j]);
        const auto pooled = req.pooled[pj].row(g);
        for (std::size_t c = 0; c < k; ++c) v[c] += w * pooled[c] * ej[c];
      }
    }
    counter.part2 += n * (n - 1) / 2;
    axpy(1.0, field_aware_vector({cand.copies, cand.parts, cand.groups, &r, cand.x}), v);
    if (reduce == Reduce::scalar) v = {sum(v)};
    scores.push_back(std::move(v));
  }
  return scores;
}

}  // namespace collapsar
