#include "collapsar/model/equivalence.hpp"

#include <cmath>
#include <numeric>

#include "collapsar/errors.hpp"

namespace collapsar {

Model fold_to_single_embedding(const Model& me) {
  const ModelSpec& spec = me.spec();
  const Schema& schema = me.schema();
  const ParamStore& src = me.params();
  const std::size_t ne = spec.num_experts();
  const std::size_t nf = schema.num_fields();
  const ExpertOp op = spec.experts.front().op;
  const std::size_t layers = spec.experts.front().hidden.size();
  if (ne != spec.num_tables()) throw ConfigError("equivalence: one expert per table required");
  for (std::size_t e = 0; e < ne; ++e) {
    const ExpertSpec& es = spec.experts[e];
    if (!es.linear) throw ConfigError("equivalence: experts must be in linear diagnostic mode");
    if (es.op != op || (op != ExpertOp::fm && op != ExpertOp::flatdnn)) {
      throw ConfigError("equivalence: experts must all be fm or all flatdnn");
    }
    if (es.table != e || es.hidden.size() != layers) {
      throw ConfigError("equivalence: expert e must read table e with equal depth");
    }
  }
  for (std::size_t f = 0; f < nf; ++f) {
    if (schema.field(f).kind != FieldKind::categorical) {
      throw ConfigError("equivalence: categorical fields only");
    }
  }
  for (const auto& p : src) {
    if (src.blocks()[p.block].rfind("gate:", 0) != 0) continue;
    for (double v : p.value.values()) {
      if (v != 0.0) throw ConfigError("equivalence: gates must be uniform (zero gate parameters)");
    }
  }

  const std::vector<std::size_t>& dims = spec.table_dims;
  const std::size_t total = std::accumulate(dims.begin(), dims.end(), std::size_t{0});
  std::vector<std::size_t> dim_offset(ne, 0);
  for (std::size_t e = 1; e < ne; ++e) dim_offset[e] = dim_offset[e - 1] + dims[e - 1];

  ModelSpec single = spec;
  single.paradigm = "single";
  single.table_dims = {total};
  ExpertSpec ex = spec.experts.front();
  ex.table = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    std::size_t width = 0;
    for (std::size_t e = 0; e < ne; ++e) width += spec.experts[e].hidden[l];
    ex.hidden[l] = l + 1 == layers ? spec.experts.front().hidden[l] : width;
  }
  single.experts = {ex};
  single.table_routes.assign(spec.num_towers(), {Route::backward});
  single.expert_routes.assign(spec.num_towers(), {Route::backward});
  single.inference_towers.clear();
  Model out(schema, single, 0);
  ParamStore& dst = out.params();

  // Tables side by side.
  for (std::size_t f = 0; f < nf; ++f) {
    Matrix& m = dst.value(out.field_param(0, f));
    for (std::size_t e = 0; e < ne; ++e) {
      const Matrix& s = src.value(me.field_param(e, f));
      for (std::size_t r = 0; r < s.rows(); ++r) {
        for (std::size_t c = 0; c < dims[e]; ++c) m(r, dim_offset[e] + c) = s(r, c);
      }
    }
  }

  // Index of operator output coordinate c of expert e inside the folded operator output.
  auto input_index = [&](std::size_t e, std::size_t i) {
    if (op == ExpertOp::fm) return dim_offset[e] + i;
    const std::size_t f = i / dims[e];
    return f * total + dim_offset[e] + i % dims[e];
  };
  const double scale = 1.0 / static_cast<double>(ne * ne);  // gate 1/T times the 1/T mean

  std::vector<std::size_t> in_offset(ne, 0);
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix& w = dst.value(dst.find("e0.mlp.w" + std::to_string(l)));
    Matrix& b = dst.value(dst.find("e0.mlp.b" + std::to_string(l)));
    w.fill(0.0);
    b.fill(0.0);
    const bool last = l + 1 == layers;
    std::size_t out_offset = 0;
    std::vector<std::size_t> next_offset(ne, 0);
    for (std::size_t e = 0; e < ne; ++e) {
      const std::string prefix = "e" + std::to_string(e) + ".mlp.";
      const Matrix& sw = src.value(src.find(prefix + "w" + std::to_string(l)));
      const Matrix& sb = src.value(src.find(prefix + "b" + std::to_string(l)));
      const double k = last ? scale : 1.0;
      const std::size_t col0 = last ? 0 : out_offset;
      for (std::size_t i = 0; i < sw.rows(); ++i) {
        const std::size_t row = l == 0 ? input_index(e, i) : in_offset[e] + i;
        for (std::size_t j = 0; j < sw.cols(); ++j) w(row, col0 + j) += k * sw(i, j);
      }
      for (std::size_t j = 0; j < sw.cols(); ++j) b(0, col0 + j) += k * sb(0, j);
      next_offset[e] = out_offset;
      out_offset += sw.cols();
    }
    in_offset = next_offset;
  }

  // Towers are copied verbatim; the single gate is identically 1.
  for (auto& p : dst) {
    const std::string& block = dst.blocks()[p.block];
    if (block.rfind("tower:", 0) == 0) p.value = src.value(src.find(p.name));
  }
  return out;
}

EquivalenceResult me_equivalence_check(const Model& me, const std::vector<Sample>& samples,
                                       double tolerance) {
  const Model single = fold_to_single_embedding(me);
  EquivalenceResult r;
  r.samples = samples.size();
  for (const auto& s : samples) {
    const Vector a = me.logits(s);
    const Vector b = single.logits(s);
    for (std::size_t t = 0; t < a.size(); ++t) r.max_abs_diff = std::max(r.max_abs_diff, std::abs(a[t] - b[t]));
  }
  r.holds = r.max_abs_diff <= tolerance;
  return r;
}

EquivalenceResult me_equivalence_check(const std::vector<std::size_t>& dims, std::uint64_t seed,
                                       std::size_t n, ExpertOp op) {
  auto field = [](std::string name, std::int64_t card) {
    FieldSchema f;
    f.name = std::move(name);
    f.kind = FieldKind::categorical;
    f.cardinality = card;
    return f;
  };
  const Schema schema({field("a", 7), field("b", 5), field("c", 11)}, {"click"});
  BuildOptions opt;
  opt.op = op;
  opt.expert_hidden = {6, 5};
  opt.tower_hidden = {8, 4};
  ModelSpec spec = dims.size() == 1 ? single_build(dims[0], {"click"}, opt) : me_build(dims, {"click"}, opt);
  for (auto& e : spec.experts) e.linear = true;
  Model me(schema, spec, seed);

  // Non-zero biases so the folded bias path is exercised.
  Rng rng = Rng(seed).fork(7);
  for (auto& p : me.params()) {
    const std::string& block = me.params().blocks()[p.block];
    if (block.rfind("gate:", 0) == 0) continue;
    if (p.value.rows() == 1) {
      for (double& v : p.value.values()) v = 0.1 * rng.normal();
    }
  }
  std::vector<Sample> samples(n);
  for (auto& s : samples) {
    for (std::size_t f = 0; f < schema.num_fields(); ++f) {
      s.values.emplace_back(static_cast<std::int64_t>(
          rng.uniform_int(static_cast<std::uint64_t>(schema.field(f).cardinality))));
    }
    s.labels = {0};
  }
  return me_equivalence_check(me, samples);
}

}  // namespace collapsar
