#include "collapsar/model/model.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "collapsar/errors.hpp"
#include "collapsar/interactions/interactions.hpp"
#include "collapsar/numerics/ops.hpp"

namespace collapsar {

namespace {

SymmetricWeights weights_from(const Matrix& m, std::size_t n) {
  SymmetricWeights r(n);
  std::copy(m.values().begin(), m.values().end(), r.values().begin());
  return r;
}

/// Rows of `m` reshaped: row f of a (fields x copies*dim) matrix into a
/// copies x dim matrix.
Matrix copies_of(const Matrix& rows, std::size_t field, std::size_t copies, std::size_t dim) {
  const auto r = rows.row(field);
  return Matrix(copies, dim, Vector(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(copies * dim)));
}

Matrix copy_zero(const Matrix& rows, std::size_t dim) {
  Matrix out(rows.rows(), dim);
  for (std::size_t f = 0; f < rows.rows(); ++f) {
    std::copy_n(rows.row(f).begin(), dim, out.row(f).begin());
  }
  return out;
}

std::int64_t numeric_code(double value, std::int64_t max_value) {
  if (!std::isfinite(value)) throw InputError("numeric feature is not finite");
  return std::clamp<std::int64_t>(std::llround(value), 0, max_value);
}

}  // namespace

Model::Model(Schema schema, ModelSpec spec, std::uint64_t seed)
    : schema_(std::move(schema)), spec_(std::move(spec)) {
  spec_.validate();
  build(seed);
}

std::size_t Model::tower_index(const std::string& task) const {
  for (std::size_t t = 0; t < spec_.towers.size(); ++t) {
    if (spec_.towers[t] == task) return t;
  }
  throw ConfigError("model has no tower for task '" + task + "'");
}

std::size_t Model::op_output_dim(const ExpertLayout& ex) const {
  const std::size_t dim = tables_[ex.table].dim;
  switch (ex.op) {
    case ExpertOp::flatdnn:
      return schema_.num_fields() * dim;
    case ExpertOp::tim:
      return ex.temporal ? 2 * dim : dim;
    default:
      return dim;
  }
}

void Model::build(std::uint64_t seed) {
  const std::size_t nf = schema_.num_fields();
  if (nf == 0) throw ConfigError("model needs at least one field");
  const Rng root(seed);

  // Table layouts: copies required by readers, fields each table serves.
  tables_.assign(spec_.num_tables(), {});
  for (std::size_t t = 0; t < spec_.num_tables(); ++t) {
    tables_[t].dim = spec_.table_dims[t];
    tables_[t].fields.assign(nf, {});
  }
  std::vector<std::size_t> copies_needed(spec_.num_tables(), 0);
  experts_.assign(spec_.num_experts(), {});
  for (std::size_t e = 0; e < spec_.num_experts(); ++e) {
    const ExpertSpec& es = spec_.experts[e];
    ExpertLayout& ex = experts_[e];
    ex.op = es.op;
    ex.table = es.table;
    ex.temporal = es.temporal;
    std::size_t copies = 1;
    if (es.op == ExpertOp::gwpfm) copies = static_cast<std::size_t>(schema_.num_parts());
    if (es.op == ExpertOp::ffm) copies = nf;
    if (copies_needed[es.table] != 0 && copies_needed[es.table] != copies) {
      throw ConfigError("experts sharing table " + std::to_string(es.table) +
                        " need different embedding copies");
    }
    copies_needed[es.table] = copies;
    auto& slots = tables_[es.table].fields;
    if (es.op == ExpertOp::tim) {
      std::optional<std::size_t> seq;
      if (!es.sequence_field.empty()) {
        seq = schema_.index_of(es.sequence_field);
      } else {
        for (std::size_t f = 0; f < nf && !seq; ++f) {
          if (schema_.field(f).kind == FieldKind::sequence) seq = f;
        }
      }
      if (!seq || schema_.field(*seq).kind != FieldKind::sequence) {
        throw ConfigError("tim expert needs a sequence field");
      }
      std::optional<std::size_t> target;
      if (!es.target_field.empty()) {
        target = schema_.index_of(es.target_field);
      } else {
        for (std::size_t f = 0; f < nf && !target; ++f) {
          const auto& fs = schema_.field(f);
          if (fs.kind == FieldKind::categorical && fs.cardinality == schema_.field(*seq).cardinality) {
            target = f;
          }
        }
      }
      if (!target || schema_.field(*target).kind != FieldKind::categorical ||
          schema_.field(*target).cardinality != schema_.field(*seq).cardinality) {
        throw ConfigError("tim expert needs a categorical target sharing the sequence vocabulary");
      }
      ex.seq_field = *seq;
      ex.target_field = *target;
      slots[*target].used = true;
    } else {
      for (auto& slot : slots) slot.used = true;
    }
  }

  // Table parameters.
  for (std::size_t t = 0; t < spec_.num_tables(); ++t) {
    TableLayout& tl = tables_[t];
    tl.copies = copies_needed[t];
    tl.block = params_.add_block("table:" + std::to_string(t));
    Rng rng = root.fork(100 + t);
    const std::size_t width = tl.copies * tl.dim;
    for (std::size_t f = 0; f < nf; ++f) {
      FieldSlot& slot = tl.fields[f];
      if (!slot.used) continue;
      const FieldSchema& fs = schema_.field(f);
      const std::string prefix = "t" + std::to_string(t) + "." + fs.name;
      switch (fs.kind) {
        case FieldKind::categorical:
        case FieldKind::sequence: {
          Matrix m(static_cast<std::size_t>(fs.cardinality), width);
          for (double& v : m.values()) v = spec_.embedding_scale * rng.normal();
          slot.param = params_.add(tl.block, prefix, std::move(m));
          break;
        }
        case FieldKind::numeric: {
          slot.mns = MNSConfig::covering(fs.max_value, width);
          MNSTables tabs = MNSTables::random(slot.mns, rng, spec_.embedding_scale);
          for (std::size_t s = 0; s < tabs.tables.size(); ++s) {
            slot.mns_params.push_back(params_.add(
                tl.block, prefix + ".mns" + std::to_string(slot.mns.bases[s]), std::move(tabs.tables[s])));
          }
          break;
        }
        case FieldKind::pretrained_embedding: {
          Matrix m(fs.dim, width);
          for (double& v : m.values()) v = spec_.embedding_scale * rng.normal();
          slot.param = params_.add(tl.block, prefix + ".proj", std::move(m));
          break;
        }
      }
    }
  }

  // Experts.
  const std::size_t out_dim = spec_.expert_output_dim();
  for (std::size_t e = 0; e < spec_.num_experts(); ++e) {
    ExpertLayout& ex = experts_[e];
    const ExpertSpec& es = spec_.experts[e];
    ex.block = params_.add_block("expert:" + std::to_string(e));
    Rng rng = root.fork(200 + e);
    const std::size_t dim = tables_[ex.table].dim;
    const std::string prefix = "e" + std::to_string(e);
    if (ex.op == ExpertOp::fwfm || ex.op == ExpertOp::gwpfm) {
      ex.r_size = ex.op == ExpertOp::fwfm ? nf : static_cast<std::size_t>(schema_.num_groups());
      ex.r = params_.add(ex.block, prefix + ".r", Matrix(1, ex.r_size * (ex.r_size + 1) / 2, 1.0));
    }
    if (ex.op == ExpertOp::projected) {
      for (std::size_t i = 0; i < nf; ++i) {
        for (std::size_t j = i + 1; j < nf; ++j) {
          Matrix m = Matrix::identity(dim);
          for (double& v : m.values()) v += 0.01 * rng.normal();
          ex.projections.push_back(params_.add(
              ex.block, prefix + ".M" + std::to_string(i) + "_" + std::to_string(j), std::move(m)));
        }
      }
    }
    if (ex.op == ExpertOp::tim && ex.temporal) {
      const std::size_t max_len = schema_.field(ex.seq_field).max_len;
      Rng trng = root.fork(300 + e);
      Matrix pos(temporal_bucket_count(TemporalMode::position, max_len), dim);
      Matrix itv(temporal_bucket_count(TemporalMode::interval, max_len), dim);
      for (double& v : pos.values()) v = spec_.embedding_scale * trng.normal();
      for (double& v : itv.values()) v = spec_.embedding_scale * trng.normal();
      const auto& tb = tables_[ex.table].block;
      ex.position_table = params_.add(tb, "t" + std::to_string(ex.table) + "." + prefix + ".position", std::move(pos));
      ex.interval_table = params_.add(tb, "t" + std::to_string(ex.table) + "." + prefix + ".interval", std::move(itv));
    }
    ex.mlp = Mlp(params_, ex.block, prefix + ".mlp", op_output_dim(ex), es.hidden, !es.linear,
                 !es.linear, rng, spec_.mlp_scale);
    if (ex.mlp.output_dim() != out_dim) throw ConfigError("expert output widths differ");
  }

  // Gates and towers.
  towers_.assign(spec_.num_towers(), {});
  for (std::size_t tau = 0; tau < spec_.num_towers(); ++tau) {
    TowerLayout& tw = towers_[tau];
    for (std::size_t e = 0; e < spec_.num_experts(); ++e) {
      if (spec_.expert_routes[tau][e] != Route::hidden) tw.visible.push_back(e);
    }
    const std::size_t v = tw.visible.size();
    const std::string& name = spec_.towers[tau];
    tw.gate_block = params_.add_block("gate:" + name);
    tw.gate_w = params_.add(tw.gate_block, "g." + name + ".w", Matrix(v * out_dim, v));
    tw.gate_b = params_.add(tw.gate_block, "g." + name + ".b", Matrix(1, v));
    tw.tower_block = params_.add_block("tower:" + name);
    Rng rng = root.fork(400 + tau);
    std::vector<std::size_t> dims = spec_.tower_hidden;
    dims.push_back(1);
    tw.mlp = Mlp(params_, tw.tower_block, "T." + name, out_dim, dims, true, false, rng, spec_.mlp_scale);
  }
}

Vector Model::field_embedding(std::size_t table, std::size_t field, const Sample& s) const {
  const TableLayout& tl = tables_[table];
  const FieldSlot& slot = tl.fields[field];
  const FieldSchema& fs = schema_.field(field);
  const std::size_t width = tl.copies * tl.dim;
  switch (fs.kind) {
    case FieldKind::categorical: {
      const auto row = params_.value(slot.param).row(static_cast<std::size_t>(s.category(field)));
      return Vector(row.begin(), row.end());
    }
    case FieldKind::sequence: {
      const auto& seq = s.behaviors(field);
      Vector out(width, 0.0);
      if (seq.empty()) return out;
      const Matrix& m = params_.value(slot.param);
      const double w = 1.0 / static_cast<double>(seq.size());
      for (const auto& b : seq) axpy(w, m.row(static_cast<std::size_t>(b.item)), out);
      return out;
    }
    case FieldKind::numeric: {
      const MNSCodes codes = mns_codes(numeric_code(s.numeric(field), fs.max_value), slot.mns);
      Vector out;
      out.reserve(width);
      for (std::size_t sys = 0; sys < slot.mns.num_systems(); ++sys) {
        const Matrix& m = params_.value(slot.mns_params[sys]);
        const auto& d = codes.digits[sys];
        const int len = static_cast<int>(d.size());
        Vector pooled(m.cols(), 0.0);
        for (int i = 0; i < len; ++i) {
          axpy(1.0, m.row(mns_row(slot.mns.bases[sys], len - i, d[static_cast<std::size_t>(i)])), pooled);
        }
        out.insert(out.end(), pooled.begin(), pooled.end());
      }
      return out;
    }
    case FieldKind::pretrained_embedding:
      return vecmat(s.embedding(field), params_.value(slot.param));
  }
  return {};
}

void Model::field_embedding_backward(std::size_t table, std::size_t field, const Sample& s,
                                     std::span<const double> upstream, Gradients& grads) const {
  const TableLayout& tl = tables_[table];
  const FieldSlot& slot = tl.fields[field];
  const FieldSchema& fs = schema_.field(field);
  switch (fs.kind) {
    case FieldKind::categorical:
      axpy(1.0, upstream, grads[slot.param].row(static_cast<std::size_t>(s.category(field))));
      return;
    case FieldKind::sequence: {
      const auto& seq = s.behaviors(field);
      if (seq.empty()) return;
      const double w = 1.0 / static_cast<double>(seq.size());
      for (const auto& b : seq) axpy(w, upstream, grads[slot.param].row(static_cast<std::size_t>(b.item)));
      return;
    }
    case FieldKind::numeric: {
      const MNSCodes codes = mns_codes(numeric_code(s.numeric(field), fs.max_value), slot.mns);
      std::size_t offset = 0;
      for (std::size_t sys = 0; sys < slot.mns.num_systems(); ++sys) {
        const auto& d = codes.digits[sys];
        const int len = static_cast<int>(d.size());
        const auto slice = upstream.subspan(offset, slot.mns.dims[sys]);
        for (int i = 0; i < len; ++i) {
          axpy(1.0, slice,
               grads[slot.mns_params[sys]].row(
                   mns_row(slot.mns.bases[sys], len - i, d[static_cast<std::size_t>(i)])));
        }
        offset += slot.mns.dims[sys];
      }
      return;
    }
    case FieldKind::pretrained_embedding: {
      const auto& x = s.embedding(field);
      Matrix& g = grads[slot.param];
      for (std::size_t i = 0; i < x.size(); ++i) axpy(x[i], upstream, g.row(i));
      return;
    }
  }
}

void Model::expert_forward(std::size_t e, const Cache& cache, ExpertState& st) const {
  const ExpertLayout& ex = experts_[e];
  const TableLayout& tl = tables_[ex.table];
  const Matrix& rows = cache.rows[ex.table];
  const std::size_t nf = schema_.num_fields();
  const std::size_t dim = tl.dim;
  switch (ex.op) {
    case ExpertOp::fm:
      st.z = fm_vector(tl.copies == 1 ? rows : copy_zero(rows, dim));
      break;
    case ExpertOp::fwfm:
    case ExpertOp::ffm:
    case ExpertOp::gwpfm: {
      std::vector<Matrix> copies;
      std::vector<std::size_t> key(nf, 0);
      std::vector<std::size_t> cls(nf, 0);
      for (std::size_t f = 0; f < nf; ++f) {
        copies.push_back(copies_of(rows, f, tl.copies, dim));
        const auto& fs = schema_.field(f);
        if (ex.op == ExpertOp::fwfm) cls[f] = f;
        if (ex.op == ExpertOp::ffm) key[f] = f;
        if (ex.op == ExpertOp::gwpfm) {
          key[f] = static_cast<std::size_t>(fs.part_id);
          cls[f] = static_cast<std::size_t>(fs.group_id);
        }
      }
      SymmetricWeights r;
      if (ex.r != kNoParam) r = weights_from(params_.value(ex.r), ex.r_size);
      st.z = field_aware_vector({copies, key, cls, ex.r != kNoParam ? &r : nullptr, {}});
      break;
    }
    case ExpertOp::projected: {
      std::vector<Matrix> ms;
      ms.reserve(ex.projections.size());
      for (auto p : ex.projections) ms.push_back(params_.value(p));
      st.z = projected_interaction(tl.copies == 1 ? rows : copy_zero(rows, dim), ms);
      break;
    }
    case ExpertOp::flatdnn: {
      const Matrix flat = tl.copies == 1 ? rows : copy_zero(rows, dim);
      st.z.assign(flat.values().begin(), flat.values().end());
      break;
    }
    case ExpertOp::tim: {
      const Sample& s = *cache.sample;
      const auto& seq = s.behaviors(ex.seq_field);
      const Matrix& table = params_.value(tl.fields[ex.target_field].param);
      const std::size_t max_len = schema_.field(ex.seq_field).max_len;
      st.behaviors = Matrix(seq.size(), dim);
      st.buckets.position.resize(seq.size());
      st.buckets.interval.resize(seq.size());
      for (std::size_t i = 0; i < seq.size(); ++i) {
        std::copy_n(table.row(static_cast<std::size_t>(seq[i].item)).begin(), dim, st.behaviors.row(i).begin());
        st.buckets.position[i] = temporal_bucket(static_cast<std::int64_t>(i + 1), TemporalMode::position, max_len);
        st.buckets.interval[i] = temporal_bucket(s.ts - seq[i].ts, TemporalMode::interval);
      }
      st.valid.assign(seq.size(), true);
      const auto trow = rows.row(ex.target_field);
      st.target.assign(trow.begin(), trow.begin() + static_cast<std::ptrdiff_t>(dim));
      if (ex.temporal) {
        st.dual = tim_dual(st.behaviors, st.buckets,
                           st.target, {params_.value(ex.position_table), params_.value(ex.interval_table)},
                           st.valid);
        st.z = st.dual.u;
      } else {
        const Matrix zero(1, dim);
        const std::vector<std::size_t> zeros(seq.size(), 0);
        st.single = tim_forward({st.behaviors, zeros, st.target, zero, st.valid});
        st.z = st.single.u;
      }
      break;
    }
  }
  st.h = ex.mlp.forward(params_, st.z, &st.mlp);
}

void Model::expert_backward(std::size_t e, const Cache& cache, std::span<const double> upstream,
                            Gradients* param_grads, Gradients* input_grads) const {
  if (!param_grads && !input_grads) return;
  const ExpertLayout& ex = experts_[e];
  const ExpertState& st = cache.experts[e];
  const TableLayout& tl = tables_[ex.table];
  const Matrix& rows = cache.rows[ex.table];
  const Sample& s = *cache.sample;
  const std::size_t nf = schema_.num_fields();
  const std::size_t dim = tl.dim;
  const Vector dz = ex.mlp.backward(params_, st.mlp, upstream, param_grads);

  // Gradient wrt each field row (copies * dim wide), scattered at the end.
  Matrix drows;
  switch (ex.op) {
    case ExpertOp::fm: {
      const Matrix d = fm_backward(tl.copies == 1 ? rows : copy_zero(rows, dim), dz);
      drows = Matrix(nf, tl.copies * dim);
      for (std::size_t f = 0; f < nf; ++f) std::copy_n(d.row(f).begin(), dim, drows.row(f).begin());
      break;
    }
    case ExpertOp::fwfm:
    case ExpertOp::ffm:
    case ExpertOp::gwpfm: {
      std::vector<Matrix> copies;
      std::vector<std::size_t> key(nf, 0);
      std::vector<std::size_t> cls(nf, 0);
      for (std::size_t f = 0; f < nf; ++f) {
        copies.push_back(copies_of(rows, f, tl.copies, dim));
        const auto& fs = schema_.field(f);
        if (ex.op == ExpertOp::fwfm) cls[f] = f;
        if (ex.op == ExpertOp::ffm) key[f] = f;
        if (ex.op == ExpertOp::gwpfm) {
          key[f] = static_cast<std::size_t>(fs.part_id);
          cls[f] = static_cast<std::size_t>(fs.group_id);
        }
      }
      SymmetricWeights r;
      if (ex.r != kNoParam) r = weights_from(params_.value(ex.r), ex.r_size);
      FieldAwareGrads g = field_aware_backward({copies, key, cls, ex.r != kNoParam ? &r : nullptr, {}}, dz);
      if (param_grads && ex.r != kNoParam) axpy(1.0, g.r.values(), (*param_grads)[ex.r].values());
      drows = Matrix(nf, tl.copies * dim);
      for (std::size_t f = 0; f < nf; ++f) {
        std::copy(g.copies[f].values().begin(), g.copies[f].values().end(), drows.row(f).begin());
      }
      break;
    }
    case ExpertOp::projected: {
      std::vector<Matrix> ms;
      ms.reserve(ex.projections.size());
      for (auto p : ex.projections) ms.push_back(params_.value(p));
      ProjectedGrads g = projected_interaction_backward(tl.copies == 1 ? rows : copy_zero(rows, dim), ms, dz);
      if (param_grads) {
        for (std::size_t i = 0; i < ex.projections.size(); ++i) {
          axpy(1.0, g.projections[i].values(), (*param_grads)[ex.projections[i]].values());
        }
      }
      drows = Matrix(nf, tl.copies * dim);
      for (std::size_t f = 0; f < nf; ++f) std::copy_n(g.emb.row(f).begin(), dim, drows.row(f).begin());
      break;
    }
    case ExpertOp::flatdnn: {
      drows = Matrix(nf, tl.copies * dim);
      for (std::size_t f = 0; f < nf; ++f) {
        std::copy_n(dz.begin() + static_cast<std::ptrdiff_t>(f * dim), dim, drows.row(f).begin());
      }
      break;
    }
    case ExpertOp::tim: {
      if (!input_grads) return;
      Matrix dbeh;
      Vector dtarget;
      if (ex.temporal) {
        const TemporalTables tabs{params_.value(ex.position_table), params_.value(ex.interval_table)};
        TimDualGrads g = tim_dual_backward(st.behaviors, st.buckets, st.target, tabs, st.valid, st.dual, dz);
        axpy(1.0, g.tables.position.values(), (*input_grads)[ex.position_table].values());
        axpy(1.0, g.tables.interval.values(), (*input_grads)[ex.interval_table].values());
        dbeh = std::move(g.behaviors);
        dtarget = std::move(g.target);
      } else {
        const Matrix zero(1, dim);
        const std::vector<std::size_t> zeros(st.behaviors.rows(), 0);
        TimGrads g = tim_backward({st.behaviors, zeros, st.target, zero, st.valid}, st.single, dz);
        dbeh = std::move(g.behaviors);
        dtarget = std::move(g.target);
      }
      Matrix& gt = (*input_grads)[tl.fields[ex.target_field].param];
      const auto& seq = s.behaviors(ex.seq_field);
      for (std::size_t i = 0; i < seq.size(); ++i) {
        axpy(1.0, dbeh.row(i), gt.row(static_cast<std::size_t>(seq[i].item)).first(dim));
      }
      axpy(1.0, dtarget, gt.row(static_cast<std::size_t>(s.category(ex.target_field))).first(dim));
      return;
    }
  }
  if (!input_grads) return;
  for (std::size_t f = 0; f < nf; ++f) field_embedding_backward(ex.table, f, s, drows.row(f), *input_grads);
}

Vector Model::logits(const Sample& s, Cache* cache) const {
  Cache local;
  Cache& c = cache ? *cache : local;
  c.sample = &s;
  const std::size_t nf = schema_.num_fields();
  c.rows.assign(tables_.size(), Matrix());
  for (std::size_t t = 0; t < tables_.size(); ++t) {
    const TableLayout& tl = tables_[t];
    c.rows[t] = Matrix(nf, tl.copies * tl.dim);
    for (std::size_t f = 0; f < nf; ++f) {
      if (!tl.fields[f].used) continue;
      const Vector v = field_embedding(t, f, s);
      std::copy(v.begin(), v.end(), c.rows[t].row(f).begin());
    }
  }
  c.experts.resize(experts_.size());
  for (std::size_t e = 0; e < experts_.size(); ++e) expert_forward(e, c, c.experts[e]);

  const std::size_t h_dim = spec_.expert_output_dim();
  c.towers.resize(towers_.size());
  c.logits.assign(towers_.size(), 0.0);
  for (std::size_t tau = 0; tau < towers_.size(); ++tau) {
    const TowerLayout& tw = towers_[tau];
    TowerState& ts = c.towers[tau];
    const std::size_t v = tw.visible.size();
    ts.gate_in.clear();
    ts.gate_in.reserve(v * h_dim);
    for (auto e : tw.visible) ts.gate_in.insert(ts.gate_in.end(), c.experts[e].h.begin(), c.experts[e].h.end());
    ts.gate = vecmat(ts.gate_in, params_.value(tw.gate_w));
    axpy(1.0, params_.value(tw.gate_b).values(), ts.gate);
    masked_softmax(ts.gate, std::vector<bool>(v, true));
    ts.h.assign(h_dim, 0.0);
    for (std::size_t i = 0; i < v; ++i) {
      axpy(ts.gate[i] / static_cast<double>(v), c.experts[tw.visible[i]].h, ts.h);
    }
    c.logits[tau] = tw.mlp.forward(params_, ts.h, &ts.mlp)[0];
  }
  return c.logits;
}

Vector Model::predict(const Sample& s) const {
  Vector out = logits(s);
  for (double& v : out) v = sigmoid(v);
  return out;
}

void Model::backward(const Cache& cache, std::span<const double> dlogits, Gradients& grads) const {
  if (dlogits.size() != towers_.size()) throw InputError("backward: one upstream per tower required");
  const std::size_t h_dim = spec_.expert_output_dim();
  const std::size_t ne = experts_.size();
  std::vector<Vector> up_params(ne, Vector(h_dim, 0.0));
  std::vector<Vector> up_inputs(ne, Vector(h_dim, 0.0));
  std::vector<bool> has_params(ne, false);
  std::vector<bool> has_inputs(ne, false);
  std::vector<bool> same(ne, true);

  for (std::size_t tau = 0; tau < towers_.size(); ++tau) {
    if (dlogits[tau] == 0.0) continue;
    const TowerLayout& tw = towers_[tau];
    const TowerState& ts = cache.towers[tau];
    const Vector up{dlogits[tau]};
    const Vector dh = tw.mlp.backward(params_, ts.mlp, up, &grads);
    const std::size_t v = tw.visible.size();
    const double inv = 1.0 / static_cast<double>(v);

    Vector dg(v);
    double mean = 0.0;
    for (std::size_t i = 0; i < v; ++i) {
      dg[i] = dot(dh, cache.experts[tw.visible[i]].h) * inv;
      mean += ts.gate[i] * dg[i];
    }
    Vector dl(v);
    for (std::size_t i = 0; i < v; ++i) dl[i] = ts.gate[i] * (dg[i] - mean);
    Matrix& gw = grads[tw.gate_w];
    for (std::size_t r = 0; r < ts.gate_in.size(); ++r) {
      if (ts.gate_in[r] != 0.0) axpy(ts.gate_in[r], dl, gw.row(r));
    }
    axpy(1.0, dl, grads[tw.gate_b].values());

    for (std::size_t i = 0; i < v; ++i) {
      const std::size_t e = tw.visible[i];
      const bool p = spec_.expert_routes[tau][e] == Route::backward;
      const bool in = spec_.table_routes[tau][experts_[e].table] == Route::backward;
      const double w = ts.gate[i] * inv;
      if (p) {
        axpy(w, dh, up_params[e]);
        has_params[e] = true;
      }
      if (in) {
        axpy(w, dh, up_inputs[e]);
        has_inputs[e] = true;
      }
      if (p != in) same[e] = false;
    }
  }

  for (std::size_t e = 0; e < ne; ++e) {
    if (same[e]) {
      if (has_params[e]) expert_backward(e, cache, up_params[e], &grads, &grads);
    } else {
      if (has_params[e]) expert_backward(e, cache, up_params[e], &grads, nullptr);
      if (has_inputs[e]) expert_backward(e, cache, up_inputs[e], nullptr, &grads);
    }
  }
}

Route Model::route(std::size_t tower, const std::string& block) const {
  if (tower >= towers_.size()) throw InputError("route: tower out of range");
  const auto colon = block.find(':');
  if (colon == std::string::npos) throw InputError("route: malformed block name '" + block + "'");
  const std::string kind = block.substr(0, colon);
  const std::string id = block.substr(colon + 1);
  if (kind == "table" || kind == "expert") {
    const auto idx = static_cast<std::size_t>(std::stoul(id));
    if (kind == "table") return spec_.table_routes[tower].at(idx);
    return spec_.expert_routes[tower].at(idx);
  }
  if (kind == "gate" || kind == "tower") return id == spec_.towers[tower] ? Route::backward : Route::hidden;
  throw InputError("route: unknown block kind '" + kind + "'");
}

Model Model::inference_graph() const {
  if (spec_.inference_towers.empty()) return *this;
  ModelSpec s = spec_;
  s.towers.clear();
  s.table_routes.clear();
  s.expert_routes.clear();
  for (std::size_t tau = 0; tau < spec_.towers.size(); ++tau) {
    const auto& name = spec_.towers[tau];
    if (std::find(spec_.inference_towers.begin(), spec_.inference_towers.end(), name) ==
        spec_.inference_towers.end()) {
      continue;
    }
    s.towers.push_back(name);
    s.table_routes.push_back(spec_.table_routes[tau]);
    s.expert_routes.push_back(spec_.expert_routes[tau]);
  }
  s.inference_towers.clear();
  Model out(schema_, s, 0);
  for (auto& p : out.params_) p.value = params_.value(params_.find(p.name));
  return out;
}

Matrix Model::embedding_matrix(std::size_t table, std::size_t field) const {
  const std::size_t p = field_param(table, field);
  const Matrix& m = params_.value(p);
  const std::size_t dim = tables_[table].dim;
  Matrix out(m.rows(), dim);
  for (std::size_t r = 0; r < m.rows(); ++r) std::copy_n(m.row(r).begin(), dim, out.row(r).begin());
  return out;
}

std::size_t Model::field_param(std::size_t table, std::size_t field) const {
  const FieldSlot& slot = tables_.at(table).fields.at(field);
  if (slot.param == kNoParam || schema_.field(field).kind == FieldKind::pretrained_embedding) {
    throw InputError("table " + std::to_string(table) + " has no embedding matrix for field '" +
                     schema_.field(field).name + "'");
  }
  return slot.param;
}

Vector Model::tim_attention(std::size_t expert, const Sample& s) const {
  if (expert >= experts_.size() || experts_[expert].op != ExpertOp::tim) {
    throw InputError("tim_attention: expert is not a TIM expert");
  }
  Cache c;
  c.sample = &s;
  const std::size_t t = experts_[expert].table;
  const TableLayout& tl = tables_[t];
  c.rows.assign(tables_.size(), Matrix());
  c.rows[t] = Matrix(schema_.num_fields(), tl.copies * tl.dim);
  const std::size_t tf = experts_[expert].target_field;
  const Vector v = field_embedding(t, tf, s);
  std::copy(v.begin(), v.end(), c.rows[t].row(tf).begin());
  ExpertState st;
  expert_forward(expert, c, st);
  return experts_[expert].temporal ? st.dual.interval.alpha : st.single.alpha;
}

}  // namespace collapsar
