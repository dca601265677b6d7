#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "collapsar/data/dataset.hpp"
#include "collapsar/encoding/mns.hpp"
#include "collapsar/model/params.hpp"
#include "collapsar/model/spec.hpp"
#include "collapsar/sequence/tim.hpp"

// Multi-embedding mixture of experts with per-tower gates and routing
// masks:
//   e_i^(t) = row x_i of E_i^(t)
//   h^(e)   = MLP_e(I_e(e^(t(e))))
//   h_tau   = 1/V sum_{visible e} g_tau,e h^(e)
//   y_tau   = sigmoid(Tower_tau(h_tau))
namespace collapsar {

inline constexpr std::size_t kNoParam = std::numeric_limits<std::size_t>::max();

class Model {
 public:
  Model(Schema schema, ModelSpec spec, std::uint64_t seed);

  const Schema& schema() const noexcept { return schema_; }
  const ModelSpec& spec() const noexcept { return spec_; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }
  std::size_t num_towers() const noexcept { return spec_.num_towers(); }
  std::size_t tower_index(const std::string& task) const;

  struct ExpertState {
    Vector z;
    Mlp::Cache mlp;
    Vector h;
    // TIM only.
    Matrix behaviors;
    DualBuckets buckets;
    std::vector<bool> valid;
    Vector target;
    TimDualOutput dual;
    TimOutput single;
  };
  struct TowerState {
    Vector gate_in;
    Vector gate;
    Vector h;
    Mlp::Cache mlp;
  };
  struct Cache {
    const Sample* sample = nullptr;
    /// Per table: one row per schema field, copies * dim wide.
    std::vector<Matrix> rows;
    std::vector<ExpertState> experts;
    std::vector<TowerState> towers;
    Vector logits;
  };

  /// Per-tower logits.
  Vector logits(const Sample& s, Cache* cache = nullptr) const;
  /// Per-tower probabilities.
  Vector predict(const Sample& s) const;
  /// Adds d(sum_tau dlogits[tau] * logit_tau)/d params into `grads`, with
  /// every tower's gradient filtered by its routing masks.
  void backward(const Cache& cache, std::span<const double> dlogits, Gradients& grads) const;

  /// Experts a tower reads (route != hidden), in expert order.
  const std::vector<std::size_t>& visible_experts(std::size_t tower) const {
    return towers_.at(tower).visible;
  }
  /// Route between a tower and a named block ("table:t", "expert:e",
  /// "gate:<task>", "tower:<task>").
  Route route(std::size_t tower, const std::string& block) const;

  /// Model restricted to `spec().inference_towers` (all towers when empty),
  /// sharing parameter values.
  Model inference_graph() const;

  /// Copy-0 embedding matrix (cardinality x dim) of a categorical or
  /// sequence field in table t.
  Matrix embedding_matrix(std::size_t table, std::size_t field) const;
  std::size_t field_param(std::size_t table, std::size_t field) const;
  std::size_t table_copies(std::size_t table) const { return tables_.at(table).copies; }

  /// TIM attention of expert e for a sample (interval half when temporal
  /// encoding is on, the single attention otherwise).
  Vector tim_attention(std::size_t expert, const Sample& s) const;

 private:
  struct FieldSlot {
    bool used = false;
    std::size_t param = kNoParam;
    std::vector<std::size_t> mns_params;
    MNSConfig mns;
  };
  struct TableLayout {
    std::size_t dim = 0;
    std::size_t copies = 1;
    std::size_t block = 0;
    std::vector<FieldSlot> fields;
  };
  struct ExpertLayout {
    ExpertOp op = ExpertOp::fm;
    std::size_t table = 0;
    std::size_t block = 0;
    Mlp mlp;
    std::size_t r = kNoParam;
    std::size_t r_size = 0;
    std::vector<std::size_t> projections;
    std::size_t seq_field = 0;
    std::size_t target_field = 0;
    std::size_t position_table = kNoParam;
    std::size_t interval_table = kNoParam;
    bool temporal = true;
  };
  struct TowerLayout {
    std::vector<std::size_t> visible;
    std::size_t gate_block = 0;
    std::size_t tower_block = 0;
    std::size_t gate_w = kNoParam;
    std::size_t gate_b = kNoParam;
    Mlp mlp;
  };

  void build(std::uint64_t seed);
  std::size_t op_output_dim(const ExpertLayout& ex) const;

  Vector field_embedding(std::size_t table, std::size_t field, const Sample& s) const;
  void field_embedding_backward(std::size_t table, std::size_t field, const Sample& s,
                                std::span<const double> upstream, Gradients& grads) const;

  void expert_forward(std::size_t e, const Cache& cache, ExpertState& st) const;
  void expert_backward(std::size_t e, const Cache& cache, std::span<const double> upstream,
                       Gradients* param_grads, Gradients* input_grads) const;

  Schema schema_;
  ModelSpec spec_;
  ParamStore params_;
  std::vector<TableLayout> tables_;
  std::vector<ExpertLayout> experts_;
  std::vector<TowerLayout> towers_;
};

}  // namespace collapsar
