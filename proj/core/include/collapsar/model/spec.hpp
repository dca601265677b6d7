#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "collapsar/config.hpp"

namespace collapsar {

/// How a tower relates to a parameter block.
enum class Route : std::uint8_t {
  backward,      ///< reads the block's forward and sends gradients into it
  forward_only,  ///< reads the forward; gradients are stopped
  hidden,        ///< does not read the block at all
};

std::string_view to_string(Route r);
Route parse_route(std::string_view text);

enum class ExpertOp { fm, fwfm, ffm, gwpfm, projected, flatdnn, tim };

std::string_view to_string(ExpertOp op);
ExpertOp parse_expert_op(std::string_view text);

struct ExpertSpec {
  std::size_t table = 0;
  ExpertOp op = ExpertOp::fm;
  /// MLP widths after the operator; the last width is the expert output.
  std::vector<std::size_t> hidden{32};
  /// Diagnostic mode without ReLU, used only by the equivalence check.
  bool linear = false;
  /// TIM only: false removes temporal encoding (single attention over raw
  /// behavior embeddings).
  bool temporal = true;
  /// TIM only; empty picks the first sequence field and the categorical
  /// field sharing its vocabulary.
  std::string sequence_field;
  std::string target_field;
};

/// Wiring of tables -> experts -> gates -> towers plus routing masks.
struct ModelSpec {
  std::string paradigm = "single";
  std::vector<std::size_t> table_dims{16};
  std::vector<ExpertSpec> experts{ExpertSpec{}};
  /// One tower per task, named by task.
  std::vector<std::string> towers{"click"};
  std::vector<std::size_t> tower_hidden{64, 32};
  /// routes[tower][table] and expert_routes[tower][expert].
  std::vector<std::vector<Route>> table_routes{{Route::backward}};
  std::vector<std::vector<Route>> expert_routes{{Route::backward}};
  /// Stddev of embedding initialization.
  double embedding_scale = 0.1;
  /// Scale of the He initialization of MLP weights.
  double mlp_scale = 1.0;
  /// Towers kept at inference; empty keeps all.
  std::vector<std::string> inference_towers;
  std::vector<std::string> warnings;

  std::size_t num_tables() const noexcept { return table_dims.size(); }
  std::size_t num_experts() const noexcept { return experts.size(); }
  std::size_t num_towers() const noexcept { return towers.size(); }
  std::size_t expert_output_dim() const;

  void validate() const;
  nlohmann::json to_json() const;
  static ModelSpec from_json(const nlohmann::json& j);
};

/// Shape options shared by the builders.
struct BuildOptions {
  ExpertOp op = ExpertOp::fm;
  std::vector<std::size_t> expert_hidden{32};
  std::vector<std::size_t> tower_hidden{64, 32};
  double embedding_scale = 0.1;
};

/// One table of width `dim`, one expert, one tower per task.
ModelSpec single_build(std::size_t dim, const std::vector<std::string>& tasks,
                       const BuildOptions& opt = {});
/// One expert per table; every tower sees and trains everything.
ModelSpec me_build(const std::vector<std::size_t>& dims, const std::vector<std::string>& tasks,
                   const BuildOptions& opt = {});
/// Shared-embedding reference: one table read by one expert per task.
ModelSpec shared_build(std::size_t dim, const std::vector<std::string>& tasks,
                       const BuildOptions& opt = {});
/// Task-specific table + expert per task and one shared table + expert.
/// Towers read everything but train only their own and the shared blocks.
ModelSpec stem_build(std::size_t dim, const std::vector<std::string>& tasks,
                     const BuildOptions& opt = {});
/// Asymmetric sizes, all shared. Equal sizes add a warning.
ModelSpec ame_build(const std::vector<std::size_t>& sizes, const std::vector<std::string>& tasks,
                    const BuildOptions& opt = {});
/// Main table + expert used only by the main tower, shared table + expert
/// trained by every tower; auxiliary towers are dropped at inference.
ModelSpec stem_al_build(std::size_t dim, const std::string& main_task,
                        const std::vector<std::string>& aux_tasks, const BuildOptions& opt = {});

/// Builds from a `model.*` config section:
///   paradigm, op, dim, dims, expert_hidden, tower_hidden, embedding_scale,
///   main_task, tim_temporal.
ModelSpec spec_from_config(const Config& model_cfg, const std::vector<std::string>& tasks);

/// Keys accepted by spec_from_config.
Config model_config_keys();

/// Conversion type -> task-group (tower) mapping.
class TaskGroupMap {
 public:
  TaskGroupMap() = default;
  TaskGroupMap(std::vector<std::string> groups, std::vector<std::pair<std::string, std::string>> types);

  std::size_t num_groups() const noexcept { return groups_.size(); }
  std::size_t num_types() const noexcept { return types_.size(); }
  const std::vector<std::string>& groups() const noexcept { return groups_; }
  /// Tower id for a conversion type; unknown types throw ConfigError.
  std::size_t tower_of(const std::string& type) const;

  static TaskGroupMap from_config(const Config& cfg);

 private:
  std::vector<std::string> groups_;
  std::vector<std::pair<std::string, std::size_t>> types_;
};

}  // namespace collapsar
