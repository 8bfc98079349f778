#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "grfg/cluster.hpp"
#include "grfg/data.hpp"
#include "grfg/downstream.hpp"
#include "grfg/expr.hpp"
#include "grfg/generate.hpp"
#include "grfg/info.hpp"
#include "grfg/rl.hpp"

namespace grfg {

enum class Policy { grfg, rdg };

Policy parse_policy(const std::string& s);
std::string policy_name(Policy p);

struct RunConfig {
  std::size_t epochs = 30;
  std::size_t steps_per_epoch = 15;
  /// Cluster stop threshold; unset means the median initial pairwise distance,
  /// recomputed at every clustering.
  std::optional<double> stop_threshold;
  /// Pairs crossed per binary generation; unset means default_k.
  std::optional<std::size_t> k;
  int n_folds = 5;
  /// Restart from the original features at every epoch; agents persist.
  bool reset_per_epoch = true;
  /// When false every feature is its own group (feature-operation-feature).
  bool clustering = true;
  InfoConfig info;
  AgentConfig agent;
  ForestConfig forest;
  std::uint64_t seed = 0;

  void validate() const;
};

struct StepRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  std::size_t n_groups = 0;
  std::vector<std::string> group1;
  std::vector<std::string> group2;
  Op op = Op::plus;
  Scenario scenario = Scenario::binary_cross;
  std::size_t n_generated = 0;  // columns produced before filtering
  double r1 = 0.0;
  double r2 = 0.0;
  double r3 = 0.0;
  double utility_before = 0.0;
  double utility_after = 0.0;
  double score = 0.0;  // downstream score V_A of the post-step feature set
  double best_score = 0.0;  // running maximum of score
  std::size_t feature_count = 0;
};

struct RunReport {
  Policy policy = Policy::grfg;
  std::uint64_t seed = 0;
  Task task = Task::regression;
  std::size_t original_arity = 0;
  std::size_t epochs = 0;
  std::size_t steps_per_epoch = 0;
  /// Score of the untouched original features under the same folds and seeds.
  double initial_score = 0.0;
  std::vector<StepRecord> records;
  double best_score = 0.0;
  /// Index into records of the first step reaching best_score.
  std::size_t best_record = 0;
  std::vector<ProvenanceEntry> best_features;
  double wall_clock_seconds = 0.0;
};

/// Cascading-agent reconstruction. When `agents` is non-null it receives the
/// trained agents.
RunReport run_grfg(const DataTable& table, const RunConfig& cfg,
                   std::optional<CascadeAgents>* agents = nullptr);

/// Same loop with uniformly random group/operation/group choices and no learning.
RunReport run_rdg(const DataTable& table, const RunConfig& cfg);

RunReport run_policy(Policy policy, const DataTable& table, const RunConfig& cfg,
                     std::optional<CascadeAgents>* agents = nullptr);

/// The fold split and forest settings a run with this config uses; shared with
/// re-evaluation so scores reproduce exactly.
FoldSplit run_folds(const DataTable& table, const RunConfig& cfg);
ForestConfig run_forest(const RunConfig& cfg);

/// Evaluates feature expressions on `table` with the run's folds and forest.
Metrics evaluate_features(const DataTable& table, const std::vector<FeatureExpr>& exprs,
                          const RunConfig& cfg);

/// The original columns as leaf features.
std::vector<Feature> original_features(const DataTable& table);

}  // namespace grfg
