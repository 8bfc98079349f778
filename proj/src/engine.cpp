#include "grfg/engine.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <memory>

namespace grfg {

Policy parse_policy(const std::string& s) {
  if (s == "grfg") return Policy::grfg;
  if (s == "rdg") return Policy::rdg;
  throw Error("unknown policy '" + s + "' (expected grfg|rdg)");
}

std::string policy_name(Policy p) { return p == Policy::grfg ? "grfg" : "rdg"; }

void RunConfig::validate() const {
  if (epochs == 0) throw Error("epochs must be >= 1");
  if (steps_per_epoch == 0) throw Error("steps_per_epoch must be >= 1");
  if (stop_threshold && !(*stop_threshold > 0.0)) throw Error("stop_threshold must be > 0");
  if (k && *k == 0) throw Error("k must be >= 1");
  if (n_folds < 2) throw Error("n_folds must be >= 2");
  info.validate();
  agent.validate();
  forest.validate();
}

std::vector<Feature> original_features(const DataTable& table) {
  std::vector<Feature> out;
  for (const auto& c : table.columns()) out.push_back({FeatureExpr::leaf(c.name), c.values});
  return out;
}

FoldSplit run_folds(const DataTable& table, const RunConfig& cfg) {
  return stratified_kfold(table, cfg.n_folds, derive_seed(cfg.seed, seed_stream::folds));
}

ForestConfig run_forest(const RunConfig& cfg) {
  ForestConfig f = cfg.forest;
  f.seed = derive_seed(cfg.seed, seed_stream::forest);
  return f;
}

Metrics evaluate_features(const DataTable& table, const std::vector<FeatureExpr>& exprs,
                          const RunConfig& cfg) {
  std::vector<Column> cols;
  for (const auto& e : exprs) cols.push_back(evaluate(e, table));
  if (cols.empty())
    for (const auto& c : table.columns()) cols.push_back(c.values);
  std::vector<ColumnView> views(cols.begin(), cols.end());
  return evaluate_cv(views, table.target(), table.task(), run_forest(cfg), run_folds(table, cfg),
                     table.n_classes());
}

namespace {

/// Current feature set with its cached MI statistics and clustering.
struct FeatureState {
  std::vector<Feature> features;
  std::unique_ptr<InfoCache> cache;
  double utility = 0.0;
  GroupPartition partition;
};

FeatureState make_state(std::vector<Feature> features, const DataTable& table,
                        const RunConfig& cfg) {
  FeatureState s;
  s.features = std::move(features);
  auto views = views_of(s.features);
  s.cache = std::make_unique<InfoCache>(views, table.target(), cfg.info, table.task());
  s.utility = s.cache->utility();
  if (!cfg.clustering) {
    for (std::size_t i = 0; i < s.features.size(); ++i) s.partition.groups.push_back({i});
    return s;
  }
  double threshold = cfg.stop_threshold ? *cfg.stop_threshold : median_singleton_distance(*s.cache);
  // A zero median would forbid merging identical groups; the smallest positive
  // threshold still merges distance-0 pairs.
  if (!(threshold > 0.0)) threshold = std::numeric_limits<double>::min();
  s.partition = m_clustering(*s.cache, threshold);
  return s;
}

bool same_names(const std::vector<Feature>& a, const std::vector<Feature>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(a[i].expr == b[i].expr)) return false;
  return true;
}

std::vector<Feature> subset(const std::vector<Feature>& f, const std::vector<std::size_t>& idx) {
  std::vector<Feature> out;
  for (std::size_t i : idx) out.push_back(f[i]);
  return out;
}

std::vector<std::string> names_of(const std::vector<Feature>& f) {
  std::vector<std::string> out;
  for (const auto& x : f) out.push_back(x.name());
  return out;
}

/// Selection strategy plugged into the shared loop.
class Selector {
 public:
  virtual ~Selector() = default;
  /// Picks group 1, the operation and group 2 for this step.
  virtual void select(const StateVector& rep_set, const std::vector<StateVector>& group_reps,
                      std::size_t& g1, Op& op, std::size_t& g2) = 0;
  /// Rewards of the step just taken.
  virtual void reward(double r1, double r2, double r3) = 0;
  /// Called before an episode reset.
  virtual void end_episode() = 0;
};

class RandomSelector : public Selector {
 public:
  explicit RandomSelector(std::uint64_t seed) : rng_(seed) {}
  void select(const StateVector&, const std::vector<StateVector>& group_reps, std::size_t& g1,
              Op& op, std::size_t& g2) override {
    g1 = rng_.index(group_reps.size());
    op = op_at(rng_.index(kNumOps));
    g2 = rng_.index(group_reps.size());
  }
  void reward(double, double, double) override {}
  void end_episode() override {}

 private:
  Rng rng_;
};

/// Drives the three cascading agents. A step's transitions stay pending until
/// the next step reveals their successor states and candidate groups.
class CascadeSelector : public Selector {
 public:
  explicit CascadeSelector(CascadeAgents& agents) : agents_(agents) {}

  void select(const StateVector& rep_set, const std::vector<StateVector>& group_reps,
              std::size_t& g1, Op& op, std::size_t& g2) override {
    StateVector s1 = rep_set;
    complete(agents_.group1, pending1_, s1, &group_reps);
    g1 = agents_.group1.select(s1, group_reps);

    StateVector s2 = concat({rep_set, group_reps[g1]});
    complete(agents_.operation, pending2_, s2, nullptr);
    op = op_at(agents_.operation.select(s2));

    StateVector op_rep = rep_operation(op);
    StateVector s3 = concat({rep_set, group_reps[g1], op_rep});
    complete(agents_.group2, pending3_, s3, &group_reps);
    g2 = agents_.group2.select(s3, group_reps);

    pending1_ = CascadeTransition{s1, group_reps[g1], -1, 0.0, {}, {}, false};
    pending2_ = CascadeTransition{s2, op_rep, static_cast<int>(op_index(op)), 0.0, {}, {}, false};
    pending3_ = CascadeTransition{s3, group_reps[g2], -1, 0.0, {}, {}, false};
  }

  void reward(double r1, double r2, double r3) override {
    pending1_->reward = r1;
    pending2_->reward = r2;
    pending3_->reward = r3;
  }

  void end_episode() override {
    flush_terminal(agents_.group1, pending1_);
    flush_terminal(agents_.operation, pending2_);
    flush_terminal(agents_.group2, pending3_);
  }

 private:
  static void complete(QAgent& agent, std::optional<CascadeTransition>& pending,
                       const StateVector& next_state, const std::vector<StateVector>* next_cands) {
    if (!pending) return;
    pending->next_state = next_state;
    if (next_cands) pending->next_candidate_reps = *next_cands;
    agent.remember(std::move(*pending));
    pending.reset();
    agent.train_step();
  }

  static void flush_terminal(QAgent& agent, std::optional<CascadeTransition>& pending) {
    if (!pending) return;
    pending->terminal = true;
    agent.remember(std::move(*pending));
    pending.reset();
    agent.train_step();
  }

  CascadeAgents& agents_;
  std::optional<CascadeTransition> pending1_, pending2_, pending3_;
};

RunReport run_loop(const DataTable& table, const RunConfig& cfg, Policy policy, Selector& selector) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const ColumnView y = table.target();
  const Task task = table.task();
  const std::size_t d0 = table.original_arity();
  const FoldSplit folds = run_folds(table, cfg);
  const ForestConfig forest = run_forest(cfg);

  auto score_of = [&](const std::vector<Feature>& f) {
    auto views = views_of(f);
    return evaluate_cv(views, y, task, forest, folds, table.n_classes()).score;
  };

  RunReport report;
  report.policy = policy;
  report.seed = cfg.seed;
  report.task = task;
  report.original_arity = d0;
  report.epochs = cfg.epochs;
  report.steps_per_epoch = cfg.steps_per_epoch;

  FeatureState state = make_state(original_features(table), table, cfg);
  report.initial_score = score_of(state.features);
  double last_score = report.initial_score;

  double best = -std::numeric_limits<double>::infinity();
  std::vector<Feature> best_set;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.reset_per_epoch && epoch > 0) {
      selector.end_episode();
      state = make_state(original_features(table), table, cfg);
      last_score = report.initial_score;
    }
    for (std::size_t step = 0; step < cfg.steps_per_epoch; ++step) {
      const auto& groups = state.partition.groups;
      StateVector rep_set = squash(rep_feature_set(views_of(state.features)));
      std::vector<StateVector> group_reps;
      for (const auto& g : groups)
        group_reps.push_back(squash(rep_feature_set(views_of(state.features, g))));

      std::size_t g1 = 0, g2 = 0;
      Op op = Op::plus;
      selector.select(rep_set, group_reps, g1, op, g2);
      if (g1 >= groups.size() || g2 >= groups.size())
        throw InvariantError("selector returned a group index out of range");

      auto c1 = subset(state.features, groups[g1]);
      auto c2 = subset(state.features, groups[g2]);
      GenerationOutcome outcome =
          is_unary(op) ? generate_unary(op, c1, c2, y, cfg.info, task)
                       : generate_binary(op, c1, c2, cfg.k ? *cfg.k : default_k(c1.size(), c2.size()));

      std::vector<Feature> next = postprocess(state.features, outcome, d0, y, cfg.info, task);
      if (next.size() > 2 * d0) throw InvariantError("feature count exceeds 2 * d0 after postprocess");
      const bool unchanged = same_names(next, state.features);
      FeatureState next_state = unchanged ? FeatureState{} : make_state(next, table, cfg);
      const double u_before = state.utility;
      const double u_after = unchanged ? u_before : next_state.utility;
      const double score = unchanged ? last_score : score_of(next);

      StepRecord rec;
      rec.epoch = epoch;
      rec.step = step;
      rec.n_groups = groups.size();
      rec.group1 = names_of(c1);
      rec.group2 = names_of(c2);
      rec.op = op;
      rec.scenario = outcome.scenario;
      rec.n_generated = outcome.new_columns.size();
      rec.utility_before = u_before;
      rec.utility_after = u_after;
      rec.r1 = u_before;
      rec.r2 = u_after - u_before;
      rec.r3 = rec.r2 + score;
      rec.score = score;
      rec.feature_count = next.size();
      selector.reward(rec.r1, rec.r2, rec.r3);

      if (score > best) {
        best = score;
        best_set = next;
        report.best_record = report.records.size();
      }
      rec.best_score = best;
      report.records.push_back(std::move(rec));

      if (!unchanged) state = std::move(next_state);
      last_score = score;
    }
  }

  report.best_score = best;
  for (const auto& f : best_set) report.best_features.push_back({f.name(), f.expr});
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace

RunReport run_grfg(const DataTable& table, const RunConfig& cfg,
                   std::optional<CascadeAgents>* agents) {
  CascadeAgents local = CascadeAgents::create(cfg.agent, cfg.seed);
  CascadeSelector selector(local);
  RunReport report = run_loop(table, cfg, Policy::grfg, selector);
  if (agents) *agents = std::move(local);
  return report;
}

RunReport run_rdg(const DataTable& table, const RunConfig& cfg) {
  RandomSelector selector(derive_seed(cfg.seed, seed_stream::random_policy));
  return run_loop(table, cfg, Policy::rdg, selector);
}

RunReport run_policy(Policy policy, const DataTable& table, const RunConfig& cfg,
                     std::optional<CascadeAgents>* agents) {
  return policy == Policy::grfg ? run_grfg(table, cfg, agents) : run_rdg(table, cfg);
}

}  // namespace grfg
