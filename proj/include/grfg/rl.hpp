#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "grfg/common.hpp"
#include "grfg/staterep.hpp"

namespace grfg {

/// Two linear layers with a rectifier in between. Parameters live in one
/// flat buffer: [w1 (hidden x in, row-major) | b1 | w2 (out x hidden) | b2].
class Mlp {
 public:
  Mlp() = default;
  /// All-zero parameters.
  Mlp(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim);

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  void init_uniform(Rng& rng);

  std::size_t input_dim() const { return in_; }
  std::size_t hidden_dim() const { return hidden_; }
  std::size_t output_dim() const { return out_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  double& w1(std::size_t h, std::size_t i) { return params_[h * in_ + i]; }
  double& b1(std::size_t h) { return params_[hidden_ * in_ + h]; }
  double& w2(std::size_t o, std::size_t h) { return params_[b2_offset() - out_ * hidden_ + o * hidden_ + h]; }
  double& b2(std::size_t o) { return params_[b2_offset() + o]; }

  /// Forward-pass intermediates needed by backward().
  struct Trace {
    std::vector<double> input;
    std::vector<double> pre_activation;
    std::vector<double> hidden;
  };

  std::vector<double> forward(std::span<const double> x) const;
  std::vector<double> forward(std::span<const double> x, Trace& trace) const;

  /// Accumulates d(sum_k upstream[k] * out[k]) / d(params) into `grad`.
  void backward(const Trace& trace, std::span<const double> upstream,
                std::span<double> grad) const;

 private:
  std::size_t b2_offset() const { return hidden_ * in_ + hidden_ + out_ * hidden_; }
  void check_input(std::span<const double> x) const;

  std::size_t in_ = 0, hidden_ = 0, out_ = 0;
  std::vector<double> params_;
};

std::vector<double> mlp_forward(const Mlp& net, std::span<const double> x);
/// Parameter gradients (flat layout) of upstream . net(x).
std::vector<double> mlp_backward(const Mlp& net, std::span<const double> x,
                                 std::span<const double> upstream);

struct AdamState {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  explicit AdamState(std::size_t n_params = 0) : m(n_params, 0.0), v(n_params, 0.0) {}
};

/// Bias-corrected Adam update, in place.
void adam_step(AdamState& opt, std::span<double> params, std::span<const double> grads);

struct CascadeTransition {
  StateVector state;
  /// Group agents: the chosen group's 49-d representation. Operation agent:
  /// one-hot of the chosen op.
  StateVector action_rep;
  /// Operation agent only: index into the Q head.
  int action = -1;
  double reward = 0.0;
  StateVector next_state;
  /// Group agents: representations of the groups available at the next step.
  std::vector<StateVector> next_candidate_reps;
  /// No bootstrap term when set.
  bool terminal = false;
};

/// Fixed-capacity ring buffer; the oldest entry is overwritten first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 32) : capacity_(capacity) {}

  void push(CascadeTransition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  /// Entries from oldest to newest.
  std::vector<const CascadeTransition*> ordered() const;
  /// `batch` distinct entries drawn uniformly; requires size() >= batch.
  std::vector<const CascadeTransition*> sample(std::size_t batch, Rng& rng) const;

  void save(std::ostream& out) const;
  void load(std::istream& in);

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // next slot to overwrite once full
  std::vector<CascadeTransition> items_;
};

struct AgentConfig {
  double gamma = 0.9;
  double epsilon_start = 0.5;
  double epsilon_decay = 0.99;
  double epsilon_floor = 0.05;
  std::size_t hidden_dim = 64;
  double learning_rate = 0.01;
  std::size_t replay_capacity = 32;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Epsilon-greedy: with probability `epsilon` a uniform index, otherwise the
/// argmax (ties to the lowest index).
std::size_t select_action(std::span<const double> scores, double epsilon, Rng& rng);

/// Network, optimizer, replay memory, exploration schedule and rng shared by
/// both agent kinds.
class QAgent {
 public:
  const Mlp& net() const { return net_; }
  Mlp& net() { return net_; }
  const AdamState& optimizer() const { return adam_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const AgentConfig& config() const { return cfg_; }
  double epsilon() const { return epsilon_; }
  Rng& rng() { return rng_; }

  void remember(CascadeTransition t);
  /// One TD update on a sampled batch; nullopt when the buffer holds fewer
  /// than batch_size transitions.
  std::optional<double> train_step();
  /// Mean squared TD error of `batch` under the current parameters.
  double td_loss(std::span<const CascadeTransition* const> batch) const;
  /// One Adam step on `batch`; returns the pre-update loss.
  double train_on(std::span<const CascadeTransition* const> batch);

  void save(std::ostream& out) const;
  void load(std::istream& in);

  bool operator==(const QAgent& other) const;

 protected:
  QAgent(std::size_t input_dim, std::size_t output_dim, const AgentConfig& cfg);
  virtual ~QAgent() = default;
  QAgent(const QAgent&) = default;
  QAgent& operator=(const QAgent&) = default;

  void decay_epsilon();
  /// Q(s, a) for a stored transition, with its forward trace.
  virtual double q_of(const CascadeTransition& t, Mlp::Trace& trace, std::size_t& head) const = 0;
  /// max_a' Q(s', a') or 0 for terminal transitions.
  virtual double bootstrap(const CascadeTransition& t) const = 0;

  AgentConfig cfg_;
  Mlp net_;
  AdamState adam_;
  ReplayBuffer buffer_;
  Rng rng_;
  double epsilon_;
};

/// Scores (state ++ candidate group rep) with a scalar head; the candidate
/// count may change from step to step.
class GroupAgent : public QAgent {
 public:
  GroupAgent(std::size_t state_dim, const AgentConfig& cfg);

  std::size_t state_dim() const { return state_dim_; }
  double q_score_group(std::span<const double> state, std::span<const double> candidate) const;
  std::vector<double> q_scores(std::span<const double> state,
                               std::span<const StateVector> candidates) const;
  /// Epsilon-greedy pick among candidates, then one epsilon decay.
  std::size_t select(std::span<const double> state, std::span<const StateVector> candidates);

 protected:
  double q_of(const CascadeTransition& t, Mlp::Trace& trace, std::size_t& head) const override;
  double bootstrap(const CascadeTransition& t) const override;

 private:
  std::vector<double> joined(std::span<const double> state, std::span<const double> candidate) const;
  std::size_t state_dim_;
};

/// Fixed-size action set with one Q output per action (the operation agent
/// uses 14).
class DiscreteAgent : public QAgent {
 public:
  DiscreteAgent(std::size_t state_dim, std::size_t n_actions, const AgentConfig& cfg);

  std::size_t n_actions() const { return net_.output_dim(); }
  std::vector<double> q_values(std::span<const double> state) const;
  std::size_t select(std::span<const double> state);

 protected:
  double q_of(const CascadeTransition& t, Mlp::Trace& trace, std::size_t& head) const override;
  double bootstrap(const CascadeTransition& t) const override;
};

/// Operation agent: 98-d state (set rep ++ group rep), 14-way head.
class OperationAgent : public DiscreteAgent {
 public:
  explicit OperationAgent(const AgentConfig& cfg) : DiscreteAgent(2 * kSetRepDim, kNumOps, cfg) {}
  std::vector<double> q_scores_operation(std::span<const double> state) const {
    return q_values(state);
  }
};

/// The three cascading agents in selection order.
struct CascadeAgents {
  GroupAgent group1;        // state: Rep(F)                        (49)
  OperationAgent operation; // state: Rep(F) ++ Rep(C1)             (98)
  GroupAgent group2;        // state: Rep(F) ++ Rep(C1) ++ Rep(op)  (112)

  static CascadeAgents create(const AgentConfig& base, std::uint64_t master_seed);
};

/// Binary checkpoint of all three agents (layout in docs/checkpoint.md).
void save_checkpoint(const std::string& path, const CascadeAgents& agents);
CascadeAgents load_checkpoint(const std::string& path, const AgentConfig& cfg);

}  // namespace grfg
