#include "grfg/rl.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

namespace grfg {

// ---------------------------------------------------------------------------
// Mlp

Mlp::Mlp(std::size_t input_dim, std::size_t hidden_dim, std::size_t output_dim)
    : in_(input_dim), hidden_(hidden_dim), out_(output_dim),
      params_(hidden_dim * input_dim + hidden_dim + output_dim * hidden_dim + output_dim, 0.0) {
  if (!in_ || !hidden_ || !out_) throw Error("Mlp dimensions must be positive");
}

void Mlp::init_uniform(Rng& rng) {
  const double a1 = 1.0 / std::sqrt(static_cast<double>(in_));
  const double a2 = 1.0 / std::sqrt(static_cast<double>(hidden_));
  const std::size_t layer1 = hidden_ * in_ + hidden_;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const double a = i < layer1 ? a1 : a2;
    params_[i] = (2.0 * rng.uniform() - 1.0) * a;
  }
}

void Mlp::check_input(std::span<const double> x) const {
  if (x.size() != in_)
    throw Error("Mlp input has " + std::to_string(x.size()) + " entries, expected " +
                std::to_string(in_));
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  Trace t;
  return forward(x, t);
}

std::vector<double> Mlp::forward(std::span<const double> x, Trace& trace) const {
  check_input(x);
  trace.input.assign(x.begin(), x.end());
  trace.pre_activation.assign(hidden_, 0.0);
  trace.hidden.assign(hidden_, 0.0);
  const double* w1 = params_.data();
  const double* b1 = w1 + hidden_ * in_;
  const double* w2 = b1 + hidden_;
  const double* b2 = w2 + out_ * hidden_;
  for (std::size_t h = 0; h < hidden_; ++h) {
    double z = b1[h];
    const double* row = w1 + h * in_;
    for (std::size_t i = 0; i < in_; ++i) z += row[i] * x[i];
    trace.pre_activation[h] = z;
    trace.hidden[h] = z > 0.0 ? z : 0.0;
  }
  std::vector<double> out(out_);
  for (std::size_t o = 0; o < out_; ++o) {
    double z = b2[o];
    const double* row = w2 + o * hidden_;
    for (std::size_t h = 0; h < hidden_; ++h) z += row[h] * trace.hidden[h];
    out[o] = z;
  }
  return out;
}

void Mlp::backward(const Trace& trace, std::span<const double> upstream,
                   std::span<double> grad) const {
  if (upstream.size() != out_) throw Error("Mlp::backward: upstream gradient shape mismatch");
  if (grad.size() != params_.size()) throw Error("Mlp::backward: gradient buffer shape mismatch");
  check_input(trace.input);
  double* gw1 = grad.data();
  double* gb1 = gw1 + hidden_ * in_;
  double* gw2 = gb1 + hidden_;
  double* gb2 = gw2 + out_ * hidden_;
  const double* w2 = params_.data() + hidden_ * in_ + hidden_;

  std::vector<double> d_hidden(hidden_, 0.0);
  for (std::size_t o = 0; o < out_; ++o) {
    const double g = upstream[o];
    if (g == 0.0) continue;
    gb2[o] += g;
    for (std::size_t h = 0; h < hidden_; ++h) {
      gw2[o * hidden_ + h] += g * trace.hidden[h];
      d_hidden[h] += g * w2[o * hidden_ + h];
    }
  }
  for (std::size_t h = 0; h < hidden_; ++h) {
    if (!(trace.pre_activation[h] > 0.0)) continue;  // rectifier is flat here
    const double g = d_hidden[h];
    if (g == 0.0) continue;
    gb1[h] += g;
    for (std::size_t i = 0; i < in_; ++i) gw1[h * in_ + i] += g * trace.input[i];
  }
}

std::vector<double> mlp_forward(const Mlp& net, std::span<const double> x) {
  return net.forward(x);
}

std::vector<double> mlp_backward(const Mlp& net, std::span<const double> x,
                                 std::span<const double> upstream) {
  Mlp::Trace trace;
  net.forward(x, trace);
  std::vector<double> grad(net.params().size(), 0.0);
  net.backward(trace, upstream, grad);
  return grad;
}

void adam_step(AdamState& opt, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size() || opt.m.size() != params.size() ||
      opt.v.size() != params.size())
    throw Error("adam_step: shape mismatch");
  ++opt.step;
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    opt.m[i] = opt.beta1 * opt.m[i] + (1.0 - opt.beta1) * g;
    opt.v[i] = opt.beta2 * opt.v[i] + (1.0 - opt.beta2) * g * g;
    const double m_hat = opt.m[i] / c1;
    const double v_hat = opt.v[i] / c2;
    params[i] -= opt.lr * m_hat / (std::sqrt(v_hat) + opt.eps);
  }
}

// ---------------------------------------------------------------------------
// Binary helpers. Host byte order; the checkpoint header records it.

namespace {

void put_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }
void put_f64(std::ostream& out, double v) { out.write(reinterpret_cast<const char*>(&v), 8); }
void put_vec(std::ostream& out, std::span<const double> v) {
  put_u64(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * 8));
}
void put_str(std::ostream& out, const std::string& s) {
  put_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 8);
  if (!in) throw Error("checkpoint truncated");
  return v;
}
double get_f64(std::istream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), 8);
  if (!in) throw Error("checkpoint truncated");
  return v;
}
std::vector<double> get_vec(std::istream& in) {
  std::uint64_t n = get_u64(in);
  if (n > (1ULL << 32)) throw Error("checkpoint corrupt: vector too large");
  std::vector<double> v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * 8));
  if (!in) throw Error("checkpoint truncated");
  return v;
}
std::string get_str(std::istream& in) {
  std::uint64_t n = get_u64(in);
  if (n > (1ULL << 24)) throw Error("checkpoint corrupt: string too large");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw Error("checkpoint truncated");
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// ReplayBuffer

void ReplayBuffer::push(CascadeTransition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
    return;
  }
  items_[head_] = std::move(t);
  head_ = (head_ + 1) % capacity_;
}

std::vector<const CascadeTransition*> ReplayBuffer::ordered() const {
  std::vector<const CascadeTransition*> out;
  for (std::size_t k = 0; k < items_.size(); ++k)
    out.push_back(&items_[(head_ + k) % items_.size()]);
  return out;
}

std::vector<const CascadeTransition*> ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
  if (batch > items_.size())
    throw Error("replay buffer holds " + std::to_string(items_.size()) + " transitions, batch needs " +
                std::to_string(batch));
  std::vector<std::size_t> idx(items_.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  // Partial Fisher-Yates.
  std::vector<const CascadeTransition*> out;
  for (std::size_t k = 0; k < batch; ++k) {
    std::size_t j = k + rng.index(idx.size() - k);
    std::swap(idx[k], idx[j]);
    out.push_back(&items_[idx[k]]);
  }
  return out;
}

void ReplayBuffer::save(std::ostream& out) const {
  put_u64(out, capacity_);
  put_u64(out, head_);
  put_u64(out, items_.size());
  for (const auto& t : items_) {
    put_vec(out, t.state);
    put_vec(out, t.action_rep);
    put_u64(out, static_cast<std::uint64_t>(static_cast<std::int64_t>(t.action)));
    put_f64(out, t.reward);
    put_vec(out, t.next_state);
    put_u64(out, t.next_candidate_reps.size());
    for (const auto& c : t.next_candidate_reps) put_vec(out, c);
    put_u64(out, t.terminal ? 1 : 0);
  }
}

void ReplayBuffer::load(std::istream& in) {
  capacity_ = get_u64(in);
  head_ = get_u64(in);
  std::uint64_t n = get_u64(in);
  if (n > capacity_ || (capacity_ && head_ >= capacity_)) throw Error("checkpoint corrupt: replay buffer");
  items_.clear();
  for (std::uint64_t k = 0; k < n; ++k) {
    CascadeTransition t;
    t.state = get_vec(in);
    t.action_rep = get_vec(in);
    t.action = static_cast<int>(static_cast<std::int64_t>(get_u64(in)));
    t.reward = get_f64(in);
    t.next_state = get_vec(in);
    std::uint64_t nc = get_u64(in);
    for (std::uint64_t c = 0; c < nc; ++c) t.next_candidate_reps.push_back(get_vec(in));
    t.terminal = get_u64(in) != 0;
    items_.push_back(std::move(t));
  }
}

// ---------------------------------------------------------------------------
// Agents

void AgentConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error("gamma must lie in [0, 1]");
  if (!(epsilon_floor >= 0.0 && epsilon_floor <= epsilon_start && epsilon_start <= 1.0))
    throw Error("epsilon schedule must satisfy 0 <= floor <= start <= 1");
  if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0)) throw Error("epsilon_decay must lie in (0, 1]");
  if (hidden_dim == 0) throw Error("hidden_dim must be positive");
  if (!(learning_rate > 0.0)) throw Error("learning_rate must be positive");
  if (batch_size == 0 || replay_capacity < batch_size)
    throw Error("need 0 < batch_size <= replay_capacity");
}

std::size_t select_action(std::span<const double> scores, double epsilon, Rng& rng) {
  if (scores.empty()) throw Error("select_action: no candidates");
  if (rng.uniform() < epsilon) return rng.index(scores.size());
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

QAgent::QAgent(std::size_t input_dim, std::size_t output_dim, const AgentConfig& cfg)
    : cfg_(cfg),
      net_(input_dim, cfg.hidden_dim, output_dim),
      adam_(net_.params().size()),
      buffer_(cfg.replay_capacity),
      rng_(cfg.seed),
      epsilon_(cfg.epsilon_start) {
  cfg_.validate();
  adam_.lr = cfg.learning_rate;
  net_.init_uniform(rng_);
}

void QAgent::decay_epsilon() {
  epsilon_ = std::max(cfg_.epsilon_floor, epsilon_ * cfg_.epsilon_decay);
}

void QAgent::remember(CascadeTransition t) { buffer_.push(std::move(t)); }

std::optional<double> QAgent::train_step() {
  if (buffer_.size() < cfg_.batch_size) return std::nullopt;
  auto batch = buffer_.sample(cfg_.batch_size, rng_);
  return train_on(batch);
}

double QAgent::td_loss(std::span<const CascadeTransition* const> batch) const {
  if (batch.empty()) throw Error("td_loss: empty batch");
  double loss = 0.0;
  for (const auto* t : batch) {
    Mlp::Trace trace;
    std::size_t head = 0;
    const double q = q_of(*t, trace, head);
    const double target = t->reward + (t->terminal ? 0.0 : cfg_.gamma * bootstrap(*t));
    loss += (q - target) * (q - target);
  }
  return loss / static_cast<double>(batch.size());
}

double QAgent::train_on(std::span<const CascadeTransition* const> batch) {
  if (batch.empty()) throw Error("train_on: empty batch");
  const double scale = 2.0 / static_cast<double>(batch.size());
  std::vector<double> grad(net_.params().size(), 0.0);
  std::vector<double> upstream(net_.output_dim(), 0.0);
  double loss = 0.0;
  for (const auto* t : batch) {
    Mlp::Trace trace;
    std::size_t head = 0;
    const double q = q_of(*t, trace, head);
    // Semi-gradient: the bootstrap target is a constant.
    const double target = t->reward + (t->terminal ? 0.0 : cfg_.gamma * bootstrap(*t));
    const double diff = q - target;
    loss += diff * diff;
    std::fill(upstream.begin(), upstream.end(), 0.0);
    upstream[head] = scale * diff;
    net_.backward(trace, upstream, grad);
  }
  adam_step(adam_, net_.params(), grad);
  return loss / static_cast<double>(batch.size());
}

void QAgent::save(std::ostream& out) const {
  put_u64(out, net_.input_dim());
  put_u64(out, net_.hidden_dim());
  put_u64(out, net_.output_dim());
  put_vec(out, net_.params());
  put_vec(out, adam_.m);
  put_vec(out, adam_.v);
  put_u64(out, adam_.step);
  put_f64(out, epsilon_);
  put_str(out, rng_.serialize());
  buffer_.save(out);
}

void QAgent::load(std::istream& in) {
  std::uint64_t in_dim = get_u64(in), hid = get_u64(in), out_dim = get_u64(in);
  if (in_dim != net_.input_dim() || hid != net_.hidden_dim() || out_dim != net_.output_dim())
    throw Error("checkpoint network shape does not match configuration");
  auto params = get_vec(in);
  auto m = get_vec(in);
  auto v = get_vec(in);
  if (params.size() != net_.params().size() || m.size() != params.size() || v.size() != params.size())
    throw Error("checkpoint parameter count mismatch");
  std::copy(params.begin(), params.end(), net_.params().begin());
  adam_.m = std::move(m);
  adam_.v = std::move(v);
  adam_.step = get_u64(in);
  epsilon_ = get_f64(in);
  rng_.deserialize(get_str(in));
  buffer_.load(in);
}

bool QAgent::operator==(const QAgent& other) const {
  auto a = net_.params();
  auto b = other.net_.params();
  return std::equal(a.begin(), a.end(), b.begin(), b.end()) && adam_.m == other.adam_.m &&
         adam_.v == other.adam_.v && adam_.step == other.adam_.step &&
         epsilon_ == other.epsilon_ && rng_ == other.rng_ && buffer_.size() == other.buffer_.size();
}

GroupAgent::GroupAgent(std::size_t state_dim, const AgentConfig& cfg)
    : QAgent(state_dim + kSetRepDim, 1, cfg), state_dim_(state_dim) {}

std::vector<double> GroupAgent::joined(std::span<const double> state,
                                       std::span<const double> candidate) const {
  if (state.size() != state_dim_)
    throw Error("group agent state has " + std::to_string(state.size()) + " entries, expected " +
                std::to_string(state_dim_));
  if (candidate.size() != kSetRepDim)
    throw Error("group candidate representation must have 49 entries");
  std::vector<double> x(state.begin(), state.end());
  x.insert(x.end(), candidate.begin(), candidate.end());
  return x;
}

double GroupAgent::q_score_group(std::span<const double> state,
                                 std::span<const double> candidate) const {
  return net_.forward(joined(state, candidate))[0];
}

std::vector<double> GroupAgent::q_scores(std::span<const double> state,
                                         std::span<const StateVector> candidates) const {
  std::vector<double> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back(q_score_group(state, c));
  return out;
}

std::size_t GroupAgent::select(std::span<const double> state,
                               std::span<const StateVector> candidates) {
  auto scores = q_scores(state, candidates);
  std::size_t pick = select_action(scores, epsilon_, rng_);
  decay_epsilon();
  return pick;
}

double GroupAgent::q_of(const CascadeTransition& t, Mlp::Trace& trace, std::size_t& head) const {
  head = 0;
  return net_.forward(joined(t.state, t.action_rep), trace)[0];
}

double GroupAgent::bootstrap(const CascadeTransition& t) const {
  if (t.terminal || t.next_candidate_reps.empty()) return 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& c : t.next_candidate_reps) best = std::max(best, q_score_group(t.next_state, c));
  return best;
}

DiscreteAgent::DiscreteAgent(std::size_t state_dim, std::size_t n_actions, const AgentConfig& cfg)
    : QAgent(state_dim, n_actions, cfg) {}

std::vector<double> DiscreteAgent::q_values(std::span<const double> state) const {
  return net_.forward(state);
}

std::size_t DiscreteAgent::select(std::span<const double> state) {
  auto q = q_values(state);
  std::size_t pick = select_action(q, epsilon_, rng_);
  decay_epsilon();
  return pick;
}

double DiscreteAgent::q_of(const CascadeTransition& t, Mlp::Trace& trace, std::size_t& head) const {
  if (t.action < 0 || static_cast<std::size_t>(t.action) >= n_actions())
    throw Error("transition action index out of range");
  head = static_cast<std::size_t>(t.action);
  return net_.forward(t.state, trace)[head];
}

double DiscreteAgent::bootstrap(const CascadeTransition& t) const {
  if (t.terminal) return 0.0;
  auto q = q_values(t.next_state);
  return *std::max_element(q.begin(), q.end());
}

CascadeAgents CascadeAgents::create(const AgentConfig& base, std::uint64_t master_seed) {
  AgentConfig c1 = base, c2 = base, c3 = base;
  c1.seed = derive_seed(master_seed, seed_stream::agent_group1);
  c2.seed = derive_seed(master_seed, seed_stream::agent_operation);
  c3.seed = derive_seed(master_seed, seed_stream::agent_group2);
  return CascadeAgents{GroupAgent(kSetRepDim, c1), OperationAgent(c2),
                       GroupAgent(2 * kSetRepDim + kOpRepDim, c3)};
}

namespace {
constexpr char kMagic[8] = {'G', 'R', 'F', 'G', 'C', 'K', 'P', '1'};
}

void save_checkpoint(const std::string& path, const CascadeAgents& agents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint '" + path + "'");
  out.write(kMagic, 8);
  put_u64(out, 0x0102030405060708ULL);  // byte-order marker
  put_u64(out, 3);
  agents.group1.save(out);
  agents.operation.save(out);
  agents.group2.save(out);
  if (!out) throw Error("checkpoint write failed for '" + path + "'");
}

CascadeAgents load_checkpoint(const std::string& path, const AgentConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path + "'");
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) throw Error("not a checkpoint file: '" + path + "'");
  if (get_u64(in) != 0x0102030405060708ULL) throw Error("checkpoint byte order mismatch");
  if (get_u64(in) != 3) throw Error("checkpoint must hold 3 agents");
  CascadeAgents agents = CascadeAgents::create(cfg, 0);
  agents.group1.load(in);
  agents.operation.load(in);
  agents.group2.load(in);
  return agents;
}

}  // namespace grfg
