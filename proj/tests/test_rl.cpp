#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "grfg/rl.hpp"
#include "helpers.hpp"

using namespace grfg;

namespace {

AgentConfig small_cfg(std::uint64_t seed = 1) {
  AgentConfig c;
  c.hidden_dim = 8;
  c.seed = seed;
  return c;
}

/// 1-in, 1-hidden, 1-out net computing relu(x).
void make_relu_identity(Mlp& net) {
  for (auto& p : net.params()) p = 0.0;
  net.w1(0, 0) = 1.0;
  net.w2(0, 0) = 1.0;
}

CascadeTransition op_transition(double s, int action, double reward, double s_next, bool terminal) {
  CascadeTransition t;
  t.state = {s};
  t.action = action;
  t.action_rep = {1.0};
  t.reward = reward;
  t.next_state = {s_next};
  t.terminal = terminal;
  return t;
}

double finite_difference_error(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t in = 1 + rng.index(16), hidden = 1 + rng.index(16), out = 1 + rng.index(16);
  Mlp net(in, hidden, out);
  net.init_uniform(rng);
  std::vector<double> x(in), up(out);
  for (auto& v : x) v = rng.normal();
  for (auto& v : up) v = rng.normal();
  auto objective = [&](const Mlp& n) {
    auto y = n.forward(x);
    double s = 0.0;
    for (std::size_t k = 0; k < out; ++k) s += up[k] * y[k];
    return s;
  };
  auto analytic = mlp_backward(net, x, up);
  const double h = 1e-5;
  double diff2 = 0.0, norm2 = 0.0;
  for (std::size_t p = 0; p < analytic.size(); ++p) {
    Mlp plus = net, minus = net;
    plus.params()[p] += h;
    minus.params()[p] -= h;
    const double numeric = (objective(plus) - objective(minus)) / (2 * h);
    diff2 += (analytic[p] - numeric) * (analytic[p] - numeric);
    norm2 += analytic[p] * analytic[p] + numeric * numeric;
  }
  return norm2 > 0 ? std::sqrt(diff2) / std::sqrt(norm2) : std::sqrt(diff2);
}

}  // namespace

TEST_CASE("mlp_forward examples") {
  Mlp zero(3, 4, 2);
  CHECK(mlp_forward(zero, std::vector<double>{1, 2, 3}) == std::vector<double>{0, 0});
  Mlp id(1, 1, 1);
  make_relu_identity(id);
  CHECK(mlp_forward(id, std::vector<double>{2}) == std::vector<double>{2});
  CHECK(mlp_forward(id, std::vector<double>{-3}) == std::vector<double>{0});
  CHECK_THROWS_AS(mlp_forward(id, std::vector<double>{1, 2}), Error);
}

TEST_CASE("parameter layout") {
  Mlp net(2, 3, 2);
  CHECK(net.params().size() == 3 * 2 + 3 + 2 * 3 + 2);
  net.b2(1) = 5.0;
  CHECK(net.params().back() == 5.0);
  net.w1(0, 0) = 7.0;
  CHECK(net.params()[0] == 7.0);
}

TEST_CASE("mlp_backward examples") {
  Rng rng(3);
  Mlp net(4, 5, 3);
  net.init_uniform(rng);
  auto g = mlp_backward(net, std::vector<double>{1, -1, 0.5, 2}, std::vector<double>{0, 0, 0});
  for (double v : g) CHECK(v == 0.0);

  // A unit whose pre-activation is negative passes no gradient to layer 1.
  Mlp dead(1, 2, 1);
  for (auto& p : dead.params()) p = 0.0;
  dead.w1(0, 0) = -1.0;
  dead.w1(1, 0) = 1.0;
  dead.w2(0, 0) = 1.0;
  dead.w2(0, 1) = 1.0;
  auto gd = mlp_backward(dead, std::vector<double>{2.0}, std::vector<double>{1.0});
  CHECK(gd[0] == 0.0);  // w1(0,0)
  CHECK(gd[2] == 0.0);  // b1(0)
  CHECK(gd[1] == 2.0);  // w1(1,0) = x
}

TEST_CASE("gradient check against central differences") {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) worst = std::max(worst, finite_difference_error(seed));
  CHECK(worst < 1e-4);
}

TEST_CASE("adam_step examples") {
  AdamState opt(1);
  std::vector<double> theta = {0.0};
  adam_step(opt, theta, std::vector<double>{1.0});
  CHECK(theta[0] == doctest::Approx(-0.01).epsilon(1e-6));
  adam_step(opt, theta, std::vector<double>{1.0});
  CHECK(theta[0] < -0.01);

  AdamState still(2);
  std::vector<double> t2 = {0.3, -0.2};
  adam_step(still, t2, std::vector<double>{0.0, 0.0});
  CHECK(t2 == std::vector<double>{0.3, -0.2});
  CHECK_THROWS_AS(adam_step(still, t2, std::vector<double>{1.0}), Error);
}

TEST_CASE("select_action examples") {
  Rng rng(1);
  CHECK(select_action(std::vector<double>{0.1, 0.9, 0.3}, 0.0, rng) == 1);
  CHECK(select_action(std::vector<double>{0.5, 0.5}, 0.0, rng) == 0);
  Rng r1(42), r2(42);
  for (int i = 0; i < 20; ++i)
    CHECK(select_action(std::vector<double>{1, 2, 3, 4}, 1.0, r1) ==
          select_action(std::vector<double>{1, 2, 3, 4}, 1.0, r2));
  CHECK_THROWS_AS(select_action(std::vector<double>{}, 0.0, rng), Error);
}

TEST_CASE("group agent scoring") {
  GroupAgent agent(kSetRepDim, small_cfg());
  for (auto& p : agent.net().params()) p = 0.0;
  StateVector s(kSetRepDim, 1.0), c(kSetRepDim, 2.0);
  CHECK(agent.q_score_group(s, c) == 0.0);

  GroupAgent live(kSetRepDim, small_cfg(7));
  std::vector<StateVector> cands = {c, c, StateVector(kSetRepDim, -1.0)};
  auto scores = live.q_scores(s, cands);
  REQUIRE(scores.size() == 3);
  CHECK(scores[0] == scores[1]);
  for (double v : scores) CHECK(std::isfinite(v));
  CHECK_THROWS_AS(live.q_score_group(StateVector(3, 0.0), c), Error);
  CHECK_THROWS_AS(live.q_score_group(s, StateVector(3, 0.0)), Error);
}

TEST_CASE("operation agent scoring") {
  OperationAgent agent(small_cfg());
  StateVector s(2 * kSetRepDim, 0.5);
  auto q = agent.q_scores_operation(s);
  CHECK(q.size() == kNumOps);
  auto again = agent.q_scores_operation(s);
  CHECK(q == again);
  for (auto& p : agent.net().params()) p = 0.0;
  CHECK(agent.q_scores_operation(s) == std::vector<double>(kNumOps, 0.0));
  CHECK_THROWS_AS(agent.q_scores_operation(StateVector(49, 0.0)), Error);
}

TEST_CASE("single-transition TD loss by hand") {
  AgentConfig cfg = small_cfg();
  cfg.hidden_dim = 1;
  cfg.gamma = 0.9;
  DiscreteAgent agent(1, 1, cfg);
  make_relu_identity(agent.net());
  // Q(s)=relu(0.5)=0.5, Q(s')=relu(0.2)=0.2, target = 1 + 0.9*0.2 = 1.18.
  CascadeTransition t = op_transition(0.5, 0, 1.0, 0.2, false);
  const CascadeTransition* batch[] = {&t};
  CHECK(agent.td_loss(batch) == doctest::Approx(0.4624).epsilon(1e-12));
}

TEST_CASE("zero TD error gives zero loss") {
  AgentConfig cfg = small_cfg();
  cfg.hidden_dim = 1;
  cfg.gamma = 0.0;
  DiscreteAgent agent(1, 1, cfg);
  make_relu_identity(agent.net());
  CascadeTransition a = op_transition(0.3, 0, 0.3, 5.0, false);
  CascadeTransition b = op_transition(1.5, 0, 1.5, -2.0, false);
  const CascadeTransition* batch[] = {&a, &b};
  CHECK(agent.td_loss(batch) == 0.0);
}

TEST_CASE("training on one fixed transition converges") {
  DiscreteAgent agent(3, 4, small_cfg(5));
  CascadeTransition t;
  t.state = {0.2, -0.4, 1.0};
  t.action = 2;
  t.reward = 1.5;
  t.next_state = {1.0, 0.0, -1.0};
  const CascadeTransition* batch[] = {&t};
  int steps = 0;
  double loss = agent.td_loss(batch);
  while (loss >= 1e-3 && steps < 500) {
    agent.train_on(batch);
    loss = agent.td_loss(batch);
    ++steps;
  }
  CHECK(loss < 1e-3);
  CHECK(steps <= 500);
}

TEST_CASE("train_step skips until the buffer holds a batch") {
  DiscreteAgent agent(1, 2, small_cfg());
  for (int i = 0; i < 7; ++i) {
    agent.remember(op_transition(1.0, i % 2, 0.0, 1.0, true));
    CHECK_FALSE(agent.train_step().has_value());
  }
  agent.remember(op_transition(1.0, 0, 0.0, 1.0, true));
  CHECK(agent.train_step().has_value());
}

TEST_CASE("replay buffer evicts the oldest entry") {
  ReplayBuffer buf(32);
  for (int i = 0; i < 33; ++i) {
    CascadeTransition t;
    t.reward = i;
    buf.push(t);
  }
  CHECK(buf.size() == 32);
  auto items = buf.ordered();
  CHECK(items.front()->reward == 1.0);
  CHECK(items.back()->reward == 32.0);
  for (const auto* t : items) CHECK(t->reward != 0.0);
}

TEST_CASE("replay sampling draws distinct entries") {
  ReplayBuffer buf(32);
  for (int i = 0; i < 20; ++i) {
    CascadeTransition t;
    t.reward = i;
    buf.push(t);
  }
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    auto s = buf.sample(8, rng);
    std::set<double> seen;
    for (const auto* t : s) seen.insert(t->reward);
    CHECK(seen.size() == 8);
  }
  CHECK_THROWS_AS(buf.sample(21, rng), Error);
}

TEST_CASE("bandit: the rewarded arm wins") {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    AgentConfig cfg;
    cfg.seed = seed;
    DiscreteAgent agent(1, 3, cfg);
    const StateVector s = {1.0};
    const double rewards[3] = {0.0, 1.0, 0.0};
    int trained = 0;
    while (trained < 300) {
      std::size_t a = agent.select(s);
      agent.remember(op_transition(1.0, static_cast<int>(a), rewards[a], 1.0, true));
      if (agent.train_step()) ++trained;
    }
    auto q = agent.q_values(s);
    if (std::max_element(q.begin(), q.end()) - q.begin() == 1) ++wins;
  }
  CHECK(wins >= 95);
}

TEST_CASE("epsilon decays per selection down to the floor") {
  AgentConfig cfg = small_cfg();
  DiscreteAgent agent(1, 2, cfg);
  CHECK(agent.epsilon() == 0.5);
  agent.select(StateVector{1.0});
  CHECK(agent.epsilon() == doctest::Approx(0.495));
  for (int i = 0; i < 1000; ++i) agent.select(StateVector{1.0});
  CHECK(agent.epsilon() == 0.05);
}

TEST_CASE("AgentConfig validation") {
  AgentConfig c;
  c.gamma = 1.5;
  CHECK_THROWS_AS(c.validate(), Error);
  c = AgentConfig{};
  c.epsilon_floor = 0.9;
  CHECK_THROWS_AS(c.validate(), Error);
  c = AgentConfig{};
  c.batch_size = 64;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("agent state round-trips through a checkpoint") {
  testutil::TempDir dir;
  AgentConfig cfg = small_cfg();
  CascadeAgents agents = CascadeAgents::create(cfg, 99);
  Rng rng(5);
  for (int i = 0; i < 12; ++i) {
    StateVector s1(kSetRepDim), g(kSetRepDim);
    for (auto& v : s1) v = rng.normal();
    for (auto& v : g) v = rng.normal();
    CascadeTransition t;
    t.state = s1;
    t.action_rep = g;
    t.reward = rng.normal();
    t.next_state = s1;
    t.next_candidate_reps = {g, s1};
    agents.group1.remember(t);
    agents.group1.train_step();
    agents.group1.select(s1, std::vector<StateVector>{g, s1});
  }
  auto path = dir.file("ckpt.bin").string();
  save_checkpoint(path, agents);
  CascadeAgents back = load_checkpoint(path, cfg);
  CHECK(back.group1 == agents.group1);
  CHECK(back.operation == agents.operation);
  CHECK(back.group2 == agents.group2);

  // Identical continuation after restore.
  StateVector s(kSetRepDim, 0.25);
  std::vector<StateVector> cands = {StateVector(kSetRepDim, 1.0), StateVector(kSetRepDim, -1.0)};
  for (int i = 0; i < 10; ++i) CHECK(back.group1.select(s, cands) == agents.group1.select(s, cands));
  CHECK(back.group1.train_step() == agents.group1.train_step());

  testutil::write_file(dir.file("bad.bin"), "not a checkpoint");
  CHECK_THROWS_AS(load_checkpoint(dir.file("bad.bin").string(), cfg), Error);
  AgentConfig other = cfg;
  other.hidden_dim = 16;
  CHECK_THROWS_AS(load_checkpoint(path, other), Error);
}

TEST_CASE("agents are deterministic given the master seed") {
  AgentConfig cfg = small_cfg();
  CascadeAgents a = CascadeAgents::create(cfg, 3), b = CascadeAgents::create(cfg, 3),
                c = CascadeAgents::create(cfg, 4);
  CHECK(a.operation == b.operation);
  CHECK_FALSE(a.operation == c.operation);
  CHECK_FALSE(a.group1 == a.group2);
}
