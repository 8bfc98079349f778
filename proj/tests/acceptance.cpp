// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
// Optional arguments restrict the run to the listed criterion numbers.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "grfg/cli.hpp"
#include "grfg/cluster.hpp"
#include "grfg/engine.hpp"
#include "grfg/info.hpp"
#include "grfg/rl.hpp"
#include "grfg/staterep.hpp"
#include "helpers.hpp"

using namespace grfg;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------- 1

Outcome mi_oracle() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t pairs = 0;
  for (std::size_t n = 1; n <= 8; ++n) {
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= 3;
    std::vector<Labels> all(total, Labels(n));
    for (std::size_t code = 0; code < total; ++code) {
      std::size_t c = code;
      for (std::size_t i = 0; i < n; ++i, c /= 3) all[code][i] = static_cast<int>(c % 3);
    }
    // H = log n - (1/n) sum c log c over histogram cells.
    std::array<double, 9> clogc{};
    for (std::size_t c = 1; c <= 8; ++c) clogc[c] = static_cast<double>(c) * std::log(static_cast<double>(c));
    const double dn = static_cast<double>(n), logn = std::log(dn);
    std::vector<double> h(total);
    for (std::size_t v = 0; v < total; ++v) {
      int counts[3] = {0, 0, 0};
      for (int x : all[v]) ++counts[x];
      double s = 0.0;
      for (int c : counts) s += clogc[static_cast<std::size_t>(c)];
      h[v] = logn - s / dn;
    }
    for (std::size_t a = 0; a < total; ++a) {
      for (std::size_t b = 0; b < total; ++b) {
        int joint[9] = {};
        for (std::size_t i = 0; i < n; ++i) ++joint[all[a][i] * 3 + all[b][i]];
        double s = 0.0;
        for (int c : joint) s += clogc[static_cast<std::size_t>(c)];
        const double oracle = h[a] + h[b] - (logn - s / dn);
        worst = std::max(worst, std::fabs(mutual_information(all[a], all[b]) - oracle));
        ++pairs;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-12 && secs < 10.0,
          std::to_string(pairs) + " pairs, max error " + fmt("%.3g", worst) + ", " + fmt("%.2f", secs) + " s"};
}

// ---------------------------------------------------------------- 2

Outcome distance_properties() {
  Rng rng(2);
  InfoConfig cfg;
  double worst_sym = 0.0, worst_self = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 20 + rng.index(300);
    const Task task = rng.uniform() < 0.5 ? Task::regression : Task::classification;
    Column y(n);
    for (auto& v : y) v = task == Task::regression ? rng.normal() : static_cast<double>(rng.index(3));

    std::vector<Column> pool;
    const std::size_t m = 2 + rng.index(8);
    for (std::size_t j = 0; j < m; ++j) pool.push_back(testutil::normal_column(rng, n));
    std::vector<ColumnView> ci, cj;
    for (const auto& c : pool) (rng.uniform() < 0.5 ? ci : cj).push_back(c);
    if (ci.empty()) ci.push_back(pool.front());
    if (cj.empty()) cj.push_back(pool.back());
    const double d1 = group_distance(ci, cj, y, cfg, task);
    const double d2 = group_distance(cj, ci, y, cfg, task);
    worst_sym = std::max(worst_sym, std::fabs(d1 - d2));

    // Affine images of one column share its bins up to relabeling, hence its relevance.
    Column base = testutil::normal_column(rng, n);
    std::vector<Column> same;
    const std::size_t g = 1 + rng.index(5);
    for (std::size_t k = 0; k < g; ++k) {
      double a = std::pow(10.0, static_cast<int>(rng.index(7)) - 3) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
      double b = rng.normal() * 100.0;
      Column c(n);
      for (std::size_t i = 0; i < n; ++i) c[i] = a * base[i] + b;
      same.push_back(std::move(c));
    }
    std::vector<ColumnView> cc(same.begin(), same.end());
    worst_self = std::max(worst_self, std::fabs(group_distance(cc, cc, y, cfg, task)));
  }
  return {worst_sym <= 1e-12 && worst_self <= 1e-12,
          "200 cases, max asymmetry " + fmt("%.3g", worst_sym) + ", max dis(C,C) " + fmt("%.3g", worst_self)};
}

// ---------------------------------------------------------------- 3

constexpr double kBlockThreshold = 0.05;

bool recovers_blocks(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n = 500;
  std::array<Column, 3> base;
  for (auto& b : base) b = testutil::normal_column(rng, n);
  std::vector<Column> cols;
  for (std::size_t k = 0; k < 3; ++k)
    for (int j = 0; j < 3; ++j) {
      Column c(n);
      for (std::size_t i = 0; i < n; ++i) c[i] = base[k][i] + 0.01 * rng.normal();
      cols.push_back(std::move(c));
    }
  // Strong, weak and no dependence on the three blocks.
  Column y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = 3.0 * base[0][i] + 2.0 * base[1][i] + 0.1 * rng.normal();
  // Shuffle column order so recovery cannot lean on adjacency.
  std::vector<std::size_t> order = {0, 1, 2, 3, 4, 5, 6, 7, 8};
  rng.shuffle(order);
  std::vector<ColumnView> views;
  for (std::size_t o : order) views.push_back(cols[o]);
  GroupPartition p = m_clustering(views, y, InfoConfig{}, Task::regression, kBlockThreshold);
  std::set<std::set<std::size_t>> got, want;
  for (const auto& g : p.groups) {
    std::set<std::size_t> s;
    for (std::size_t i : g) s.insert(order[i] / 3);
    if (s.size() != 1) return false;
    std::set<std::size_t> members;
    for (std::size_t i : g) members.insert(order[i]);
    got.insert(members);
  }
  for (std::size_t k = 0; k < 3; ++k) want.insert({3 * k, 3 * k + 1, 3 * k + 2});
  return got == want;
}

Outcome block_recovery() {
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) ok += recovers_blocks(seed);
  return {ok >= 9, std::to_string(ok) + "/10 seeds recover the 3 blocks (threshold " + fmt("%g", kBlockThreshold) + ")"};
}

// ---------------------------------------------------------------- 4

bool bit_equal(const StateVector& a, const StateVector& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

Outcome state_representation() {
  Rng rng(4);
  int ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 1 + rng.index(10), n = 2 + rng.index(100);
    std::vector<Column> cols;
    for (std::size_t j = 0; j < m; ++j) {
      Column c = testutil::normal_column(rng, n);
      const double scale = std::pow(10.0, static_cast<int>(rng.index(9)) - 4);
      for (auto& v : c) v *= scale;
      cols.push_back(std::move(c));
    }
    std::vector<ColumnView> v(cols.begin(), cols.end());
    const StateVector base = rep_feature_set(v);

    std::vector<std::size_t> co(m);
    for (std::size_t j = 0; j < m; ++j) co[j] = j;
    rng.shuffle(co);
    std::vector<ColumnView> pc;
    for (std::size_t j : co) pc.push_back(cols[j]);

    std::vector<std::size_t> ro(n);
    for (std::size_t i = 0; i < n; ++i) ro[i] = i;
    rng.shuffle(ro);
    std::vector<Column> rows(m, Column(n));
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t i = 0; i < n; ++i) rows[j][i] = cols[j][ro[i]];
    std::vector<ColumnView> pr(rows.begin(), rows.end());

    ok += base.size() == kSetRepDim && bit_equal(base, rep_feature_set(pc)) && bit_equal(base, rep_feature_set(pr));
  }
  return {ok == 100, std::to_string(ok) + "/100 tables: length 49, column- and row-permutation invariant"};
}

// ---------------------------------------------------------------- 5

Outcome gradient_check() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(derive_seed(5, seed));
    const std::size_t in = 1 + rng.index(16), hidden = 1 + rng.index(16), out = 1 + rng.index(16);
    Mlp net(in, hidden, out);
    net.init_uniform(rng);
    std::vector<double> x(in), up(out);
    for (auto& v : x) v = rng.normal();
    for (auto& v : up) v = rng.normal();
    auto objective = [&](const Mlp& n) {
      auto yv = n.forward(x);
      double s = 0.0;
      for (std::size_t k = 0; k < out; ++k) s += up[k] * yv[k];
      return s;
    };
    const auto analytic = mlp_backward(net, x, up);
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
    worst = std::max(worst, norm2 > 0 ? std::sqrt(diff2 / norm2) : std::sqrt(diff2));
  }
  return {worst < 1e-4, "100 nets, worst relative error " + fmt("%.3g", worst)};
}

// ---------------------------------------------------------------- 6

Outcome bandit() {
  const auto t0 = Clock::now();
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    AgentConfig cfg;
    cfg.seed = seed;
    DiscreteAgent agent(1, 3, cfg);
    const StateVector s = {1.0};
    const double rewards[3] = {0.0, 1.0, 0.0};
    int trained = 0;
    while (trained < 300) {
      const std::size_t a = agent.select(s);
      CascadeTransition t;
      t.state = s;
      t.action = static_cast<int>(a);
      t.reward = rewards[a];
      t.next_state = s;
      t.terminal = true;
      agent.remember(std::move(t));
      if (agent.train_step()) ++trained;
    }
    const auto q = agent.q_values(s);
    wins += std::max_element(q.begin(), q.end()) - q.begin() == 1;
  }
  const double secs = seconds_since(t0);
  return {wins >= 95 && secs < 30.0, std::to_string(wins) + "/100 seeds pick action 1, " + fmt("%.2f", secs) + " s"};
}

// ---------------------------------------------------------------- 7-10

constexpr std::size_t kSeeds = 10;

struct RunResult {
  json report;
  std::filesystem::path dir;
};

struct EndToEnd {
  testutil::TempDir tmp;
  std::vector<std::filesystem::path> data;
  std::vector<double> baseline;
  std::vector<RunResult> grfg, rdg;
  double seconds = 0.0;
  std::vector<std::string> errors;
};

bool has_product(const FeatureExpr& e) {
  if (e.kind() == FeatureExpr::Kind::leaf) return false;
  if (e.kind() == FeatureExpr::Kind::binary && e.op() == Op::multiply &&
      e.left().kind() == FeatureExpr::Kind::leaf && e.right().kind() == FeatureExpr::Kind::leaf) {
    const std::set<std::string> leaves = {e.left().column(), e.right().column()};
    if (leaves == std::set<std::string>{"x1", "x2"}) return true;
  }
  if (has_product(e.left())) return true;
  return e.kind() == FeatureExpr::Kind::binary && has_product(e.right());
}

const std::set<std::string> kRawNames = {"x1", "x2", "x3", "x4", "x5"};

RunResult cli_run(EndToEnd& e, std::size_t seed, const std::string& policy) {
  const auto dir = e.tmp.file(policy + std::to_string(seed));
  std::ostringstream out, err;
  const int code = run_cli({"run", "--data", e.data[seed].string(), "--target", "y", "--task", "regression",
                            "--seed", std::to_string(seed), "--out", dir.string(), "--policy", policy,
                            "--epochs", "10", "--steps", "10"},
                           out, err);
  if (code != 0) {
    e.errors.push_back(policy + " seed " + std::to_string(seed) + ": " + err.str());
    return {json::object(), dir};
  }
  return {json::parse(testutil::read_file(dir / "report.json")), dir};
}

EndToEnd& end_to_end() {
  static EndToEnd e = [] {
    EndToEnd r;
    const auto t0 = Clock::now();
    for (std::size_t seed = 0; seed < kSeeds; ++seed) {
      DataTable t = testutil::product_table(seed, 500, 5);
      r.data.push_back(r.tmp.file("synthetic" + std::to_string(seed) + ".csv"));
      write_csv(r.data.back(), t.columns(), &t.target(), "y");
      // Raw-feature oracle: the run's folds and forest on the untouched columns.
      RunConfig cfg;
      cfg.seed = seed;
      const DataTable loaded = load_csv(r.data.back(), "y", Task::regression);
      std::vector<ColumnView> views = loaded.views();
      r.baseline.push_back(
          evaluate_cv(views, loaded.target(), Task::regression, run_forest(cfg), run_folds(loaded, cfg)).score);
    }
    for (std::size_t seed = 0; seed < kSeeds; ++seed) {
      r.grfg.push_back(cli_run(r, seed, "grfg"));
      r.rdg.push_back(cli_run(r, seed, "rdg"));
    }
    r.seconds = seconds_since(t0);
    return r;
  }();
  return e;
}

Outcome synthetic_recovery() {
  EndToEnd& e = end_to_end();
  if (!e.errors.empty()) return {false, "run failed: " + e.errors.front()};
  int lifted = 0, product = 0;
  std::string per_seed;
  for (std::size_t s = 0; s < kSeeds; ++s) {
    const json& rep = e.grfg[s].report;
    const double best = rep["best_score"].get<double>();
    lifted += best >= e.baseline[s] + 0.10;
    bool found = false;
    for (const auto& f : rep["best_features"]) found = found || has_product(parse_name(f["expression"].get<std::string>(), kRawNames));
    product += found;
    per_seed += " " + fmt("%.3f", e.baseline[s]) + "->" + fmt("%.3f", best) + (found ? "*" : "");
  }
  const bool pass = lifted >= 8 && product >= 6 && e.seconds < 600.0;
  return {pass, std::to_string(lifted) + "/10 seeds beat baseline by 0.10, " + std::to_string(product) +
                    "/10 contain (x1*x2), " + fmt("%.1f", e.seconds) + " s for 20 runs;" + per_seed};
}

Outcome grfg_vs_rdg() {
  EndToEnd& e = end_to_end();
  if (!e.errors.empty()) return {false, "run failed: " + e.errors.front()};
  int wins = 0, losses = 0;
  double mg = 0.0, mr = 0.0;
  for (std::size_t s = 0; s < kSeeds; ++s) {
    const double g = e.grfg[s].report["best_score"].get<double>();
    const double r = e.rdg[s].report["best_score"].get<double>();
    wins += g > r;
    losses += g < r;
    mg += g / kSeeds;
    mr += r / kSeeds;
  }
  // One-sided sign test over the untied pairs.
  const int trials = wins + losses;
  double p = 0.0;
  for (int k = wins; k <= trials; ++k) {
    double c = 1.0;
    for (int i = 0; i < k; ++i) c = c * (trials - i) / (i + 1);
    p += c * std::pow(0.5, trials);
  }
  const bool pass = mg > mr && trials > 0 && p < 0.05;
  return {pass, "mean GRFG " + fmt("%.4f", mg) + " vs RDG " + fmt("%.4f", mr) + ", wins " + std::to_string(wins) +
                    "/" + std::to_string(trials) + ", sign test p=" + fmt("%.4f", p)};
}

bool bits_equal(const Column& a, const Column& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

Outcome provenance_integrity() {
  EndToEnd& e = end_to_end();
  if (!e.errors.empty()) return {false, "run failed: " + e.errors.front()};
  int ok = 0, total = 0;
  std::string first_failure;
  for (std::size_t s = 0; s < kSeeds; ++s) {
    for (const RunResult* r : {&e.grfg[s], &e.rdg[s]}) {
      ++total;
      const DataTable original = load_csv(e.data[s], "y", Task::regression);
      const DataTable written = load_csv(r->dir / "features.csv", "y", Task::regression);
      const auto prov = read_provenance(r->dir / "provenance.tsv", kRawNames);
      bool good = prov.size() == written.columns().size() && !prov.empty();
      for (std::size_t i = 0; good && i < prov.size(); ++i)
        good = bits_equal(evaluate(prov[i].expr, original), written.columns()[i].values);

      std::ostringstream out, err;
      const int code = run_cli({"eval", "--data", e.data[s].string(), "--target", "y", "--task", "regression",
                                "--provenance", (r->dir / "provenance.tsv").string(), "--seed", std::to_string(s)},
                               out, err);
      good = good && code == 0 &&
             json::parse(out.str())["score"].get<double>() == r->report["best_score"].get<double>();
      ok += good;
      if (!good && first_failure.empty()) first_failure = " (first failure: " + r->dir.filename().string() + ")";
    }
  }
  return {ok == total, std::to_string(ok) + "/" + std::to_string(total) +
                           " runs re-evaluate bit-for-bit and reproduce best_score" + first_failure};
}

Outcome size_control() {
  EndToEnd& e = end_to_end();
  if (!e.errors.empty()) return {false, "run failed: " + e.errors.front()};
  std::size_t records = 0, worst = 0, violations = 0;
  for (std::size_t s = 0; s < kSeeds; ++s) {
    for (const RunResult* r : {&e.grfg[s], &e.rdg[s]}) {
      const std::size_t bound = 2 * r->report["original_arity"].get<std::size_t>();
      for (const auto& rec : r->report["records"]) {
        const std::size_t c = rec["feature_count"].get<std::size_t>();
        worst = std::max(worst, c);
        violations += c > bound;
        ++records;
      }
    }
  }
  return {violations == 0 && records > 0, std::to_string(records) + " records, max feature count " +
                                              std::to_string(worst) + " (bound 10)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"MI oracle equivalence", mi_oracle},
      {"group distance symmetry and self-distance", distance_properties},
      {"M-Clustering block recovery", block_recovery},
      {"state representation length and invariance", state_representation},
      {"MLP gradient check", gradient_check},
      {"bandit convergence", bandit},
      {"end-to-end synthetic recovery", synthetic_recovery},
      {"GRFG beats RDG", grfg_vs_rdg},
      {"provenance integrity", provenance_integrity},
      {"size control", size_control},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
