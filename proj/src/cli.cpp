#include "grfg/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>

namespace grfg {

namespace {

using json = nlohmann::json;

template <typename T>
T get_as(const json& v, const std::string& key) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw Error("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<long long>() < 0))
        throw Error("");
    } else {
      if (!v.is_number()) throw Error("");
    }
    return v.get<T>();
  } catch (const std::exception&) {
    throw Error("config key '" + key + "' has an invalid value: " + v.dump());
  }
}

using Setter = std::function<void(RunConfig&, const json&, const std::string&)>;

template <typename T>
Setter field(T RunConfig::*member) {
  return [member](RunConfig& c, const json& v, const std::string& k) { c.*member = get_as<T>(v, k); };
}

template <typename S, typename T>
Setter nested(S RunConfig::*outer, T S::*inner) {
  return [outer, inner](RunConfig& c, const json& v, const std::string& k) {
    (c.*outer).*inner = get_as<T>(v, k);
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"epochs", field(&RunConfig::epochs)},
      {"steps_per_epoch", field(&RunConfig::steps_per_epoch)},
      {"stop_threshold",
       [](RunConfig& c, const json& v, const std::string& k) {
         if (v.is_null()) c.stop_threshold.reset();
         else c.stop_threshold = get_as<double>(v, k);
       }},
      {"k",
       [](RunConfig& c, const json& v, const std::string& k) {
         if (v.is_null()) c.k.reset();
         else c.k = get_as<std::size_t>(v, k);
       }},
      {"n_folds", field(&RunConfig::n_folds)},
      {"reset_per_epoch", field(&RunConfig::reset_per_epoch)},
      {"clustering", field(&RunConfig::clustering)},
      {"n_bins", nested(&RunConfig::info, &InfoConfig::n_bins)},
      {"mi_epsilon", nested(&RunConfig::info, &InfoConfig::epsilon)},
      {"gamma", nested(&RunConfig::agent, &AgentConfig::gamma)},
      {"epsilon_start", nested(&RunConfig::agent, &AgentConfig::epsilon_start)},
      {"epsilon_decay", nested(&RunConfig::agent, &AgentConfig::epsilon_decay)},
      {"epsilon_floor", nested(&RunConfig::agent, &AgentConfig::epsilon_floor)},
      {"hidden_dim", nested(&RunConfig::agent, &AgentConfig::hidden_dim)},
      {"learning_rate", nested(&RunConfig::agent, &AgentConfig::learning_rate)},
      {"replay_capacity", nested(&RunConfig::agent, &AgentConfig::replay_capacity)},
      {"batch_size", nested(&RunConfig::agent, &AgentConfig::batch_size)},
      {"n_trees", nested(&RunConfig::forest, &ForestConfig::n_trees)},
      {"max_depth", nested(&RunConfig::forest, &ForestConfig::max_depth)},
      {"min_samples_split", nested(&RunConfig::forest, &ForestConfig::min_samples_split)},
      {"features_per_split", nested(&RunConfig::forest, &ForestConfig::features_per_split)},
      {"bootstrap", nested(&RunConfig::forest, &ForestConfig::bootstrap)},
  };
  return table;
}

json record_to_json(const StepRecord& r) {
  return json{
      {"epoch", r.epoch},
      {"step", r.step},
      {"n_groups", r.n_groups},
      {"group1", r.group1},
      {"group2", r.group2},
      {"operation", std::string(op_name(r.op))},
      {"scenario", r.scenario == Scenario::binary_cross ? "binary_cross" : "unary_relevant"},
      {"n_generated", r.n_generated},
      {"r1", r.r1},
      {"r2", r.r2},
      {"r3", r.r3},
      {"utility_before", r.utility_before},
      {"utility_after", r.utility_after},
      {"score", r.score},
      {"best_score", r.best_score},
      {"feature_count", r.feature_count},
  };
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

/// CLI11 wants the arguments reversed.
void parse_args(CLI::App& app, const std::vector<std::string>& args) {
  std::vector<std::string> rev(args.rbegin(), args.rend());
  app.parse(rev);
}

template <typename Body>
int guarded(std::ostream& err, CLI::App& app, const std::vector<std::string>& args, Body body) {
  try {
    parse_args(app, args);
  } catch (const CLI::CallForHelp&) {
    err << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  try {
    return body();
  } catch (const InvariantError& e) {
    err << "internal error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

RunConfig apply_config(const json& doc, RunConfig base) {
  if (!doc.is_object()) throw Error("config must be a JSON object of key/value pairs");
  const auto& table = setters();
  for (const auto& [key, value] : doc.items()) {
    auto it = table.find(key);
    if (it == table.end()) throw Error("unknown config key '" + key + "'");
    it->second(base, value, key);
  }
  return base;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return apply_config(doc, std::move(base));
}

json default_config_json() {
  RunConfig c;
  return json{
      {"epochs", c.epochs},
      {"steps_per_epoch", c.steps_per_epoch},
      {"stop_threshold", nullptr},
      {"k", nullptr},
      {"n_folds", c.n_folds},
      {"reset_per_epoch", c.reset_per_epoch},
      {"clustering", c.clustering},
      {"n_bins", c.info.n_bins},
      {"mi_epsilon", c.info.epsilon},
      {"gamma", c.agent.gamma},
      {"epsilon_start", c.agent.epsilon_start},
      {"epsilon_decay", c.agent.epsilon_decay},
      {"epsilon_floor", c.agent.epsilon_floor},
      {"hidden_dim", c.agent.hidden_dim},
      {"learning_rate", c.agent.learning_rate},
      {"replay_capacity", c.agent.replay_capacity},
      {"batch_size", c.agent.batch_size},
      {"n_trees", c.forest.n_trees},
      {"max_depth", c.forest.max_depth},
      {"min_samples_split", c.forest.min_samples_split},
      {"features_per_split", c.forest.features_per_split},
      {"bootstrap", c.forest.bootstrap},
  };
}

json report_to_json(const RunReport& report) {
  json records = json::array();
  for (const auto& r : report.records) records.push_back(record_to_json(r));
  json best = json::array();
  for (const auto& f : report.best_features)
    best.push_back({{"name", f.name}, {"expression", render_name(f.expr)}});
  return json{
      {"policy", policy_name(report.policy)},
      {"seed", report.seed},
      {"task", task_name(report.task)},
      {"original_arity", report.original_arity},
      {"epochs", report.epochs},
      {"steps_per_epoch", report.steps_per_epoch},
      {"initial_score", report.initial_score},
      {"records", records},
      {"best_score", report.best_score},
      {"best_record", report.best_record},
      {"best_features", best},
      {"wall_clock_seconds", report.wall_clock_seconds},
  };
}

std::size_t threads_from_env() {
  const char* v = std::getenv("GRFG_THREADS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) throw Error(std::string("GRFG_THREADS must be a positive integer, got '") + v + "'");
  return static_cast<std::size_t>(n);
}

int cmd_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reconstruct a feature space with cascading agents (grfg) or at random (rdg)", "grfg run"};
  std::string data, target, task, config, out_dir, policy = "grfg";
  std::uint64_t seed = 0;
  std::optional<std::size_t> epochs, steps;
  app.add_option("--data", data, "input CSV")->required();
  app.add_option("--target", target, "target column name")->required();
  app.add_option("--task", task, "classification|regression")->required();
  app.add_option("--config", config, "JSON config file");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--out", out_dir, "output directory")->required();
  app.add_option("--policy", policy, "grfg|rdg");
  app.add_option("--epochs", epochs, "override epochs");
  app.add_option("--steps", steps, "override steps per epoch");

  return guarded(err, app, args, [&] {
    const Policy pol = parse_policy(policy);
    DataTable table = load_csv(data, target, parse_task(task));
    RunConfig cfg = config.empty() ? RunConfig{} : load_run_config(config);
    if (epochs) cfg.epochs = *epochs;
    if (steps) cfg.steps_per_epoch = *steps;
    cfg.seed = seed;
    cfg.forest.threads = threads_from_env();

    std::optional<CascadeAgents> agents;
    RunReport report = run_policy(pol, table, cfg, &agents);

    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    write_text(dir / "report.json", report_to_json(report).dump(2) + "\n");

    std::vector<NamedColumn> cols;
    for (const auto& f : report.best_features) cols.push_back({f.name, evaluate(f.expr, table)});
    write_csv(dir / "features.csv", cols, &table.target(), target);
    write_provenance(dir / "provenance.tsv", report.best_features);
    if (pol == Policy::grfg && agents) save_checkpoint((dir / "checkpoint.bin").string(), *agents);

    out << json{{"best_score", report.best_score},
                {"initial_score", report.initial_score},
                {"n_features", report.best_features.size()},
                {"out", dir.string()}}
               .dump()
        << '\n';
    return 0;
  });
}

int cmd_eval(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Re-evaluate provenance expressions with the downstream forest", "grfg eval"};
  std::string data, target, task, config, provenance;
  std::uint64_t seed = 0;
  app.add_option("--data", data, "input CSV")->required();
  app.add_option("--target", target, "target column name")->required();
  app.add_option("--task", task, "classification|regression")->required();
  app.add_option("--provenance", provenance, "provenance TSV")->required();
  app.add_option("--config", config, "JSON config file used for the run");
  app.add_option("--seed", seed, "master seed used for the run");

  return guarded(err, app, args, [&] {
    DataTable table = load_csv(data, target, parse_task(task));
    RunConfig cfg = config.empty() ? RunConfig{} : load_run_config(config);
    cfg.seed = seed;
    cfg.forest.threads = threads_from_env();
    cfg.validate();
    auto entries = read_provenance(provenance, column_names(table));
    std::vector<FeatureExpr> exprs;
    for (const auto& e : entries) exprs.push_back(e.expr);
    Metrics m = evaluate_features(table, exprs, cfg);
    out << json{{"score", m.score},
                {"fold_scores", m.fold_scores},
                {"n_features", exprs.empty() ? table.original_arity() : exprs.size()}}
               .dump()
        << '\n';
    return 0;
  });
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const std::string usage =
      "usage: grfg <run|eval|config> [options]\n"
      "  run     reconstruct the feature space and write report/features/provenance\n"
      "  eval    re-evaluate a provenance file\n"
      "  config  print every config key with its default\n";
  if (args.empty()) {
    err << usage;
    return 1;
  }
  std::vector<std::string> rest(args.begin() + 1, args.end());
  if (args[0] == "run") return cmd_run(rest, out, err);
  if (args[0] == "eval") return cmd_eval(rest, out, err);
  if (args[0] == "config") {
    out << default_config_json().dump(2) << '\n';
    return 0;
  }
  if (args[0] == "-h" || args[0] == "--help") {
    out << usage;
    return 0;
  }
  err << "unknown command '" << args[0] << "'\n" << usage;
  return 1;
}

}  // namespace grfg
