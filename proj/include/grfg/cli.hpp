#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "grfg/engine.hpp"

namespace grfg {

/// Applies a flat JSON object of config keys on top of `base`. Unknown keys
/// and wrongly typed values raise Error naming the key.
RunConfig apply_config(const nlohmann::json& doc, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

/// Every accepted config key with its default, as JSON.
nlohmann::json default_config_json();

nlohmann::json report_to_json(const RunReport& report);

/// Worker count from GRFG_THREADS (default 1).
std::size_t threads_from_env();

/// `run` and `eval` subcommands. `args` excludes the program and subcommand
/// names. Exit codes: 0 ok, 1 usage or data error, 2 internal invariant.
int cmd_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cmd_eval(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Full command line dispatch (argv[0] excluded).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace grfg
