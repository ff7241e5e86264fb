#pragma once

// Command dispatch for the ringmod tool. Every command writes
// <out>/<command>.json and, with --csv, <out>/<command>.csv for commands
// that produce a table.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"

namespace ringmod::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitHypothesis = 2;
inline constexpr int kExitNonConvergence = 3;

/// Version of the JSON report layout.
inline constexpr int kSchemaVersion = 1;

const std::vector<std::string>& command_names();
const char* toolkit_version();

struct RunOptions {
  std::string command;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  bool csv = false;
};

struct RunResult {
  int exit_code = kExitOk;
  nlohmann::json report;
  std::string json_path;
  std::optional<std::string> csv_path;
};

/// Runs one command on a parsed configuration and writes its report files.
/// Errors are caught and mapped to exit codes; the report then carries an
/// "error" object.
RunResult run(const RunOptions& opts, RunConfig cfg);

/// Same, loading the configuration from `config_path` first.
RunResult run_file(const RunOptions& opts, const std::string& config_path);

/// argv front end (CLI11).
int main_entry(int argc, char** argv);

}  // namespace ringmod::cli
