#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace pplab::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_internal = 1,
  exit_validation = 2,
  exit_unsupported = 3,
  exit_inconclusive = 4,
};

const std::vector<std::string>& subcommands();

/// Every key a subcommand accepts, with its default value. Keys listed here
/// are the complete schema; `null` means "derived from other keys".
nlohmann::json defaults(const std::string& command);

/// defaults <- file <- overrides (JSON merge patch), then validated.
/// Throws ConfigError naming the offending key.
nlohmann::json resolve(const std::string& command, const nlohmann::json& file, const nlohmann::json& overrides);

struct Artifact {
  std::string name;  ///< file name inside the output directory
  std::string content;
};

struct RunResult {
  int exit_code = exit_ok;
  nlohmann::json summary;
  std::vector<Artifact> artifacts;  ///< CSV tables; summary and manifest are added by write_outputs
  std::string message;
};

/// Runs a resolved configuration. Never throws: errors map to exit codes.
RunResult execute(const nlohmann::json& config);

/// Writes <command>.json, manifest.json and every artifact into config["output"].
void write_outputs(const nlohmann::json& config, const RunResult& result);

/// Full command-line entry point.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace pplab::cli
