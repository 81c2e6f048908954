#pragma once

#include <string>

#include "json.hpp"
#include "rdsos/config.hpp"

namespace rdsos {

enum ExitCode : int {
  kExitOk = 0,
  kExitContract = 1,
  kExitConfig = 2,
  kExitNonConvergence = 3,
};

struct CommandResult {
  int exit_code = kExitOk;
  nlohmann::json summary;
};

/// Every command writes <out>/config.json, merges its stage into
/// <out>/manifest.json and keeps its files under <out>/<stage>/. All files
/// are written atomically. The config must already be validated.
CommandResult cmd_simulate(const RunConfig& c);
CommandResult cmd_moments(const RunConfig& c);
CommandResult cmd_assemble(const RunConfig& c);
CommandResult cmd_solve(const RunConfig& c);
/// Directories holding occupation.csv and terminal.csv; empty strings mean
/// <out>/solve and <out>/moments.
CommandResult cmd_compare(const RunConfig& c, const std::string& computed = "", const std::string& reference = "");
CommandResult cmd_validate(const RunConfig& c);
/// Collects the stage reports found under <out> into report.json and report.md.
CommandResult cmd_report(const RunConfig& c);

}  // namespace rdsos
