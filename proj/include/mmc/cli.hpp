#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "mmc/config.hpp"

namespace mmc {

enum ExitCode : int {
  kExitOk = 0,
  kExitVerificationFailed = 1,
  kExitConfigError = 2,
  kExitEstimationError = 3,
};

/// Result of one subcommand: exit code plus the summary printed to stdout.
struct CommandResult {
  int exit_code = kExitOk;
  nlohmann::json summary;
};

CommandResult cmd_bound(const RunConfig& cfg, const nlohmann::json& doc);
CommandResult cmd_verify(const RunConfig& cfg, const nlohmann::json& doc);
CommandResult cmd_simulate(const RunConfig& cfg, const nlohmann::json& doc);
CommandResult cmd_calibrate(const RunConfig& cfg, const nlohmann::json& doc);

/// Loads, overrides, validates and dispatches; maps exceptions to exit
/// codes. Errors go to `err` as one JSON object per line.
int run_command(const std::string& command, const std::optional<std::string>& config_path,
                const Overrides& overrides, std::ostream& out, std::ostream& err);

}  // namespace mmc
