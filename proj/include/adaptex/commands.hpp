#pragma once

#include "adaptex/config.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

namespace adaptex {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitConfig = 2,  // invalid config, missing or mismatched artifact
  kExitSolver = 3,
};

struct CommonOptions {
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  int threads = 0;  // 0 keeps the OpenMP default
};

/// Solves, extracts the policy, checks residuals and writes the artifacts.
int cmd_solve(const std::filesystem::path& config, const CommonOptions& options, std::ostream& log);
/// Simulates paths under a solved policy and writes trajectories and a summary.
int cmd_simulate(const std::filesystem::path& config, const std::filesystem::path& policy_dir,
                 const CommonOptions& options, std::ostream& log);
/// Runs the oracle, Bayes and residual checks; prints one line per check.
int cmd_validate(const std::filesystem::path& config, const CommonOptions& options, std::ostream& log);

/// Model-defining part of the config; artifacts are tied to it by signature.
nlohmann::json solve_identity(const RunConfig& config);

}  // namespace adaptex
