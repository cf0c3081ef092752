#include "adaptex/commands.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Impulse-control execution solver with Bayesian learning"};
  app.require_subcommand(1);

  adaptex::CommonOptions common;
  std::string out;
  long long seed = -1;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", out, "Output directory");
    cmd->add_option("--seed", seed, "Base seed")->check(CLI::NonNegativeNumber);
    cmd->add_option("--threads", common.threads, "Worker threads (0: default)")->check(CLI::NonNegativeNumber);
  };

  std::string config;
  std::string policy_dir;
  auto* solve = app.add_subcommand("solve", "Solve the QVI and write values, policy and manifest");
  solve->add_option("config", config, "Run configuration")->required();
  add_common(solve);
  auto* simulate = app.add_subcommand("simulate", "Simulate paths under a solved policy");
  simulate->add_option("config", config, "Run configuration")->required();
  simulate->add_option("--policy", policy_dir, "Directory written by solve")->required();
  add_common(simulate);
  auto* validate = app.add_subcommand("validate", "Run the oracle and residual checks");
  validate->add_option("config", config, "Run configuration")->required();
  add_common(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : adaptex::kExitConfig;
  }
  if (!out.empty()) common.out = out;
  if (seed >= 0) common.seed = static_cast<std::uint64_t>(seed);

  if (solve->parsed()) return adaptex::cmd_solve(config, common, std::cout);
  if (simulate->parsed()) return adaptex::cmd_simulate(config, policy_dir, common, std::cout);
  return adaptex::cmd_validate(config, common, std::cout);
}
