#include "adaptex/commands.hpp"

#include "adaptex/checks.hpp"
#include "adaptex/io.hpp"
#include "adaptex/oracle.hpp"
#include "adaptex/policy.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace adaptex {

namespace fs = std::filesystem;

namespace {

RunConfig load_with(const fs::path& path, const CommonOptions& options) {
  RunConfig config = load_config(path);
  if (options.seed) config.seed = *options.seed;
  if (options.out) config.out = *options.out;
  if (options.threads < 0) throw ConfigError("--threads must be >= 0");
#ifdef _OPENMP
  if (options.threads > 0) omp_set_num_threads(options.threads);
#endif
  return config;
}

Point initial_point(const RunConfig& config, const Problem& problem) {
  DecisionContext ctx;
  ctx.x1 = config.impact.initial_price;
  ctx.belief_mean = config.impact_prior.mean;
  ctx.belief_std = config.impact_prior.std;
  ctx.p = config.limit_prior_p;
  return problem.point_from(ctx);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct ArmStats {
  std::vector<double> log_costs;
  std::vector<double> final_stat;  // m for impact, p for limit
  double shares = 0.0;
  double orders = 0.0;
  double final_std = 0.0;
};

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

nlohmann::json arm_json(const ArmStats& arm, ModelKind model) {
  const MCEstimate est = summarize_log_costs(arm.log_costs);
  const double n = static_cast<double>(arm.log_costs.size());
  nlohmann::json j = {{"paths", est.paths},
                      {"log_mean_cost", est.log_mean},
                      {"rel_stderr", est.rel_stderr},
                      {"mean_log_cost", est.mean_log_cost},
                      {"stderr_log_cost", stderr_of(arm.log_costs)},
                      {"mean_shares", arm.shares / n},
                      {"mean_orders", arm.orders / n}};
  if (model == ModelKind::impact) {
    j["mean_final_m"] = mean_of(arm.final_stat);
    j["stderr_final_m"] = stderr_of(arm.final_stat);
    j["mean_final_s"] = arm.final_std / n;
  } else {
    j["mean_final_p"] = mean_of(arm.final_stat);
    j["stderr_final_p"] = stderr_of(arm.final_stat);
  }
  return j;
}

// Ratios of the convergence regime (h2, h1/h2, h0/h1) -> 0; only reported.
std::vector<std::string> regime_warnings(const Problem& problem, const SchemeParams& scheme) {
  std::vector<std::string> out;
  double h1 = std::numeric_limits<double>::infinity();
  for (int k : problem.space_axes()) {
    const Axis& a = problem.grid().axis(k);
    for (Eigen::Index i = 0; i + 1 < a.size(); ++i) h1 = std::min(h1, a.gap(i));
  }
  if (!std::isfinite(h1)) return out;
  char buf[160];
  if (scheme.h2 > 0.0 && h1 / scheme.h2 > 1.0) {
    std::snprintf(buf, sizeof buf, "h1/h2 = %.3g exceeds 1", h1 / scheme.h2);
    out.emplace_back(buf);
  }
  if (scheme.time_step / h1 > 1.0) {
    std::snprintf(buf, sizeof buf, "h0/h1 = %.3g exceeds 1", scheme.time_step / h1);
    out.emplace_back(buf);
  }
  return out;
}

}  // namespace

nlohmann::json solve_identity(const RunConfig& config) {
  nlohmann::json full = config_json(config);
  nlohmann::json id;
  id["model"] = full["run"]["model"];
  id["scheme"] = full["scheme"];
  if (config.model == ModelKind::impact) {
    id["impact"] = full["impact"];
    id["impact_grid"] = full["impact_grid"];
  } else {
    id["limit"] = full["limit"];
  }
  return id;
}

int cmd_solve(const fs::path& config_path, const CommonOptions& options, std::ostream& log) {
  RunConfig config;
  try {
    config = load_with(config_path, options);
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  const auto t0 = std::chrono::steady_clock::now();
  std::unique_ptr<Problem> problem;
  SolveResult result;
  PolicyGrid policy;
  QVIReport residuals;
  try {
    problem = make_problem(config);
    log << "solving " << config.name << ": " << problem->grid().size() << " nodes, "
        << std::lround(problem->horizon() / config.scheme.time_step) << " steps\n";
    for (const auto& w : regime_warnings(*problem, config.scheme)) log << "warning: " << w << "\n";
    result = backward_solve(*problem, config.scheme);
    policy = extract_policy(result.field, *problem, config.scheme);
    residuals = qvi_residuals(result.field, *problem, config.scheme);
  } catch (const std::exception& e) {
    log << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  }
  const double wall = seconds_since(t0);

  const Grid& grid = problem->grid();
  const nlohmann::json gj = grid_json(grid, config.scheme.time_step, problem->horizon());
  const nlohmann::json identity = solve_identity(config);
  const std::string signature = grid_signature(gj, identity);
  const Point x0 = initial_point(config, *problem);
  const double value0 = grid.interpolate(result.field.slices.front(), x0);

  try {
    StagedDirectory stage(config.output_dir());
    const nlohmann::json header = {{"signature", signature}, {"model", model_name(config.model)}};
    write_value_dump(stage.path() / "values.bin", result.field, header);
    write_policy_dump(stage.path() / "policy.bin", policy, header);
    write_policy_csv(stage.path() / "policy.csv", policy, config.policy_csv_rows);
    write_values_csv(stage.path() / "values_t0.csv", result.field);

    nlohmann::json slices = nlohmann::json::array();
    for (const auto& s : residuals.slices)
      slices.push_back({{"t", s.t},
                        {"continuation", s.max_continuation},
                        {"intervention", s.max_intervention},
                        {"complementarity", s.max_complementarity},
                        {"active", s.active},
                        {"interior", s.interior}});
    nlohmann::json manifest;
    manifest["format_version"] = kFormatVersion;
    manifest["command"] = "solve";
    manifest["signature"] = signature;
    manifest["config"] = config_json(config);
    manifest["grid"] = gj;
    manifest["value_convention"] = "log w, v = -exp(eta x2) w";
    manifest["initial_log_value"] = value0;
    manifest["initial_point"] = std::vector<double>(x0.data(), x0.data() + x0.size());
    manifest["residuals"] = {{"max_violation", residuals.max_violation()}, {"slices", slices}};
    manifest["active_nodes"] = result.report.active_total();
    manifest["clamp_count"] = result.report.clamp_count;
    manifest["residual_clamp_count"] = residuals.clamp_count;
    manifest["terminal_iterations"] = result.report.terminal_iterations;
    manifest["regime_warnings"] = regime_warnings(*problem, config.scheme);
    manifest["wall_time_s"] = wall;
    manifest["files"] = file_inventory(stage.path());
    write_json(stage.path() / "manifest.json", manifest);
    stage.commit();
  } catch (const std::exception& e) {
    log << "error: cannot write artifacts: " << e.what() << "\n";
    return kExitConfig;
  }
  char line[200];
  std::snprintf(line, sizeof line, "log w(0, x0) = %.10g; max residual %.3e; %.1f s\n", value0,
                residuals.max_violation(), wall);
  log << line << "wrote " << config.output_dir().string() << "\n";
  return kExitOk;
}

int cmd_simulate(const fs::path& config_path, const fs::path& policy_dir, const CommonOptions& options,
                 std::ostream& log) {
  RunConfig config;
  std::unique_ptr<Problem> problem;
  PolicyGrid policy;
  double solver_value = 0.0;
  try {
    config = load_with(config_path, options);
    problem = make_problem(config);
    const nlohmann::json manifest = read_json(policy_dir / "manifest.json");
    const nlohmann::json gj = grid_json(problem->grid(), config.scheme.time_step, problem->horizon());
    const std::string expected = grid_signature(gj, solve_identity(config));
    if (manifest.value("signature", std::string()) != expected)
      throw ArtifactError("policy artifact does not match the config (grid signature mismatch)");
    nlohmann::json header;
    policy = read_policy_dump(policy_dir / "policy.bin", problem->grid(), &header);
    if (header.value("signature", std::string()) != expected) throw ArtifactError("policy.bin signature mismatch");
    solver_value = manifest.at("initial_log_value").get<double>();
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  const fs::path out_dir = options.out ? *options.out : fs::path(config.output_dir().string() + "-sim");
  const PolicyRule rule(policy, *problem);
  const TrajectoryKind kind = config.model == ModelKind::impact ? TrajectoryKind::impact : TrajectoryKind::limit;
  try {
    StagedDirectory stage(out_dir);
    struct Arm {
      std::string name;
      std::optional<RegimeSchedule> schedule;
      ArmStats stats;
    };
    std::vector<Arm> arms{{"truth", config.truth, {}}};
    if (config.control) arms.push_back({"control", config.control, {}});
    for (auto& arm : arms) {
      fs::create_directories(stage.path() / arm.name);
      for (long i = 0; i < config.paths; ++i) {
        const auto path = static_cast<std::uint64_t>(i);
        auto rng = make_engine(config.seed, kTruth, path);
        Trajectory traj;
        if (config.model == ModelKind::impact) {
          RegimeSchedule truth = RegimeSchedule::constant(config.impact_prior.mean);
          if (arm.schedule) {
            truth = *arm.schedule;
          } else if (!config.impact_prior.is_dirac()) {
            truth = RegimeSchedule::constant(
                std::normal_distribution<double>(config.impact_prior.mean, config.impact_prior.std)(rng));
          }
          traj = simulate_impact(rule, config.impact, config.impact_prior, truth, config.seed, path, config.sim);
          arm.stats.final_stat.push_back(traj.final_state.belief_mean);
          arm.stats.final_std += traj.final_state.belief_std;
        } else {
          const FiniteBelief prior =
              FiniteBelief::two_point(config.limit.atoms[0], config.limit.atoms[1], config.limit_prior_p);
          RegimeSchedule truth = RegimeSchedule::constant(config.limit.atoms[0]);
          if (arm.schedule) {
            truth = *arm.schedule;
          } else {
            const bool high = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < config.limit_prior_p;
            truth = RegimeSchedule::constant(config.limit.atoms[high ? 1 : 0]);
          }
          traj = simulate_limit(rule, config.limit, prior, truth, config.seed, path, config.sim);
          arm.stats.final_stat.push_back(traj.final_state.p);
        }
        arm.stats.log_costs.push_back(traj.terminal_log_cost);
        arm.stats.shares += traj.final_state.x3;
        arm.stats.orders += static_cast<double>(traj.events.size());
        char name[32];
        std::snprintf(name, sizeof name, "path_%05ld.csv", i);
        write_trajectory_csv(stage.path() / arm.name / name, traj, kind, policy.labels);
      }
    }

    nlohmann::json summary;
    summary["format_version"] = kFormatVersion;
    summary["seed"] = config.seed;
    summary["solver_initial_log_value"] = solver_value;
    for (const auto& arm : arms) summary["arms"][arm.name] = arm_json(arm.stats, config.model);
    if (arms.size() == 2) {
      std::vector<double> diff;
      for (std::size_t i = 0; i < arms[0].stats.final_stat.size(); ++i)
        diff.push_back(arms[0].stats.final_stat[i] - arms[1].stats.final_stat[i]);
      const double m = mean_of(diff), se = stderr_of(diff);
      summary["paired"] = {{"statistic", config.model == ModelKind::impact ? "final_m" : "final_p"},
                           {"mean_difference", m},
                           {"stderr", se},
                           {"z", se > 0.0 ? m / se : 0.0}};
    }
    write_json(stage.path() / "summary.json", summary);

    nlohmann::json manifest;
    manifest["format_version"] = kFormatVersion;
    manifest["command"] = "simulate";
    manifest["config"] = config_json(config);
    manifest["policy_signature"] = grid_signature(grid_json(problem->grid(), config.scheme.time_step, problem->horizon()),
                                                  solve_identity(config));
    manifest["files"] = file_inventory(stage.path());
    write_json(stage.path() / "manifest.json", manifest);
    stage.commit();
    log << "simulated " << config.paths << " paths per arm; wrote " << out_dir.string() << "\n";
  } catch (const std::exception& e) {
    log << "simulation failure: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitOk;
}

int cmd_validate(const fs::path& config_path, const CommonOptions& options, std::ostream& log) {
  RunConfig config;
  try {
    config = load_with(config_path, options);
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  std::vector<CheckResult> results;
  auto run = [&](const char* name, auto&& fn) {
    try {
      results.push_back(fn());
    } catch (const std::exception& e) {
      results.push_back(CheckResult{name, false, 0.0, 0.0, std::string("threw: ") + e.what()});
    }
  };
  run("impact oracle", [] { return check_impact_oracle(); });
  run("limit oracle", [] { return check_limit_oracle(); });
  run("gaussian bayes", [&] { return check_gaussian_bayes(100, config.seed, config.fault); });
  run("finite bayes", [] { return check_finite_bayes(); });
  run("martingale", [] { return check_martingale(); });
  run("coarse residuals", [&] { return check_coarse_residuals(config); });
  bool ok = true;
  for (const auto& r : results) {
    log << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    ok = ok && r.passed;
  }
  return ok ? kExitOk : kExitCheckFailed;
}

}  // namespace adaptex
