#pragma once

#include "adaptex/models.hpp"
#include "adaptex/priors.hpp"
#include "adaptex/problems.hpp"
#include "adaptex/simulate.hpp"
#include "adaptex/solver.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

namespace adaptex {

/// Invalid or unreadable configuration; the message names the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ModelKind { impact, limit };

enum class ValidateFault { none, conjugate };

struct RunConfig {
  std::string name = "run";
  ModelKind model = ModelKind::impact;
  std::filesystem::path out;  // empty: out/<name>

  ImpactModelParams impact;
  ImpactGridSpec impact_grid;
  LimitModelParams limit;
  int p_count = 101;
  SchemeParams scheme;

  GaussianBelief impact_prior{0.05, 5e-4};
  double limit_prior_p = 0.5;  // weight of the second atom

  /// True parameter path; drawn from the prior per path when absent.
  std::optional<RegimeSchedule> truth;
  /// Second schedule simulated on the same seeds for paired comparisons.
  std::optional<RegimeSchedule> control;

  SimConfig sim;
  long paths = 200;
  std::uint64_t seed = 1;
  long policy_csv_rows = 1'000'000;  // cap on policy.csv size

  ValidateFault fault = ValidateFault::none;

  /// Throws ConfigError unless every model, grid and scheme invariant holds.
  void validate() const;
  std::filesystem::path output_dir() const;
};

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

/// Every effective field, for manifests and signatures.
nlohmann::json config_json(const RunConfig& config);

/// Solver problem for the configured model.
std::unique_ptr<Problem> make_problem(const RunConfig& config);

const char* model_name(ModelKind kind);

}  // namespace adaptex
