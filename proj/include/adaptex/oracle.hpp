#pragma once

#include "adaptex/models.hpp"
#include "adaptex/priors.hpp"
#include "adaptex/simulate.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace adaptex {

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// State of a tiny instance: whatever coordinates the callbacks agree on.
using TinyState = std::vector<double>;

struct TinyBranch {
  double prob = 0.0;
  TinyState next;
  double cash = 0.0;    // added to the cost exponent
  int delay_steps = 0;  // latency in time steps
};

/// Finite decision tree. Values are factored costs w (linear scale, minimized).
struct TinyInstance {
  int steps = 1;
  double risk_aversion = 1.0;
  int action_count = 0;
  std::function<bool(const TinyState&, int)> admissible;
  std::function<std::vector<TinyBranch>(const TinyState&, int)> branches;
  /// Expected factored terminal cost after T.
  std::function<double(const TinyState&)> terminal;
  /// Transitions while waiting one step; identity when empty.
  std::function<std::vector<TinyBranch>(const TinyState&)> wait;
  long leaf_budget = 10'000'000;
};

/// Exhaustive backward recursion over the full outcome tree.
class ExhaustiveDP {
 public:
  explicit ExhaustiveDP(TinyInstance instance);

  /// Value at step j (0..steps) of state s.
  double value(int j, const TinyState& s);
  /// Optimal action at (j, s), kWait when waiting is optimal; ties go to the first action.
  int best_action(int j, const TinyState& s);
  long leaves() const { return leaves_; }

 private:
  double action_value(int j, const TinyState& s, int a);
  double at_terminal(const TinyState& s);
  double leaf(const TinyState& s);

  TinyInstance inst_;
  long leaves_ = 0;
};

/// Impact model with sigma = 0, no resilience, Dirac belief at u and eps in
/// {-noise, +noise}. State (x1, x3).
struct DegenerateImpactSpec {
  double x0 = 1.0;
  double u = 0.3;
  double noise = 0.1;
  std::vector<int> sizes{1, 2};
  int target_shares = 3;
  int steps = 5;
  double risk_aversion = 1.0;
};

TinyInstance degenerate_impact_instance(const DegenerateImpactSpec& spec);

/// Limit model with a Dirac belief on one atom. State (x3).
TinyInstance dirac_limit_instance(const LimitModelParams& params, double u, double time_step);

struct BayesMoments {
  double mean = 0.0;
  double std = 0.0;
};

/// Trapezoidal posterior moments of prior(x) * likelihood(x) on a sorted grid.
BayesMoments numerical_bayes_oracle(std::span<const double> grid, std::span<const double> prior_density,
                                    std::span<const double> likelihood);

struct MCEstimate {
  double log_mean = 0.0;    // log of the sample mean of exp(log cost)
  double rel_stderr = 0.0;  // standard error divided by the sample mean
  double mean_log_cost = 0.0;
  long paths = 0;
};

MCEstimate summarize_log_costs(std::span<const double> log_costs);

/// Monte Carlo value of a rule. Without a schedule the true parameter of each
/// path is drawn from the prior.
MCEstimate mc_value_impact(const DecisionRule& rule, const ImpactModelParams& params, const GaussianBelief& prior,
                           const std::optional<RegimeSchedule>& schedule, long paths, std::uint64_t seed,
                           const SimConfig& config);

MCEstimate mc_value_limit(const DecisionRule& rule, const LimitModelParams& params, const FiniteBelief& prior,
                          const std::optional<RegimeSchedule>& schedule, long paths, std::uint64_t seed,
                          const SimConfig& config);

}  // namespace adaptex
