#pragma once

#include "adaptex/models.hpp"
#include "adaptex/priors.hpp"

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace adaptex {

/// Everything a Markovian rule may look at when a decision is due.
struct DecisionContext {
  int slice = 0;
  double t = 0.0;
  double x1 = 0.0;
  double x2 = 0.0;
  int x3 = 0;
  double x4 = 0.0;
  double belief_mean = 0.0;
  double belief_std = 0.0;
  double p = 0.0;  // finite beliefs: weight of the second atom
};

inline constexpr int kWait = -1;

class DecisionRule {
 public:
  virtual ~DecisionRule() = default;
  /// Action index, or kWait.
  virtual int decide(const DecisionContext& ctx) const = 0;
};

class NeverAct final : public DecisionRule {
 public:
  int decide(const DecisionContext&) const override { return kWait; }
};

/// Buys along the straight line ceil(N (k+1) / steps), using the largest size that fits.
class UniformRateImpact final : public DecisionRule {
 public:
  UniformRateImpact(ImpactModelParams params, double decision_step);
  int decide(const DecisionContext& ctx) const override;

 private:
  ImpactModelParams params_;
  int steps_;
};

/// Sends an order at the highest limit price whenever x3 < ceil(N (t + wait) / T).
class UniformRateLimit final : public DecisionRule {
 public:
  explicit UniformRateLimit(LimitModelParams params);
  int decide(const DecisionContext& ctx) const override;

 private:
  LimitModelParams params_;
  int best_price_;
};

/// Piecewise-constant true parameter: value of the last piece starting at or before t.
class RegimeSchedule {
 public:
  explicit RegimeSchedule(std::vector<std::pair<double, double>> pieces);
  static RegimeSchedule constant(double u) { return RegimeSchedule({{0.0, u}}); }
  static RegimeSchedule shift(double before, double at, double after) {
    return RegimeSchedule({{0.0, before}, {at, after}});
  }

  double at(double t) const;
  const std::vector<std::pair<double, double>>& pieces() const { return pieces_; }

 private:
  std::vector<std::pair<double, double>> pieces_;
};

struct TrajectoryEvent {
  double tau = 0.0;
  double theta = 0.0;
  int action = kWait;
  DecisionContext pre;
  DecisionContext post;  // includes the posterior belief
  double true_u = 0.0;
  double observation = 0.0;  // impact: y; limit: elapsed time
  bool executed = true;
};

struct Trajectory {
  std::vector<TrajectoryEvent> events;
  std::vector<DecisionContext> decisions;
  std::vector<int> decided;  // action taken at each decision sample
  double end_time = 0.0;     // T[phi]
  double terminal_log_cost = 0.0;
  DecisionContext final_state;
};

enum class LimitFilter { continuous, slot };

struct SimConfig {
  double decision_step = 1.0;
  int fine_steps = 10;
  LimitFilter filter = LimitFilter::continuous;
};

/// Independent engine per (seed, stream, path).
std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t path);

enum Stream : std::uint64_t { kBrownian = 1, kTradeNoise = 2, kTerminalNoise = 3, kExecution = 4, kTruth = 5 };

Trajectory simulate_impact(const DecisionRule& rule, const ImpactModelParams& params, const GaussianBelief& prior,
                           const RegimeSchedule& schedule, std::uint64_t seed, std::uint64_t path,
                           const SimConfig& config);

Trajectory simulate_limit(const DecisionRule& rule, const LimitModelParams& params, const FiniteBelief& prior,
                          const RegimeSchedule& schedule, std::uint64_t seed, std::uint64_t path,
                          const SimConfig& config);

/// Execution time of an order sent at `start` under a time-varying atom; +inf never happens
/// unless every rate is zero.
double draw_execution_time(double start, double limit_price, const RegimeSchedule& schedule,
                           const LimitModelParams& params, double unit_exponential);

}  // namespace adaptex
