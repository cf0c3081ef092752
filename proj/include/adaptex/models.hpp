#pragma once

#include "adaptex/priors.hpp"
#include "adaptex/quadrature.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace adaptex {

/// An action that the model cannot execute at the given state.
class InadmissibleAction : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Aggressive orders with linear immediate impact and exponential resilience.
// Time is in seconds.

struct ImpactModelParams {
  double sigma_annual = 40.0;           // price units per sqrt(year)
  double seconds_per_year = 5896800.0;  // 252 days x 6.5 h
  double resilience_rate = std::log(3.0);
  ObservationNoise noise{1e-4};
  double risk_aversion = 1.0;
  int target_shares = 25;
  std::vector<int> sizes{1, 2, 3, 4, 5};
  double horizon = 30.0;
  double initial_price = 100.0;
  /// Upper clamp on the factored terminal value, in log units.
  double log_w_max = std::numeric_limits<double>::infinity();
  /// Standardized rule for eps when the noise is not Gaussian (test instances).
  std::optional<StandardRuled> discrete_noise;

  double sigma_per_second() const { return sigma_annual / std::sqrt(seconds_per_year); }
  bool has_resilience() const { return resilience_rate > 0.0; }
  void validate() const;
};

/// Price x1, shares bought x3, resilience drift x4. Cost x2 is factored out.
struct ImpactState {
  double x1 = 0.0;
  int x3 = 0;
  double x4 = 0.0;
};

struct ImpactTransition {
  double elapsed = 0.0;
  ImpactState next;
  double cash_increment = 0.0;
  double observation = 0.0;  // per-unit impact y = upsilon + eps
};

ImpactState impact_diffusion_step(const ImpactState& state, double dt, double g01, const ImpactModelParams& params);

ImpactTransition impact_trade_transition(const ImpactState& state, int size, double u, double eps,
                                         const ImpactModelParams& params);

/// Per-unit impact observed from a price jump: y = 2 dx1 / size.
double impact_observation(double price_jump, int size);

/// Normal density of y = 2 dx1 / size around u with std sigma_eps.
double impact_observation_likelihood(double price_jump, int size, double u, const ImpactModelParams& params);

/// log of E[exp(eta (x1 R + (upsilon + eps0) R^2 / 2))], clamped at log_w_max.
double impact_terminal_log_value(const ImpactState& state, const GaussianBelief& belief,
                                 const ImpactModelParams& params);
double impact_terminal_operator(const ImpactState& state, const GaussianBelief& belief,
                                const ImpactModelParams& params);

// ---------------------------------------------------------------------------
// One-share limit orders with exponential execution times. Time is in minutes.

struct LimitModelParams {
  double horizon = 15.0;
  double max_wait = 1.0;
  double slot = 0.25;
  std::vector<double> prices{0.90, 0.92, 0.94, 0.96, 0.98};
  double best_ask = 1.02;
  double impact_coefficient = 5e2;
  int target_shares = 10;
  std::vector<double> atoms{0.3, 0.8};
  double intensity_decay = 20.0;
  double reference_price = 0.98;
  double risk_aversion = 1.0;
  double log_w_max = std::log(1e12);

  int max_slots() const;
  void validate() const;
};

struct LimitState {
  int x3 = 0;
};

struct LimitTransition {
  double elapsed = 0.0;
  LimitState next;
  double cash_increment = 0.0;
  bool executed = false;
};

/// rho(u, b) = -ln(1-u) exp(-decay (ref - b)); per minute.
double execution_intensity(double u, double limit_price, const LimitModelParams& params);

IntensityFn intensity_function(const LimitModelParams& params);

LimitTransition limit_order_transition(const LimitState& state, double wait, double limit_price, double theta,
                                       const LimitModelParams& params);

/// best_ask R + kappa R^2 / 2 (times eta), clamped at log_w_max.
double limit_terminal_log_value(const LimitState& state, const LimitModelParams& params);
double limit_terminal_operator(const LimitState& state, const LimitModelParams& params);

}  // namespace adaptex
