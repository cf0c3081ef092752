#include "adaptex/models.hpp"

#include <algorithm>
#include <numbers>
#include <string>

namespace adaptex {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

double clamp_exp(double log_value) {
  if (log_value > std::log(std::numeric_limits<double>::max())) return std::numeric_limits<double>::max();
  return std::exp(log_value);
}

}  // namespace

void ImpactModelParams::validate() const {
  require(risk_aversion > 0.0, "impact.risk_aversion must be > 0");
  require(target_shares >= 1, "impact.target_shares must be >= 1");
  require(horizon > 0.0, "impact.horizon must be > 0");
  require(sigma_annual >= 0.0, "impact.sigma_annual must be >= 0");
  require(seconds_per_year > 0.0, "impact.seconds_per_year must be > 0");
  require(resilience_rate >= 0.0, "impact.resilience_rate must be >= 0");
  require(noise.std > 0.0, "impact.noise_std must be > 0");
  require(!sizes.empty(), "impact.sizes must be nonempty");
  for (int s : sizes) require(s >= 1, "impact.sizes must be integers >= 1");
  require(!(log_w_max <= 0.0), "impact.log_w_max must be > 0");
  if (discrete_noise) {
    require(discrete_noise->size() > 0, "impact discrete noise rule is empty");
    require(std::abs(discrete_noise->weights.sum() - 1.0) < 1e-12, "impact discrete noise weights must sum to 1");
  }
}

ImpactState impact_diffusion_step(const ImpactState& state, double dt, double g01, const ImpactModelParams& params) {
  require(dt > 0.0, "diffusion step: dt must be > 0");
  ImpactState next = state;
  next.x4 = state.x4 * std::exp(-params.resilience_rate * dt);
  next.x1 = state.x1 + params.sigma_per_second() * std::sqrt(dt) * g01 + (next.x4 - state.x4);
  return next;
}

ImpactTransition impact_trade_transition(const ImpactState& state, int size, double u, double eps,
                                         const ImpactModelParams& params) {
  if (size < 1) throw InadmissibleAction("trade size must be >= 1");
  if (state.x3 + size > params.target_shares) throw InadmissibleAction("overshoot: trade exceeds target shares");
  const double y = u + eps;
  const double jump = size * y / 2.0;
  ImpactTransition out;
  out.next.x1 = state.x1 + jump;
  out.next.x4 = state.x4 + jump;
  out.next.x3 = state.x3 + size;
  out.cash_increment = state.x1 * size + y * size * size / 2.0;
  out.observation = y;
  return out;
}

double impact_observation(double price_jump, int size) {
  if (size <= 0) throw std::invalid_argument("no observation: trade size is 0");
  return 2.0 * price_jump / size;
}

double impact_observation_likelihood(double price_jump, int size, double u, const ImpactModelParams& params) {
  const double y = impact_observation(price_jump, size);
  const double s = params.noise.std;
  const double z = (y - u) / s;
  return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * s);
}

double impact_terminal_log_value(const ImpactState& state, const GaussianBelief& belief,
                                 const ImpactModelParams& params) {
  const double eta = params.risk_aversion;
  const double remaining = params.target_shares - state.x3;
  const double c = remaining * remaining / 2.0;
  double log_w = eta * state.x1 * remaining + eta * belief.mean * c;
  if (params.discrete_noise) {
    // Gaussian MGF in upsilon, exact sum over the eps0 rule.
    log_w += eta * eta * c * c * belief.std * belief.std / 2.0;
    const auto& rule = *params.discrete_noise;
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < rule.size(); ++i) top = std::max(top, eta * c * params.noise.std * rule.nodes[i]);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < rule.size(); ++i)
      sum += rule.weights[i] * std::exp(eta * c * params.noise.std * rule.nodes[i] - top);
    log_w += top + std::log(sum);
  } else {
    const double var = belief.std * belief.std + params.noise.std * params.noise.std;
    log_w += eta * eta * c * c * var / 2.0;
  }
  return std::min(log_w, params.log_w_max);
}

double impact_terminal_operator(const ImpactState& state, const GaussianBelief& belief,
                                const ImpactModelParams& params) {
  return clamp_exp(impact_terminal_log_value(state, belief, params));
}

int LimitModelParams::max_slots() const { return static_cast<int>(std::lround(max_wait / slot)); }

void LimitModelParams::validate() const {
  require(horizon > 0.0, "limit.horizon must be > 0");
  require(max_wait > 0.0 && max_wait <= horizon, "limit.max_wait must be in (0, horizon]");
  require(slot > 0.0, "limit.slot must be > 0");
  require(std::abs(max_slots() * slot - max_wait) < 1e-9, "limit.slot must divide limit.max_wait");
  require(!prices.empty(), "limit.prices must be nonempty");
  require(target_shares >= 1, "limit.target_shares must be >= 1");
  require(atoms.size() == 2, "limit.atoms must hold exactly two values");
  for (double u : atoms) require(u >= 0.0 && u < 1.0, "limit.atoms must lie in [0, 1)");
  require(risk_aversion > 0.0, "limit.risk_aversion must be > 0");
  require(log_w_max > 0.0, "limit.log_w_max must be > 0");
}

double execution_intensity(double u, double limit_price, const LimitModelParams& params) {
  if (!(u >= 0.0 && u < 1.0)) throw std::invalid_argument("invalid atom: u must lie in [0, 1)");
  return -std::log1p(-u) * std::exp(-params.intensity_decay * (params.reference_price - limit_price));
}

IntensityFn intensity_function(const LimitModelParams& params) {
  return [params](double u, double b) { return execution_intensity(u, b, params); };
}

LimitTransition limit_order_transition(const LimitState& state, double wait, double limit_price, double theta,
                                       const LimitModelParams& params) {
  if (state.x3 >= params.target_shares) throw InadmissibleAction("complete: no order may be placed");
  if (theta < 0.0) throw std::invalid_argument("execution time must be >= 0");
  LimitTransition out;
  out.next = state;
  if (theta <= wait) {
    out.executed = true;
    out.elapsed = theta;
    out.next.x3 = state.x3 + 1;
    out.cash_increment = limit_price;
  } else {
    out.elapsed = wait;
  }
  return out;
}

double limit_terminal_log_value(const LimitState& state, const LimitModelParams& params) {
  const double remaining = std::max(0, params.target_shares - state.x3);
  const double exponent = params.best_ask * remaining + params.impact_coefficient / 2.0 * remaining * remaining;
  return std::min(params.risk_aversion * exponent, params.log_w_max);
}

double limit_terminal_operator(const LimitState& state, const LimitModelParams& params) {
  return clamp_exp(limit_terminal_log_value(state, params));
}

}  // namespace adaptex
