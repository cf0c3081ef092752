#include "adaptex/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace adaptex {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

int step_count(double horizon, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("simulate: decision_step must be > 0");
  const double ratio = horizon / step;
  const long n = std::lround(ratio);
  if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, ratio))
    throw std::invalid_argument("simulate: horizon must be a multiple of decision_step");
  return static_cast<int>(n);
}

double draw_noise(std::mt19937_64& rng, const ImpactModelParams& params) {
  if (params.discrete_noise) {
    const auto& rule = *params.discrete_noise;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double r = unif(rng);
    for (Eigen::Index i = 0; i < rule.size(); ++i) {
      r -= rule.weights[i];
      if (r < 0.0 || i + 1 == rule.size()) return params.noise.std * rule.nodes[i];
    }
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  return params.noise.std * normal(rng);
}

DecisionContext impact_context(int slice, double t, const ImpactState& s, double x2, const GaussianBelief& b) {
  DecisionContext c;
  c.slice = slice;
  c.t = t;
  c.x1 = s.x1;
  c.x2 = x2;
  c.x3 = s.x3;
  c.x4 = s.x4;
  c.belief_mean = b.mean;
  c.belief_std = b.std;
  return c;
}

DecisionContext limit_context(int slice, double t, const LimitState& s, double x2, const FiniteBelief& b) {
  DecisionContext c;
  c.slice = slice;
  c.t = t;
  c.x1 = 1.0;
  c.x2 = x2;
  c.x3 = s.x3;
  c.p = b.weights()[1];
  c.belief_mean = b.mean();
  return c;
}

}  // namespace

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t path) {
  return std::mt19937_64(splitmix(splitmix(seed) ^ splitmix(stream * 0x632be59bd9b4e019ULL ^ splitmix(path))));
}

UniformRateImpact::UniformRateImpact(ImpactModelParams params, double decision_step)
    : params_(std::move(params)), steps_(step_count(params_.horizon, decision_step)) {}

int UniformRateImpact::decide(const DecisionContext& ctx) const {
  const int n = params_.target_shares;
  const int target = ctx.slice >= steps_ ? n : (n * (ctx.slice + 1) + steps_ - 1) / steps_;
  const int deficit = std::min(target, n) - ctx.x3;
  int best = kWait;
  for (std::size_t a = 0; a < params_.sizes.size(); ++a) {
    const int s = params_.sizes[a];
    if (s <= deficit && (best == kWait || s > params_.sizes[static_cast<std::size_t>(best)])) best = static_cast<int>(a);
  }
  return best;
}

UniformRateLimit::UniformRateLimit(LimitModelParams params) : params_(std::move(params)) {
  best_price_ = static_cast<int>(std::max_element(params_.prices.begin(), params_.prices.end()) - params_.prices.begin());
}

int UniformRateLimit::decide(const DecisionContext& ctx) const {
  if (ctx.x3 >= params_.target_shares) return kWait;
  const double target = std::ceil(params_.target_shares * (ctx.t + params_.max_wait) / params_.horizon - 1e-9);
  return ctx.x3 < target ? best_price_ : kWait;
}

RegimeSchedule::RegimeSchedule(std::vector<std::pair<double, double>> pieces) : pieces_(std::move(pieces)) {
  if (pieces_.empty()) throw std::invalid_argument("schedule: at least one piece required");
  if (pieces_.front().first > 0.0) throw std::invalid_argument("schedule: must start at t = 0");
  for (std::size_t i = 1; i < pieces_.size(); ++i)
    if (!(pieces_[i - 1].first < pieces_[i].first)) throw std::invalid_argument("schedule: start times must increase");
}

double RegimeSchedule::at(double t) const {
  double u = pieces_.front().second;
  for (const auto& [start, value] : pieces_) {
    if (start <= t) u = value;
    else break;
  }
  return u;
}

double draw_execution_time(double start, double limit_price, const RegimeSchedule& schedule,
                           const LimitModelParams& params, double unit_exponential) {
  double cur = start;
  double remaining = unit_exponential;
  for (;;) {
    const double rate = execution_intensity(schedule.at(cur), limit_price, params);
    double next = std::numeric_limits<double>::infinity();
    for (const auto& piece : schedule.pieces())
      if (piece.first > cur) {
        next = piece.first;
        break;
      }
    if (rate > 0.0 && rate * (next - cur) >= remaining) return cur + remaining / rate - start;
    if (!std::isfinite(next)) return std::numeric_limits<double>::infinity();
    remaining -= rate * (next - cur);
    cur = next;
  }
}

Trajectory simulate_impact(const DecisionRule& rule, const ImpactModelParams& params, const GaussianBelief& prior,
                           const RegimeSchedule& schedule, std::uint64_t seed, std::uint64_t path,
                           const SimConfig& config) {
  params.validate();
  if (config.fine_steps < 1) throw std::invalid_argument("simulate: fine_steps must be >= 1");
  const double h = config.decision_step;
  const int steps = step_count(params.horizon, h);
  auto brownian = make_engine(seed, kBrownian, path);
  auto trade_noise = make_engine(seed, kTradeNoise, path);
  auto terminal_noise = make_engine(seed, kTerminalNoise, path);
  std::normal_distribution<double> normal(0.0, 1.0);

  Trajectory traj;
  ImpactState state{params.initial_price, 0, 0.0};
  double x2 = 0.0;
  GaussianBelief belief = prior;

  auto trade = [&](int slice, double t, int action) {
    const int size = params.sizes.at(static_cast<std::size_t>(action));
    if (state.x3 + size > params.target_shares) return false;
    TrajectoryEvent ev;
    ev.tau = t;
    ev.theta = t;
    ev.action = action;
    ev.pre = impact_context(slice, t, state, x2, belief);
    ev.true_u = schedule.at(t);
    const auto tr = impact_trade_transition(state, size, ev.true_u, draw_noise(trade_noise, params), params);
    state = tr.next;
    x2 += tr.cash_increment;
    belief = gaussian_conjugate_update(belief, tr.observation, params.noise);
    ev.observation = tr.observation;
    ev.post = impact_context(slice, t, state, x2, belief);
    traj.events.push_back(ev);
    return true;
  };

  for (int k = 0; k <= steps; ++k) {
    const double t = k * h;
    if (k < steps) {
      const auto ctx = impact_context(k, t, state, x2, belief);
      const int a = rule.decide(ctx);
      traj.decisions.push_back(ctx);
      traj.decided.push_back(a);
      if (a != kWait) trade(k, t, a);
      const double dt = h / config.fine_steps;
      for (int f = 0; f < config.fine_steps; ++f) state = impact_diffusion_step(state, dt, normal(brownian), params);
    } else {
      // Instantaneous trades at T read the T slice again.
      for (int guard = 0; guard <= params.target_shares; ++guard) {
        const auto ctx = impact_context(k, t, state, x2, belief);
        const int a = rule.decide(ctx);
        traj.decisions.push_back(ctx);
        traj.decided.push_back(a);
        if (a == kWait || !trade(k, t, a)) break;
      }
    }
  }

  const double remaining = params.target_shares - state.x3;
  const double u_end = schedule.at(params.horizon) + draw_noise(terminal_noise, params);
  const double cost = x2 + state.x1 * remaining + u_end * remaining * remaining / 2.0;
  traj.end_time = params.horizon;
  traj.terminal_log_cost = params.risk_aversion * cost;
  traj.final_state = impact_context(steps, params.horizon, state, x2, belief);
  return traj;
}

Trajectory simulate_limit(const DecisionRule& rule, const LimitModelParams& params, const FiniteBelief& prior,
                          const RegimeSchedule& schedule, std::uint64_t seed, std::uint64_t path,
                          const SimConfig& config) {
  params.validate();
  if (prior.size() != 2) throw std::invalid_argument("simulate: limit model needs a two-atom belief");
  const double h = config.decision_step;
  const int steps = step_count(params.horizon, h);
  auto execution = make_engine(seed, kExecution, path);
  std::exponential_distribution<double> unit(1.0);
  const IntensityFn intensity = intensity_function(params);

  Trajectory traj;
  LimitState state;
  double x2 = 0.0;
  FiniteBelief belief = prior;
  double end_time = params.horizon;

  int j = 0;
  while (j <= steps && state.x3 < params.target_shares) {
    const double t = j * h;
    const auto ctx = limit_context(j, t, state, x2, belief);
    const int a = rule.decide(ctx);
    traj.decisions.push_back(ctx);
    traj.decided.push_back(a);
    if (a == kWait) {
      ++j;
      continue;
    }
    const double b = params.prices.at(static_cast<std::size_t>(a));
    TrajectoryEvent ev;
    ev.tau = t;
    ev.action = a;
    ev.pre = ctx;
    ev.true_u = schedule.at(t);
    const double theta = draw_execution_time(t, b, schedule, params, unit(execution));
    const auto tr = limit_order_transition(state, params.max_wait, b, theta, params);
    if (config.filter == LimitFilter::slot) {
      SlotOutcome outcome = SlotOutcome::censored();
      if (tr.executed) {
        const int k = static_cast<int>(std::ceil(tr.elapsed / params.slot - 1e-12));
        outcome = SlotOutcome::executed_in(std::clamp(k, 1, params.max_slots()));
      }
      belief = slot_censored_update(belief, outcome, params.slot, params.max_slots(), b, intensity);
    } else {
      belief = execution_time_update(belief, tr.executed, tr.elapsed, params.max_wait, b, intensity);
    }
    state = tr.next;
    x2 += tr.cash_increment;
    ev.theta = t + tr.elapsed;
    ev.executed = tr.executed;
    ev.observation = tr.elapsed;
    ev.post = limit_context(j, ev.theta, state, x2, belief);
    traj.events.push_back(ev);
    end_time = std::max(end_time, ev.theta);
    const double wait = tr.executed ? std::max(h, tr.elapsed) : params.max_wait;
    j = std::max(j + 1, static_cast<int>(std::ceil((t + wait) / h - 1e-9)));
  }

  traj.end_time = end_time;
  traj.terminal_log_cost = params.risk_aversion * x2 + limit_terminal_log_value(state, params);
  traj.final_state = limit_context(std::min(j, steps), std::min(j * h, end_time), state, x2, belief);
  return traj;
}

}  // namespace adaptex
