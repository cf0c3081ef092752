#include "adaptex/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace adaptex {

ExhaustiveDP::ExhaustiveDP(TinyInstance instance) : inst_(std::move(instance)) {
  if (inst_.steps < 0) throw std::invalid_argument("tiny instance: negative step count");
  if (!inst_.terminal) throw std::invalid_argument("tiny instance: terminal cost required");
  if (inst_.action_count > 0 && (!inst_.branches || !inst_.admissible))
    throw std::invalid_argument("tiny instance: actions need branches and admissibility");
}

double ExhaustiveDP::leaf(const TinyState& s) {
  if (++leaves_ > inst_.leaf_budget) throw BudgetExceeded("tiny instance: leaf budget exceeded");
  return inst_.terminal(s);
}

double ExhaustiveDP::at_terminal(const TinyState& s) {
  // Zero-latency actions at T may be repeated; delayed ones end after T.
  double best = leaf(s);
  for (int a = 0; a < inst_.action_count; ++a) {
    if (!inst_.admissible(s, a)) continue;
    double v = 0.0;
    for (const auto& br : inst_.branches(s, a)) {
      if (br.prob == 0.0) continue;
      const double next = br.delay_steps == 0 ? at_terminal(br.next) : leaf(br.next);
      v += br.prob * std::exp(inst_.risk_aversion * br.cash) * next;
    }
    best = std::min(best, v);
  }
  return best;
}

double ExhaustiveDP::action_value(int j, const TinyState& s, int a) {
  if (j == inst_.steps) {
    double v = 0.0;
    for (const auto& br : inst_.branches(s, a)) {
      if (br.prob == 0.0) continue;
      const double next = br.delay_steps == 0 ? at_terminal(br.next) : leaf(br.next);
      v += br.prob * std::exp(inst_.risk_aversion * br.cash) * next;
    }
    return v;
  }
  double v = 0.0;
  for (const auto& br : inst_.branches(s, a)) {
    if (br.prob == 0.0) continue;
    const int k = j + std::max(1, br.delay_steps);
    const double next = k > inst_.steps ? leaf(br.next) : value(k, br.next);
    v += br.prob * std::exp(inst_.risk_aversion * br.cash) * next;
  }
  return v;
}

double ExhaustiveDP::value(int j, const TinyState& s) {
  if (j < 0 || j > inst_.steps) throw std::invalid_argument("tiny instance: step out of range");
  if (j == inst_.steps) return at_terminal(s);
  double wait = 0.0;
  if (inst_.wait) {
    for (const auto& br : inst_.wait(s)) wait += br.prob * std::exp(inst_.risk_aversion * br.cash) * value(j + 1, br.next);
  } else {
    wait = value(j + 1, s);
  }
  double best = wait;
  for (int a = 0; a < inst_.action_count; ++a)
    if (inst_.admissible(s, a)) best = std::min(best, action_value(j, s, a));
  return best;
}

int ExhaustiveDP::best_action(int j, const TinyState& s) {
  const double v = value(j, s);
  for (int a = 0; a < inst_.action_count; ++a)
    if (inst_.admissible(s, a) && action_value(j, s, a) <= v) return a;
  return kWait;
}

TinyInstance degenerate_impact_instance(const DegenerateImpactSpec& spec) {
  TinyInstance inst;
  inst.steps = spec.steps;
  inst.risk_aversion = spec.risk_aversion;
  inst.action_count = static_cast<int>(spec.sizes.size());
  inst.admissible = [spec](const TinyState& s, int a) {
    return static_cast<int>(s[1]) + spec.sizes[static_cast<std::size_t>(a)] <= spec.target_shares;
  };
  inst.branches = [spec](const TinyState& s, int a) {
    const double beta = spec.sizes[static_cast<std::size_t>(a)];
    std::vector<TinyBranch> out;
    for (double e : {-spec.noise, spec.noise}) {
      const double y = spec.u + e;
      out.push_back(TinyBranch{0.5, {s[0] + beta * y / 2.0, s[1] + beta}, s[0] * beta + y * beta * beta / 2.0, 0});
    }
    return out;
  };
  inst.terminal = [spec](const TinyState& s) {
    const double r = spec.target_shares - s[1];
    double w = 0.0;
    for (double e : {-spec.noise, spec.noise})
      w += 0.5 * std::exp(spec.risk_aversion * (s[0] * r + (spec.u + e) * r * r / 2.0));
    return w;
  };
  return inst;
}

TinyInstance dirac_limit_instance(const LimitModelParams& params, double u, double time_step) {
  params.validate();
  TinyInstance inst;
  const double ratio = params.horizon / time_step;
  inst.steps = static_cast<int>(std::lround(ratio));
  if (std::abs(ratio - inst.steps) > 1e-9) throw std::invalid_argument("tiny instance: horizon / time_step");
  inst.risk_aversion = params.risk_aversion;
  inst.action_count = static_cast<int>(params.prices.size());
  inst.admissible = [params](const TinyState& s, int) { return static_cast<int>(s[0]) < params.target_shares; };
  inst.branches = [params, u, time_step](const TinyState& s, int a) {
    const double b = params.prices[static_cast<std::size_t>(a)];
    const double rate = -std::log(1.0 - u) * std::exp(-params.intensity_decay * (params.reference_price - b));
    const int slots = params.max_slots();
    auto steps_for = [&](double delay) { return static_cast<int>(std::ceil(delay / time_step - 1e-9)); };
    std::vector<TinyBranch> out;
    for (int k = 1; k <= slots; ++k) {
      const double prob = std::exp(-rate * (k - 1) * params.slot) - std::exp(-rate * k * params.slot);
      out.push_back(TinyBranch{prob, {s[0] + 1.0}, b, steps_for(k * params.slot)});
    }
    out.push_back(TinyBranch{std::exp(-rate * slots * params.slot), s, 0.0, steps_for(slots * params.slot)});
    return out;
  };
  inst.terminal = [params](const TinyState& s) {
    const double r = params.target_shares - s[0];
    const double e = params.risk_aversion * (params.best_ask * r + params.impact_coefficient / 2.0 * r * r);
    return std::exp(std::min(e, params.log_w_max));
  };
  return inst;
}

BayesMoments numerical_bayes_oracle(std::span<const double> grid, std::span<const double> prior_density,
                                    std::span<const double> likelihood) {
  if (grid.size() < 2 || prior_density.size() != grid.size() || likelihood.size() != grid.size())
    throw std::invalid_argument("bayes oracle: grid, prior and likelihood sizes differ");
  double z = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double dx = grid[i + 1] - grid[i];
    const double f0 = prior_density[i] * likelihood[i];
    const double f1 = prior_density[i + 1] * likelihood[i + 1];
    z += dx * (f0 + f1) / 2.0;
    m1 += dx * (f0 * grid[i] + f1 * grid[i + 1]) / 2.0;
    m2 += dx * (f0 * grid[i] * grid[i] + f1 * grid[i + 1] * grid[i + 1]) / 2.0;
  }
  if (!(z > 0.0)) throw DegenerateEvidence("bayes oracle: zero normalizer");
  BayesMoments out;
  out.mean = m1 / z;
  double var = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double dx = grid[i + 1] - grid[i];
    const double d0 = grid[i] - out.mean, d1 = grid[i + 1] - out.mean;
    var += dx * (prior_density[i] * likelihood[i] * d0 * d0 + prior_density[i + 1] * likelihood[i + 1] * d1 * d1) / 2.0;
  }
  out.std = std::sqrt(std::max(0.0, var / z));
  return out;
}

MCEstimate summarize_log_costs(std::span<const double> log_costs) {
  MCEstimate est;
  est.paths = static_cast<long>(log_costs.size());
  if (log_costs.empty()) throw std::invalid_argument("mc: no paths");
  const double top = *std::max_element(log_costs.begin(), log_costs.end());
  double mean = 0.0, mean_log = 0.0;
  for (double l : log_costs) {
    mean += std::exp(l - top);
    mean_log += l;
  }
  mean /= est.paths;
  double var = 0.0;
  for (double l : log_costs) {
    const double d = std::exp(l - top) - mean;
    var += d * d;
  }
  var = est.paths > 1 ? var / (est.paths - 1) : 0.0;
  est.log_mean = top + std::log(mean);
  est.rel_stderr = std::sqrt(var / est.paths) / mean;
  est.mean_log_cost = mean_log / est.paths;
  return est;
}

namespace {

void require_paths(long paths) {
  if (paths < 1000) throw std::invalid_argument("mc: at least 1000 paths required");
}

}  // namespace

MCEstimate mc_value_impact(const DecisionRule& rule, const ImpactModelParams& params, const GaussianBelief& prior,
                           const std::optional<RegimeSchedule>& schedule, long paths, std::uint64_t seed,
                           const SimConfig& config) {
  require_paths(paths);
  std::vector<double> costs(static_cast<std::size_t>(paths));
  for (long i = 0; i < paths; ++i) {
    const auto path = static_cast<std::uint64_t>(i);
    RegimeSchedule truth = schedule ? *schedule : RegimeSchedule::constant(prior.mean);
    if (!schedule && !prior.is_dirac()) {
      auto rng = make_engine(seed, kTruth, path);
      truth = RegimeSchedule::constant(std::normal_distribution<double>(prior.mean, prior.std)(rng));
    }
    costs[static_cast<std::size_t>(i)] = simulate_impact(rule, params, prior, truth, seed, path, config).terminal_log_cost;
  }
  return summarize_log_costs(costs);
}

MCEstimate mc_value_limit(const DecisionRule& rule, const LimitModelParams& params, const FiniteBelief& prior,
                          const std::optional<RegimeSchedule>& schedule, long paths, std::uint64_t seed,
                          const SimConfig& config) {
  require_paths(paths);
  std::vector<double> costs(static_cast<std::size_t>(paths));
  for (long i = 0; i < paths; ++i) {
    const auto path = static_cast<std::uint64_t>(i);
    std::optional<RegimeSchedule> truth = schedule;
    if (!truth) {
      auto rng = make_engine(seed, kTruth, path);
      double r = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      std::size_t j = 0;
      while (j + 1 < prior.atoms().size() && r >= prior.weights()[static_cast<Eigen::Index>(j)]) {
        r -= prior.weights()[static_cast<Eigen::Index>(j)];
        ++j;
      }
      truth = RegimeSchedule::constant(prior.atoms()[j]);
    }
    costs[static_cast<std::size_t>(i)] = simulate_limit(rule, params, prior, *truth, seed, path, config).terminal_log_cost;
  }
  return summarize_log_costs(costs);
}

}  // namespace adaptex
