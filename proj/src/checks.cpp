#include "adaptex/checks.hpp"

#include "adaptex/oracle.hpp"
#include "adaptex/quadrature.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace adaptex {

namespace {

std::string format(const char* fmt, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, fmt, a, b);
  return buf;
}

CheckResult verdict(std::string name, double metric, double tolerance, std::string detail = {}) {
  CheckResult r;
  r.name = std::move(name);
  r.metric = metric;
  r.tolerance = tolerance;
  r.passed = std::isfinite(metric) && metric <= tolerance;
  r.detail = detail.empty() ? format("worst %.3e (tolerance %.1e)", metric, tolerance) : std::move(detail);
  return r;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

double normal_pdf(double x, double m, double s) {
  const double z = (x - m) / s;
  return std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * std::numbers::pi));
}

// Deliberately wrong conjugate update for fault injection: ignores the prior.
GaussianBelief tampered_update(const GaussianBelief&, double y, const ObservationNoise& noise) {
  return GaussianBelief{y, noise.std};
}

}  // namespace

DegenerateImpactSetup degenerate_impact_setup() {
  DegenerateImpactSetup s;
  s.params.sigma_annual = 0.0;
  s.params.resilience_rate = 0.0;
  s.params.noise.std = s.spec.noise;
  s.params.target_shares = s.spec.target_shares;
  s.params.sizes = s.spec.sizes;
  s.params.horizon = s.spec.steps;
  s.params.initial_price = s.spec.x0;
  s.params.risk_aversion = s.spec.risk_aversion;
  s.params.discrete_noise = symmetric_two_point_rule<double>();
  // Jumps are size*(u +- noise)/2 in {0.1, 0.2, 0.2, 0.4}: multiples of 0.1.
  s.grid.x1_min = 0.5;
  s.grid.x1_max = 2.0;
  s.grid.x1_count = 16;
  s.grid.m_min = 0.2;
  s.grid.m_max = 0.4;
  s.grid.m_count = 3;
  s.grid.s_nodes = {0.0, 1e-3};
  // Worst case climb over the horizon is N * 0.4 / 2 = 0.6 above the start.
  for (int i = 1; i <= 8; ++i) s.checked_prices.push_back(0.5 + 0.1 * i);
  return s;
}

CheckResult check_impact_oracle(double tolerance) {
  const DegenerateImpactSetup setup = degenerate_impact_setup();
  ImpactProblem problem(setup.params, setup.grid);
  SchemeParams scheme;
  scheme.time_step = 1.0;
  const SolveResult result = backward_solve(problem, scheme);
  ExhaustiveDP dp(degenerate_impact_instance(setup.spec));
  double worst = 0.0;
  long compared = 0;
  for (int j = 0; j <= setup.spec.steps; ++j)
    for (int x3 = 0; x3 <= setup.spec.target_shares; ++x3)
      for (double x1 : setup.checked_prices) {
        const Point p = problem.point(x3, x1, 0.0, setup.spec.u, 0.0);
        const double solver = std::exp(problem.grid().interpolate(result.field.slices[static_cast<std::size_t>(j)], p));
        const double oracle = dp.value(j, {x1, static_cast<double>(x3)});
        worst = std::max(worst, rel(solver, oracle));
        ++compared;
      }
  auto r = verdict("impact oracle", worst, tolerance);
  r.detail += ", " + std::to_string(compared) + " nodes, " + std::to_string(dp.leaves()) + " leaves";
  return r;
}

CheckResult check_limit_oracle(double tolerance) {
  LimitModelParams params;
  params.horizon = 4.0;
  params.target_shares = 2;
  params.prices = {0.94, 0.98};
  const double h = 1.0;
  LimitProblem problem(params, 11);
  SchemeParams scheme;
  scheme.time_step = h;
  const SolveResult result = backward_solve(problem, scheme);
  double worst = 0.0;
  long leaves = 0;
  for (int atom = 0; atom < 2; ++atom) {
    ExhaustiveDP dp(dirac_limit_instance(params, params.atoms[static_cast<std::size_t>(atom)], h));
    for (int j = 0; j < result.field.slice_count(); ++j)
      for (int x3 = 0; x3 <= params.target_shares; ++x3) {
        const Point p = problem.point(x3, atom);
        const double solver = std::exp(problem.grid().interpolate(result.field.slices[static_cast<std::size_t>(j)], p));
        worst = std::max(worst, rel(solver, dp.value(j, {static_cast<double>(x3)})));
      }
    leaves += dp.leaves();
  }
  auto r = verdict("limit oracle", worst, tolerance);
  r.detail += ", " + std::to_string(leaves) + " leaves";
  return r;
}

CheckResult check_gaussian_bayes(int cases, std::uint64_t seed, ValidateFault fault, double tolerance) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss;
  double worst = 0.0;
  const int points = 40001;
  std::vector<double> grid(points), prior(points), like(points);
  for (int c = 0; c < cases; ++c) {
    const GaussianBelief belief{-1.0 + 2.0 * uni(rng), 0.01 + 0.99 * uni(rng)};
    const ObservationNoise noise{belief.std * (0.05 + 4.95 * uni(rng))};
    const double y = belief.mean + std::hypot(belief.std, noise.std) * gauss(rng);
    const double lo = belief.mean - 12.0 * belief.std, hi = belief.mean + 12.0 * belief.std;
    for (int i = 0; i < points; ++i) {
      grid[i] = lo + (hi - lo) * i / (points - 1);
      prior[i] = normal_pdf(grid[i], belief.mean, belief.std);
      like[i] = normal_pdf(y, grid[i], noise.std);
    }
    const BayesMoments oracle = numerical_bayes_oracle(grid, prior, like);
    const GaussianBelief post =
        fault == ValidateFault::conjugate ? tampered_update(belief, y, noise) : gaussian_conjugate_update(belief, y, noise);
    const double scale = std::max(std::abs(oracle.mean), oracle.std);
    worst = std::max({worst, std::abs(post.mean - oracle.mean) / scale, rel(post.std, oracle.std)});
  }
  auto r = verdict("gaussian bayes", worst, tolerance);
  r.detail += ", " + std::to_string(cases) + " cases";
  return r;
}

CheckResult check_finite_bayes(double tolerance) {
  const LimitModelParams params;
  const IntensityFn intensity = intensity_function(params);
  const FiniteBelief half = FiniteBelief::two_point(0.3, 0.8, 0.5);
  Eigen::VectorXd like(2);
  like << 0.7, 0.2;
  double worst = std::abs(finite_bayes_update(half, like).weights()[0] - 7.0 / 9.0);
  // At b = 0.98 the survival over one minute is 1 - u per atom.
  worst = std::max(worst, std::abs(execution_time_update(half, false, 1.0, 1.0, 0.98, intensity).weights()[0] - 7.0 / 9.0));
  const int slots = params.max_slots();
  for (double b : params.prices)
    for (double p : {0.1, 0.5, 0.9}) {
      const FiniteBelief belief = FiniteBelief::two_point(0.3, 0.8, p);
      const auto censored = slot_censored_update(belief, SlotOutcome::censored(), params.slot, slots, b, intensity);
      const auto direct = execution_time_update(belief, false, params.max_wait, params.max_wait, b, intensity);
      worst = std::max(worst, (censored.weights() - direct.weights()).cwiseAbs().maxCoeff());
      // Sequential survival through each slot composes to the censored update.
      FiniteBelief seq = belief;
      for (int k = 0; k < slots; ++k) seq = execution_time_update(seq, false, params.slot, params.slot, b, intensity);
      worst = std::max(worst, (seq.weights() - censored.weights()).cwiseAbs().maxCoeff());
    }
  return verdict("finite bayes", worst, tolerance);
}

CheckResult check_martingale(double finite_tolerance, double gaussian_tolerance) {
  const LimitModelParams params;
  const IntensityFn intensity = intensity_function(params);
  const int slots = params.max_slots();
  double finite_worst = 0.0;
  for (double b : params.prices)
    for (double p : {0.0, 0.2, 0.5, 0.7, 1.0}) {
      const FiniteBelief belief = FiniteBelief::two_point(0.3, 0.8, p);
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
      for (int k = 0; k <= slots; ++k) {
        const SlotOutcome o = k == 0 ? SlotOutcome::censored() : SlotOutcome::executed_in(k);
        const Eigen::VectorXd like = slot_likelihood(belief, o, params.slot, slots, b, intensity);
        const double prob = belief.weights().dot(like);
        if (prob == 0.0) continue;
        mean += prob * finite_bayes_update(belief, like).weights();
      }
      finite_worst = std::max(finite_worst, (mean - belief.weights()).cwiseAbs().maxCoeff());
    }
  const StandardRuled rule = gauss_hermite_rule<double>(20);
  double gaussian_worst = 0.0;
  for (double m : {-0.3, 0.0, 0.05, 1.0})
    for (double s : {1e-4, 5e-4, 0.1})
      for (double e : {1e-4, 1e-2}) {
        const GaussianBelief belief{m, s};
        const ObservationNoise noise{e};
        const double spread = std::hypot(s, e);
        double mean = 0.0;
        for (Eigen::Index i = 0; i < rule.size(); ++i)
          mean += rule.weights[i] * gaussian_conjugate_update(belief, m + spread * rule.nodes[i], noise).mean;
        gaussian_worst = std::max(gaussian_worst, std::abs(mean - m));
      }
  auto r = verdict("martingale", std::max(finite_worst / finite_tolerance, gaussian_worst / gaussian_tolerance), 1.0);
  r.detail = format("finite %.3e (tol %.0e)", finite_worst, finite_tolerance) +
             format(", gaussian %.3e (tol %.0e)", gaussian_worst, gaussian_tolerance);
  return r;
}

RunConfig coarse_config(const RunConfig& config) {
  RunConfig c = config;
  if (c.model == ModelKind::impact) {
    c.impact.target_shares = std::min(c.impact.target_shares, 6);
    c.impact.horizon = std::min(c.impact.horizon, 6.0 * c.scheme.time_step);
    auto& g = c.impact_grid;
    g.x1_count = std::min(g.x1_count, 7);
    g.x4_count = std::min(g.x4_count, 5);
    g.m_count = std::min(g.m_count, 3);
    if (g.s_nodes.size() > 3) g.s_nodes = {g.s_nodes[0], g.s_nodes[1], g.s_nodes.back()};
  } else {
    c.p_count = std::min(c.p_count, 11);
    c.limit.target_shares = std::min(c.limit.target_shares, 4);
  }
  return c;
}

CheckResult check_coarse_residuals(const RunConfig& config, double tolerance) {
  const RunConfig coarse = coarse_config(config);
  const auto problem = make_problem(coarse);
  const SolveResult result = backward_solve(*problem, coarse.scheme);
  const QVIReport report = qvi_residuals(result.field, *problem, coarse.scheme);
  auto r = verdict("coarse residuals", report.max_violation(), tolerance);
  r.detail += ", " + std::to_string(problem->grid().size()) + " nodes";
  return r;
}

}  // namespace adaptex
