#include "adaptex/oracle.hpp"

#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

using namespace adaptex;
using doctest::Approx;

namespace {

double normal_pdf(double x, double m, double s) {
  const double z = (x - m) / s;
  return std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * std::numbers::pi));
}

struct Sampled {
  std::vector<double> grid, prior, like;
};

Sampled sample(double m, double s, int points, double half_width) {
  Sampled out;
  for (int i = 0; i < points; ++i) {
    const double x = m - half_width + 2.0 * half_width * i / (points - 1);
    out.grid.push_back(x);
    out.prior.push_back(normal_pdf(x, m, s));
    out.like.push_back(1.0);
  }
  return out;
}

}  // namespace

TEST_CASE("exhaustive dp: one period, one action against waiting") {
  TinyInstance inst;
  inst.steps = 0;
  inst.action_count = 1;
  inst.admissible = [](const TinyState& s, int) { return s[0] < 1.0; };
  inst.branches = [](const TinyState&, int) {
    return std::vector<TinyBranch>{{0.5, {1.0}, 0.1, 0}, {0.5, {1.0}, 0.3, 0}};
  };
  inst.terminal = [](const TinyState& s) { return s[0] >= 1.0 ? 1.0 : std::exp(0.2); };
  ExhaustiveDP dp(inst);
  const double act = 0.5 * std::exp(0.1) + 0.5 * std::exp(0.3);
  CHECK(dp.value(0, {0.0}) == Approx(std::min(act, std::exp(0.2))).epsilon(1e-15));
  CHECK(dp.best_action(0, {0.0}) == kWait);

  inst.terminal = [](const TinyState& s) { return s[0] >= 1.0 ? 1.0 : std::exp(0.5); };
  ExhaustiveDP dp2(inst);
  CHECK(dp2.value(0, {0.0}) == Approx(act).epsilon(1e-15));
  CHECK(dp2.best_action(0, {0.0}) == 0);
}

TEST_CASE("exhaustive dp: nothing to buy gives the terminal value") {
  DegenerateImpactSpec spec;
  spec.target_shares = 0;
  ExhaustiveDP dp(degenerate_impact_instance(spec));
  for (int j = 0; j <= spec.steps; ++j) CHECK(dp.value(j, {1.3, 0.0}) == 1.0);
}

TEST_CASE("exhaustive dp: leaf budget") {
  DegenerateImpactSpec spec;
  auto inst = degenerate_impact_instance(spec);
  inst.leaf_budget = 100;
  ExhaustiveDP dp(inst);
  CHECK_THROWS_AS(dp.value(0, {spec.x0, 0.0}), BudgetExceeded);
  ExhaustiveDP full(degenerate_impact_instance(spec));
  full.value(0, {spec.x0, 0.0});
  CHECK(full.leaves() <= 10'000'000);
}

TEST_CASE("exhaustive dp: trading now versus over time on the degenerate instance") {
  DegenerateImpactSpec spec;
  ExhaustiveDP dp(degenerate_impact_instance(spec));
  const double v = dp.value(0, {spec.x0, 0.0});
  CHECK(v >= 1.0);
  // Buying nothing costs the terminal expectation, an upper bound on the optimum.
  const double r = spec.target_shares;
  const double never = 0.5 * std::exp(spec.x0 * r + (spec.u - spec.noise) * r * r / 2.0) +
                       0.5 * std::exp(spec.x0 * r + (spec.u + spec.noise) * r * r / 2.0);
  CHECK(v <= never);
}

TEST_CASE("bayes oracle: flat likelihood returns the prior moments") {
  const Sampled s = sample(0.3, 0.02, 20001, 0.3);
  const auto m = numerical_bayes_oracle(s.grid, s.prior, s.like);
  CHECK(std::abs(m.mean - 0.3) < 1e-10);
  CHECK(std::abs(m.std - 0.02) < 1e-10);
}

TEST_CASE("bayes oracle: Dirac-like prior returns the prior mean") {
  std::vector<double> grid, prior, like;
  for (int i = 0; i < 10001; ++i) {
    grid.push_back(-1.0 + 2.0 * i / 10000.0);
    prior.push_back(i == 6000 ? 1.0 : 0.0);
    like.push_back(1.0 + grid.back() * grid.back());
  }
  const auto m = numerical_bayes_oracle(grid, prior, like);
  CHECK(m.mean == Approx(grid[6000]).epsilon(1e-12));
}

TEST_CASE("bayes oracle: matches the conjugate update") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int c = 0; c < 20; ++c) {
    const double m = u(rng), s = 0.01 + u(rng) * 0.1, e = s * (0.1 + 3.0 * u(rng)), y = m + s * (u(rng) - 0.5);
    Sampled smp = sample(m, s, 40001, 12.0 * s);
    for (std::size_t i = 0; i < smp.grid.size(); ++i) smp.like[i] = normal_pdf(y, smp.grid[i], e);
    const auto o = numerical_bayes_oracle(smp.grid, smp.prior, smp.like);
    const GaussianBelief post = gaussian_conjugate_update({m, s}, y, {e});
    CHECK(o.mean == Approx(post.mean).epsilon(1e-4));
    CHECK(o.std == Approx(post.std).epsilon(1e-4));
  }
}

TEST_CASE("bayes oracle: zero normalizer") {
  const std::vector<double> grid{0.0, 1.0, 2.0}, prior{1.0, 1.0, 1.0}, like{0.0, 0.0, 0.0};
  CHECK_THROWS_AS(numerical_bayes_oracle(grid, prior, like), DegenerateEvidence);
}

TEST_CASE("mc value: deterministic instance has zero standard error") {
  ImpactModelParams p;
  p.sigma_annual = 0.0;
  p.target_shares = 5;
  p.horizon = 5.0;
  p.discrete_noise = StandardRuled{};
  p.discrete_noise->nodes = Eigen::VectorXd::Zero(1);
  p.discrete_noise->weights = Eigen::VectorXd::Ones(1);
  const UniformRateImpact uniform(p, 1.0);
  const auto est = mc_value_impact(uniform, p, {0.05, 0.0}, std::nullopt, 1000, 3, SimConfig{});
  CHECK(est.rel_stderr == 0.0);
  CHECK(est.paths == 1000);
}

TEST_CASE("mc value: never acting in the limit model pays the clamped penalty") {
  const LimitModelParams lp;
  SimConfig sc;
  sc.decision_step = 0.25;
  const NeverAct never;
  const auto est = mc_value_limit(never, lp, FiniteBelief::two_point(0.3, 0.8, 0.5), std::nullopt, 1000, 1, sc);
  CHECK(est.log_mean == Approx(lp.log_w_max).epsilon(1e-15));
  CHECK(est.rel_stderr == 0.0);
}

TEST_CASE("mc value: bit-reproducible and path-count guarded") {
  const LimitModelParams lp;
  SimConfig sc;
  sc.decision_step = 0.25;
  const UniformRateLimit uniform(lp);
  const auto prior = FiniteBelief::two_point(0.3, 0.8, 0.5);
  const auto a = mc_value_limit(uniform, lp, prior, std::nullopt, 1000, 77, sc);
  const auto b = mc_value_limit(uniform, lp, prior, std::nullopt, 1000, 77, sc);
  CHECK(a.log_mean == b.log_mean);
  CHECK(a.rel_stderr == b.rel_stderr);
  CHECK_THROWS_AS(mc_value_limit(uniform, lp, prior, std::nullopt, 999, 77, sc), std::invalid_argument);
}
