#include "adaptex/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace adaptex {

int PolicyGrid::slice_of(double t) const {
  const double r = t / time_step;
  const long j = std::lround(r);
  if (std::abs(r - static_cast<double>(j)) > 1e-9 * std::max(1.0, r) || j < 0 || j >= slice_count())
    throw std::invalid_argument("policy grid mismatch: no policy slice at t = " + std::to_string(t));
  return static_cast<int>(j);
}

PolicyGrid extract_policy(const ValueField& field, const Problem& problem, const SchemeParams& scheme) {
  const Grid& grid = field.grid;
  PolicyGrid out;
  out.grid = grid;
  out.time_step = field.time_step;
  out.horizon = field.horizon;
  for (int a = 0; a < problem.action_count(); ++a) out.labels.push_back(problem.action_label(a));
  const int n = field.slice_count() - 1;
  const FieldView view = field.view();
  out.actions.assign(static_cast<std::size_t>(n + 1), std::vector<std::int16_t>(static_cast<std::size_t>(grid.size()), kWait));
  for (int j = 0; j <= n; ++j) {
    const double t = field.time(j);
    const Eigen::ArrayXd& w = field.slices[static_cast<std::size_t>(j)];
    auto& row = out.actions[static_cast<std::size_t>(j)];
#pragma omp parallel
    {
      std::vector<Outcome> buffer;
#pragma omp for schedule(dynamic, 256)
      for (Eigen::Index node = 0; node < grid.size(); ++node) {
        if (grid.classify(node) != NodeClass::interior) continue;
        const auto best = best_intervention(problem, view, t, grid.coords(node), j == n, scheme, buffer);
        if (best.action >= 0 && best.value <= w[node] + scheme.tol_act)
          row[static_cast<std::size_t>(node)] = static_cast<std::int16_t>(best.action);
      }
    }
  }
  return out;
}

int PolicyRule::decide(const DecisionContext& ctx) const {
  const int j = policy_.slice_of(ctx.t);
  const Point p = problem_.point_from(ctx);
  if (p.size() != policy_.grid.dims()) throw std::invalid_argument("policy grid mismatch: dimension");
  return policy_.at(j, policy_.grid.nearest_node(p, true));
}

double PolicyRule::lookup_distance(const DecisionContext& ctx) const {
  const Point p = problem_.point_from(ctx);
  const Point q = policy_.grid.coords(policy_.grid.nearest_node(p, true));
  return (p - q).norm();
}

}  // namespace adaptex
