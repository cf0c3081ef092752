#pragma once

#include "adaptex/models.hpp"
#include "adaptex/quadrature.hpp"
#include "adaptex/solver.hpp"

#include <vector>

namespace adaptex {

struct ImpactGridSpec {
  // Price axis; with resilience it carries x1 - x4.
  double x1_min = 99.5;
  double x1_max = 101.5;
  int x1_count = 21;
  double x4_min = -0.05;
  double x4_max = 0.65;
  int x4_count = 15;
  double m_min = 0.0;
  double m_max = 0.1;
  int m_count = 11;
  std::vector<double> s_nodes{0.0, 1e-5, 3e-5, 1e-4, 3e-4, 1e-3};

  void validate() const;
};

/// Aggressive-order model on the grid (x3, x1 - x4, x4, m, s), or
/// (x3, x1, m, s) when there is no resilience.
class ImpactProblem final : public Problem {
 public:
  ImpactProblem(ImpactModelParams params, const ImpactGridSpec& spec, int quadrature_order = 9,
                bool allow_trading = true);

  const Grid& grid() const override { return grid_; }
  double horizon() const override { return params_.horizon; }
  int action_count() const override { return allow_trading_ ? static_cast<int>(params_.sizes.size()) : 0; }
  std::string action_label(int action) const override;
  double terminal_log_value(const Point& p) const override;
  void coefficients(const Point& p, LocalCoefficients& out) const override;
  /// Exact exponential decay of x4.
  Point drift_flow(const Point& p, double dt) const override;
  bool admissible(const Point& p, int action) const override;
  void kernel(const Point& p, int action, std::vector<Outcome>& out) const override;
  Point point_from(const DecisionContext& ctx) const override;

  const ImpactModelParams& params() const { return params_; }
  /// Grid point of a model state (x1 is the impacted price).
  Point point(int x3, double x1, double x4, double mean, double std) const;
  bool has_x4() const { return ax_x4_ >= 0; }

  int axis_x3() const { return ax_x3_; }
  int axis_x1() const { return ax_x1_; }
  int axis_x4() const { return ax_x4_; }
  int axis_mean() const { return ax_m_; }
  int axis_std() const { return ax_s_; }

 private:
  ImpactState state_at(const Point& p) const;

  ImpactModelParams params_;
  Grid grid_;
  StandardRuled gauss_;
  bool allow_trading_;
  double smallest_std_ = 0.0;
  int ax_x3_ = 0, ax_x1_ = 1, ax_x4_ = 2, ax_m_ = 3, ax_s_ = 4;
};

/// Limit-order model on the grid (x3, p), p = weight of the second atom.
class LimitProblem final : public Problem {
 public:
  LimitProblem(LimitModelParams params, int p_count);

  const Grid& grid() const override { return grid_; }
  double horizon() const override { return params_.horizon; }
  int action_count() const override { return static_cast<int>(params_.prices.size()); }
  std::string action_label(int action) const override;
  double terminal_log_value(const Point& p) const override;
  void coefficients(const Point&, LocalCoefficients& out) const override;
  bool admissible(const Point& p, int action) const override;
  void kernel(const Point& p, int action, std::vector<Outcome>& out) const override;
  Point point_from(const DecisionContext& ctx) const override;

  const LimitModelParams& params() const { return params_; }
  Point point(int x3, double p) const;

 private:
  LimitModelParams params_;
  Grid grid_;
  std::vector<std::array<double, 2>> rates_;  // per price, per atom
};

}  // namespace adaptex
