#pragma once

#include "adaptex/grid.hpp"
#include "adaptex/simulate.hpp"

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace adaptex {

/// Values are stored as log w where the gain is v = -exp(eta x2) w (cost
/// convention: the solver minimizes w).
template <typename Scalar>
Scalar log_weighted_sum(std::span<const Scalar> log_values, std::span<const Scalar> weights) {
  Scalar top = -std::numeric_limits<Scalar>::infinity();
  for (std::size_t i = 0; i < log_values.size(); ++i)
    if (weights[i] > Scalar(0)) top = std::max(top, log_values[i]);
  if (!std::isfinite(top)) return top;
  Scalar sum(0);
  for (std::size_t i = 0; i < log_values.size(); ++i)
    if (weights[i] > Scalar(0)) sum += weights[i] * std::exp(log_values[i] - top);
  return top + std::log(sum);
}

enum class DriftScheme {
  upwind,          // neighbour node in the drift direction, weight |mu|/h1
  characteristic,  // all samples taken from the drift flow of the node over h0
};

struct SchemeParams {
  double time_step = 1.0;  // h0
  /// Step of the general second-order term. 0 selects the axis stencil
  /// +-sqrt(h1) e_k, which needs a single nonzero row of sigma.
  double h2 = 0.0;
  double tol_act = 1e-10;
  double tol_fix = 1e-12;
  int quadrature_order = 9;
  DriftScheme drift = DriftScheme::upwind;

  void validate() const;
};

/// One point of the predictive kernel: probability, latency, image point and
/// the log of the multiplicative cash factor exp(eta * cash increment).
struct Outcome {
  double prob = 0.0;
  double delay = 0.0;
  Point point;
  double log_factor = 0.0;
};

using SpaceVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxAxes, 1>;
using SpaceMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxAxes, kMaxAxes>;

/// Drift and volatility at a node, indexed by the grid's space axes in order.
struct LocalCoefficients {
  SpaceVector drift;
  SpaceMatrix vol;  // rows: space axes, cols: Brownian dimensions
};

/// Discrete control problem consumed by the backward solver and the policy.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual const Grid& grid() const = 0;
  virtual double horizon() const = 0;
  virtual int action_count() const = 0;
  virtual std::string action_label(int action) const = 0;
  /// log K_T g at a point.
  virtual double terminal_log_value(const Point& p) const = 0;
  virtual void coefficients(const Point& p, LocalCoefficients& out) const = 0;
  /// Image of p under the drift flow over dt. Defaults to one Euler step.
  virtual Point drift_flow(const Point& p, double dt) const;
  virtual bool admissible(const Point& p, int action) const = 0;
  /// Appends the predictive kernel of `action` at `p` to `out` (cleared first).
  virtual void kernel(const Point& p, int action, std::vector<Outcome>& out) const = 0;
  /// Grid coordinates of a simulator state, used for policy lookups.
  virtual Point point_from(const DecisionContext& ctx) const = 0;

  std::vector<int> space_axes() const;
};

struct ValueField {
  Grid grid;
  double time_step = 1.0;
  double horizon = 1.0;
  std::vector<Eigen::ArrayXd> slices;  // log w at t_j = j h0, j = 0..T/h0
  Eigen::ArrayXd post_horizon;         // log K_T g used on (T, 2T]

  int slice_count() const { return static_cast<int>(slices.size()); }
  double time(int j) const { return j * time_step; }
  FieldView view() const;
};

struct SliceResidual {
  double t = 0.0;
  double max_continuation = 0.0;   // max(0, w - continuation)
  double max_intervention = 0.0;   // max(0, w - best intervention)
  double max_complementarity = 0.0;  // max(0, min(continuation, intervention) - w)
  long active = 0;
  long interior = 0;
};

struct QVIReport {
  std::vector<SliceResidual> slices;
  long clamp_count = 0;
  int terminal_iterations = 0;

  double max_violation() const;
  long active_total() const;
};

struct SolveResult {
  ValueField field;
  QVIReport report;
};

struct InterventionChoice {
  double value = std::numeric_limits<double>::infinity();  // exact minimum over actions
  int action = -1;                                         // first action within tol_act of the minimum
};

/// Sample points and weights of the continuation operator at an interior node.
/// The node value is log(sum_k w_k exp(next(p_k)) / sum_k w_k).
struct ContinuationStencil {
  std::vector<Point> points;
  std::vector<double> weights;
  double total_weight() const;
};

ContinuationStencil continuation_stencil(const Grid& grid, Eigen::Index node, const LocalCoefficients& coeffs,
                                         const SchemeParams& scheme);

/// Diffusion part only: sample points/weights whose combination minus
/// center_weight * phi(x) approximates Tr[sigma sigma^T D^2 phi] / 2.
struct DiffusionSamples {
  std::vector<Point> points;
  std::vector<double> weights;
  double center_weight = 0.0;
};

DiffusionSamples diffusion_samples(const Grid& grid, const Point& x, const SpaceMatrix& vol,
                                   const SchemeParams& scheme);

double continuation_value(const Grid& grid, const Eigen::ArrayXd& next_slice, Eigen::Index node,
                          const LocalCoefficients& coeffs, const SchemeParams& scheme, long* clamps = nullptr);

/// Same, with coefficients and drift flow taken from the problem.
double continuation_value(const Problem& problem, const Eigen::ArrayXd& next_slice, Eigen::Index node,
                          const SchemeParams& scheme, long* clamps = nullptr);

/// log of the kernel expectation of exp(log_factor) * [phi](max(t+h0, t+delay), x').
/// At the terminal slice the sample time is t + delay (no time shift).
double intervention_value(const Problem& problem, const FieldView& field, double t, const Point& point, int action,
                          bool terminal, const SchemeParams& scheme, std::vector<Outcome>& buffer,
                          long* clamps = nullptr);

InterventionChoice best_intervention(const Problem& problem, const FieldView& field, double t, const Point& point,
                                     bool terminal, const SchemeParams& scheme, std::vector<Outcome>& buffer,
                                     long* clamps = nullptr);

Eigen::ArrayXd post_horizon_field(const Problem& problem);

/// Fixed point of min{phi - K_T g, phi - K phi} = 0 at T.
Eigen::ArrayXd terminal_slice(const Problem& problem, const Eigen::ArrayXd& post_horizon, const SchemeParams& scheme,
                              int* iterations = nullptr, long* clamps = nullptr);

SolveResult backward_solve(const Problem& problem, const SchemeParams& scheme);

QVIReport qvi_residuals(const ValueField& field, const Problem& problem, const SchemeParams& scheme);

}  // namespace adaptex
