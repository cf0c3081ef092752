#include "adaptex/problems.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace adaptex {

void ImpactGridSpec::validate() const {
  if (!(x1_min < x1_max) || x1_count < 3) throw std::invalid_argument("grid.x1: need min < max and count >= 3");
  if (!(x4_min < x4_max) || x4_count < 3) throw std::invalid_argument("grid.x4: need min < max and count >= 3");
  if (!(m_min < m_max) || m_count < 2) throw std::invalid_argument("grid.m: need min < max and count >= 2");
  if (s_nodes.size() < 2 || s_nodes.front() != 0.0) throw std::invalid_argument("grid.s: nodes must start at 0");
}

ImpactProblem::ImpactProblem(ImpactModelParams params, const ImpactGridSpec& spec, int quadrature_order,
                             bool allow_trading)
    : params_(std::move(params)), allow_trading_(allow_trading) {
  params_.validate();
  spec.validate();
  if (quadrature_order < 3) throw std::invalid_argument("scheme.quadrature_order must be >= 3");
  gauss_ = gauss_hermite_rule<double>(quadrature_order);

  std::vector<Axis> axes;
  axes.push_back(Axis::integers("x3", params_.target_shares));
  // With resilience the price axis holds f = x1 - x4, which trades leave unchanged.
  const char* price = params_.has_resilience() ? "f" : "x1";
  axes.push_back(Axis::uniform(price, spec.x1_min, spec.x1_max, spec.x1_count, AxisKind::space));
  if (params_.has_resilience()) {
    axes.push_back(Axis::uniform("x4", spec.x4_min, spec.x4_max, spec.x4_count, AxisKind::space));
  } else {
    ax_x4_ = -1;
    ax_m_ = 2;
    ax_s_ = 3;
  }
  axes.push_back(Axis::uniform("m", spec.m_min, spec.m_max, spec.m_count, AxisKind::belief));
  axes.push_back(Axis::from_nodes("s", spec.s_nodes, AxisKind::belief));
  grid_ = Grid(std::move(axes));
  grid_.set_absorbing(ax_x3_, params_.target_shares);
  smallest_std_ = spec.s_nodes[1];
}

std::string ImpactProblem::action_label(int action) const {
  return "size=" + std::to_string(params_.sizes.at(static_cast<std::size_t>(action)));
}

ImpactState ImpactProblem::state_at(const Point& p) const {
  ImpactState s;
  s.x3 = static_cast<int>(std::lround(p[ax_x3_]));
  s.x4 = ax_x4_ >= 0 ? p[ax_x4_] : 0.0;
  s.x1 = p[ax_x1_] + s.x4;
  return s;
}

Point ImpactProblem::point(int x3, double x1, double x4, double mean, double std) const {
  Point p(grid_.dims());
  p[ax_x3_] = x3;
  p[ax_x1_] = ax_x4_ >= 0 ? x1 - x4 : x1;
  if (ax_x4_ >= 0) p[ax_x4_] = x4;
  p[ax_m_] = mean;
  p[ax_s_] = std;
  return p;
}

Point ImpactProblem::point_from(const DecisionContext& ctx) const {
  return point(ctx.x3, ctx.x1, ctx.x4, ctx.belief_mean, ctx.belief_std);
}

double ImpactProblem::terminal_log_value(const Point& p) const {
  return impact_terminal_log_value(state_at(p), GaussianBelief{p[ax_m_], p[ax_s_]}, params_);
}

void ImpactProblem::coefficients(const Point& p, LocalCoefficients& out) const {
  const int n = ax_x4_ >= 0 ? 2 : 1;
  out.drift.setZero(n);
  out.vol.setZero(n, 1);
  out.vol(0, 0) = params_.sigma_per_second();
  if (ax_x4_ >= 0) out.drift[1] = -params_.resilience_rate * p[ax_x4_];
}

Point ImpactProblem::drift_flow(const Point& p, double dt) const {
  Point out = p;
  if (ax_x4_ >= 0) out[ax_x4_] *= std::exp(-params_.resilience_rate * dt);
  return out;
}

bool ImpactProblem::admissible(const Point& p, int action) const {
  if (action < 0 || action >= action_count()) return false;
  const int x3 = static_cast<int>(std::lround(p[ax_x3_]));
  return x3 + params_.sizes[static_cast<std::size_t>(action)] <= params_.target_shares;
}

void ImpactProblem::kernel(const Point& p, int action, std::vector<Outcome>& out) const {
  out.clear();
  const int size = params_.sizes.at(static_cast<std::size_t>(action));
  const ImpactState state = state_at(p);
  const GaussianBelief belief{p[ax_m_], p[ax_s_]};

  auto emit = [&](double y, double prob) {
    const auto tr = impact_trade_transition(state, size, y, 0.0, params_);
    GaussianBelief post = gaussian_conjugate_update(belief, y, params_.noise);
    if (belief.std > 0.0) post.std = std::max(post.std, smallest_std_);
    Outcome o;
    o.prob = prob;
    o.delay = 0.0;
    o.point = point(tr.next.x3, tr.next.x1, tr.next.x4, post.mean, post.std);
    o.log_factor = params_.risk_aversion * tr.cash_increment;
    out.push_back(std::move(o));
  };

  if (params_.discrete_noise) {
    const auto& eps = *params_.discrete_noise;
    const Eigen::Index nu = belief.is_dirac() ? 1 : gauss_.size();
    for (Eigen::Index i = 0; i < nu; ++i) {
      const double u = belief.is_dirac() ? belief.mean : belief.mean + belief.std * gauss_.nodes[i];
      const double wu = belief.is_dirac() ? 1.0 : gauss_.weights[i];
      for (Eigen::Index k = 0; k < eps.size(); ++k) emit(u + params_.noise.std * eps.nodes[k], wu * eps.weights[k]);
    }
    return;
  }
  const double spread = std::sqrt(belief.std * belief.std + params_.noise.std * params_.noise.std);
  for (Eigen::Index i = 0; i < gauss_.size(); ++i) emit(belief.mean + spread * gauss_.nodes[i], gauss_.weights[i]);
}

LimitProblem::LimitProblem(LimitModelParams params, int p_count) : params_(std::move(params)) {
  params_.validate();
  if (p_count < 2) throw std::invalid_argument("grid.p_count must be >= 2");
  grid_ = Grid({Axis::integers("x3", params_.target_shares), Axis::uniform("p", 0.0, 1.0, p_count, AxisKind::belief)});
  grid_.set_absorbing(0, params_.target_shares);
  for (double b : params_.prices)
    rates_.push_back({execution_intensity(params_.atoms[0], b, params_), execution_intensity(params_.atoms[1], b, params_)});
}

std::string LimitProblem::action_label(int action) const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "b=%.4g", params_.prices.at(static_cast<std::size_t>(action)));
  return buf;
}

Point LimitProblem::point(int x3, double p) const {
  Point pt(2);
  pt << x3, p;
  return pt;
}

Point LimitProblem::point_from(const DecisionContext& ctx) const { return point(ctx.x3, ctx.p); }

double LimitProblem::terminal_log_value(const Point& p) const {
  return limit_terminal_log_value(LimitState{static_cast<int>(std::lround(p[0]))}, params_);
}

void LimitProblem::coefficients(const Point&, LocalCoefficients& out) const {
  out.drift.resize(0);
  out.vol.resize(0, 0);
}

bool LimitProblem::admissible(const Point& p, int action) const {
  if (action < 0 || action >= action_count()) return false;
  return std::lround(p[0]) < params_.target_shares;
}

void LimitProblem::kernel(const Point& p, int action, std::vector<Outcome>& out) const {
  out.clear();
  const int x3 = static_cast<int>(std::lround(p[0]));
  const double w1 = std::clamp(p[1], 0.0, 1.0);
  const double w[2] = {1.0 - w1, w1};
  const auto& rate = rates_.at(static_cast<std::size_t>(action));
  const double b = params_.prices[static_cast<std::size_t>(action)];
  const int slots = params_.max_slots();
  const double d = params_.slot;

  auto emit = [&](const double like[2], double delay, int next_x3, double log_factor) {
    const double a0 = w[0] * like[0], a1 = w[1] * like[1];
    const double prob = a0 + a1;
    if (!(prob > 0.0)) return;
    Outcome o;
    o.prob = prob;
    o.delay = delay;
    o.point = point(next_x3, a1 / prob);
    o.log_factor = log_factor;
    out.push_back(std::move(o));
  };

  for (int k = 1; k <= slots; ++k) {
    double like[2];
    for (int j = 0; j < 2; ++j) like[j] = std::exp(-rate[j] * (k - 1) * d) - std::exp(-rate[j] * k * d);
    emit(like, k * d, x3 + 1, params_.risk_aversion * b);
  }
  double survive[2];
  for (int j = 0; j < 2; ++j) survive[j] = std::exp(-rate[j] * slots * d);
  emit(survive, slots * d, x3, 0.0);
}

}  // namespace adaptex
