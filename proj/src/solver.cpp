#include "adaptex/solver.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace adaptex {

void SchemeParams::validate() const {
  if (!(time_step > 0.0)) throw std::invalid_argument("scheme.time_step must be > 0");
  if (h2 < 0.0) throw std::invalid_argument("scheme.h2 must be >= 0");
  if (quadrature_order < 3) throw std::invalid_argument("scheme.quadrature_order must be >= 3");
  if (tol_act < 0.0 || tol_fix < 0.0) throw std::invalid_argument("scheme tolerances must be >= 0");
}

std::vector<int> Problem::space_axes() const {
  std::vector<int> out;
  for (int k = 0; k < grid().dims(); ++k)
    if (grid().axis(k).kind() == AxisKind::space) out.push_back(k);
  return out;
}

Point Problem::drift_flow(const Point& p, double dt) const {
  LocalCoefficients c;
  coefficients(p, c);
  Point out = p;
  const std::vector<int> axes = space_axes();
  for (Eigen::Index i = 0; i < c.drift.size(); ++i) out[axes[static_cast<std::size_t>(i)]] += c.drift[i] * dt;
  return out;
}

FieldView ValueField::view() const {
  FieldView v;
  v.grid = &grid;
  v.slices = std::span<const Eigen::ArrayXd>(slices);
  v.post_horizon = &post_horizon;
  v.time_step = time_step;
  v.horizon = horizon;
  return v;
}

double QVIReport::max_violation() const {
  double m = 0.0;
  for (const auto& s : slices) m = std::max({m, s.max_continuation, s.max_intervention, s.max_complementarity});
  return m;
}

long QVIReport::active_total() const {
  long n = 0;
  for (const auto& s : slices) n += s.active;
  return n;
}

double ContinuationStencil::total_weight() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

namespace {

std::vector<int> space_axes_of(const Grid& grid) {
  std::vector<int> out;
  for (int k = 0; k < grid.dims(); ++k)
    if (grid.axis(k).kind() == AxisKind::space) out.push_back(k);
  return out;
}

double local_gap(const Axis& axis, Eigen::Index i) {
  return axis.gap(std::min<Eigen::Index>(std::max<Eigen::Index>(i, 0), axis.size() - 2));
}

void fill_diffusion(const Grid& grid, const Point& x, const SpaceMatrix& vol, const SchemeParams& scheme,
                    DiffusionSamples& out) {
  out.points.clear();
  out.weights.clear();
  out.center_weight = 0.0;
  if (vol.size() == 0) return;
  const std::vector<int> axes = space_axes_of(grid);
  if (static_cast<int>(vol.rows()) != static_cast<int>(axes.size()))
    throw std::invalid_argument("volatility rows must match the space axes");
  int nonzero_rows = 0;
  int row = -1;
  for (Eigen::Index r = 0; r < vol.rows(); ++r) {
    if (vol.row(r).squaredNorm() > 0.0) {
      ++nonzero_rows;
      row = static_cast<int>(r);
    }
  }
  if (nonzero_rows == 0) return;
  if (scheme.h2 == 0.0 && nonzero_rows == 1) {
    // Single noisy coordinate: +-sqrt(h) e_k with coefficient |sigma_k.|^2.
    const int k = axes[static_cast<std::size_t>(row)];
    const Axis& axis = grid.axis(k);
    const double h = local_gap(axis, axis.nearest(x[k]));
    const double s2 = vol.row(row).squaredNorm();
    const double delta = std::sqrt(h);
    Point up = x, down = x;
    up[k] += delta;
    down[k] -= delta;
    out.points = {up, down};
    out.weights = {s2 / (2.0 * h), s2 / (2.0 * h)};
    out.center_weight = s2 / h;
    return;
  }
  if (!(scheme.h2 > 0.0)) throw std::invalid_argument("scheme.h2 must be > 0 when several rows of sigma are nonzero");
  const double root = std::sqrt(scheme.h2);
  const double w = 1.0 / (2.0 * scheme.h2);
  for (Eigen::Index c = 0; c < vol.cols(); ++c) {
    Point up = x, down = x;
    for (std::size_t r = 0; r < axes.size(); ++r) {
      up[axes[r]] += root * vol(static_cast<Eigen::Index>(r), c);
      down[axes[r]] -= root * vol(static_cast<Eigen::Index>(r), c);
    }
    out.points.push_back(up);
    out.points.push_back(down);
    out.weights.push_back(w);
    out.weights.push_back(w);
  }
  out.center_weight = static_cast<double>(vol.cols()) / scheme.h2;
}

// `base` is the flow image of the node; only used by the characteristic scheme.
void fill_continuation(const Grid& grid, Eigen::Index node, const LocalCoefficients& coeffs,
                       const SchemeParams& scheme, const Point* base, ContinuationStencil& out,
                       DiffusionSamples& diff) {
  out.points.clear();
  out.weights.clear();
  const Point x = grid.coords(node);
  const std::vector<int> axes = space_axes_of(grid);
  if (coeffs.drift.size() != 0 && coeffs.drift.size() != static_cast<Eigen::Index>(axes.size()))
    throw std::invalid_argument("drift size must match the space axes");
  if (scheme.drift == DriftScheme::characteristic) {
    Point y = x;
    if (base) {
      y = *base;
    } else {
      for (Eigen::Index i = 0; i < coeffs.drift.size(); ++i)
        y[axes[static_cast<std::size_t>(i)]] += coeffs.drift[i] * scheme.time_step;
    }
    out.points.push_back(y);
    out.weights.push_back(1.0 / scheme.time_step);
    fill_diffusion(grid, y, coeffs.vol, scheme, diff);
    for (std::size_t i = 0; i < diff.points.size(); ++i) {
      out.points.push_back(diff.points[i]);
      out.weights.push_back(diff.weights[i]);
    }
    return;
  }
  out.points.push_back(x);
  out.weights.push_back(1.0 / scheme.time_step);
  const auto idx = grid.decode(node);
  for (Eigen::Index i = 0; i < coeffs.drift.size(); ++i) {
    const double mu = coeffs.drift[i];
    if (mu == 0.0) continue;
    const int k = axes[static_cast<std::size_t>(i)];
    const Axis& axis = grid.axis(k);
    const Eigen::Index j = idx[k];
    Point nb = x;
    double h;
    if (mu > 0.0) {
      if (j + 1 >= axis.size()) throw std::invalid_argument("upwind neighbor outside grid");
      h = axis.gap(j);
      nb[k] = axis.node(j + 1);
    } else {
      if (j == 0) throw std::invalid_argument("upwind neighbor outside grid");
      h = axis.gap(j - 1);
      nb[k] = axis.node(j - 1);
    }
    out.points.push_back(nb);
    out.weights.push_back(std::abs(mu) / h);
  }
  fill_diffusion(grid, x, coeffs.vol, scheme, diff);
  for (std::size_t i = 0; i < diff.points.size(); ++i) {
    out.points.push_back(diff.points[i]);
    out.weights.push_back(diff.weights[i]);
  }
}

struct Workspace {
  ContinuationStencil stencil;
  DiffusionSamples diffusion;
  std::vector<Outcome> outcomes;
  std::vector<double> logs;
  std::vector<double> weights;
  LocalCoefficients coeffs;
};

double continuation_with(const Grid& grid, const Eigen::ArrayXd& next, Eigen::Index node,
                         const LocalCoefficients& coeffs, const SchemeParams& scheme, Workspace& ws, long* clamps,
                         const Point* base = nullptr) {
  fill_continuation(grid, node, coeffs, scheme, base, ws.stencil, ws.diffusion);
  ws.logs.resize(ws.stencil.points.size());
  double total = 0.0;
  for (std::size_t i = 0; i < ws.stencil.points.size(); ++i) {
    ws.logs[i] = grid.interpolate(next, ws.stencil.points[i], clamps);
    total += ws.stencil.weights[i];
  }
  return log_weighted_sum<double>(ws.logs, ws.stencil.weights) - std::log(total);
}

double problem_continuation(const Problem& problem, const Eigen::ArrayXd& next, Eigen::Index node, const Point& x,
                            const SchemeParams& scheme, Workspace& ws, long* clamps) {
  problem.coefficients(x, ws.coeffs);
  if (scheme.drift == DriftScheme::characteristic) {
    const Point base = problem.drift_flow(x, scheme.time_step);
    return continuation_with(problem.grid(), next, node, ws.coeffs, scheme, ws, clamps, &base);
  }
  return continuation_with(problem.grid(), next, node, ws.coeffs, scheme, ws, clamps);
}

double intervention_with(const Problem& problem, const FieldView& field, double t, const Point& point, int action,
                         bool terminal, const SchemeParams& scheme, std::vector<Outcome>& buffer,
                         std::vector<double>& logs, std::vector<double>& weights, long* clamps) {
  problem.kernel(point, action, buffer);
  logs.clear();
  weights.clear();
  for (const Outcome& o : buffer) {
    if (!(o.prob > 0.0)) continue;
    const double ts = terminal ? t + o.delay : t + std::max(scheme.time_step, o.delay);
    logs.push_back(o.log_factor + sample_field(field, ts, o.point, clamps));
    weights.push_back(o.prob);
  }
  if (logs.empty()) return std::numeric_limits<double>::infinity();
  return log_weighted_sum<double>(logs, weights);
}

InterventionChoice best_with(const Problem& problem, const FieldView& field, double t, const Point& point,
                             bool terminal, const SchemeParams& scheme, Workspace& ws, long* clamps) {
  InterventionChoice best;
  std::array<double, 64> values;
  const int n = problem.action_count();
  std::vector<double> heap;
  double* vals = values.data();
  if (n > 64) {
    heap.resize(static_cast<std::size_t>(n));
    vals = heap.data();
  }
  for (int a = 0; a < n; ++a) {
    vals[a] = std::numeric_limits<double>::infinity();
    if (!problem.admissible(point, a)) continue;
    vals[a] = intervention_with(problem, field, t, point, a, terminal, scheme, ws.outcomes, ws.logs, ws.weights,
                                clamps);
    best.value = std::min(best.value, vals[a]);
  }
  if (std::isfinite(best.value)) {
    for (int a = 0; a < n; ++a) {
      if (vals[a] <= best.value + scheme.tol_act) {
        best.action = a;
        break;
      }
    }
  }
  return best;
}

int slice_count_for(const Problem& problem, const SchemeParams& scheme) {
  const double ratio = problem.horizon() / scheme.time_step;
  const long n = std::lround(ratio);
  if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, ratio))
    throw std::invalid_argument("horizon / time_step must be a positive integer");
  return static_cast<int>(n);
}

double diff_of(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(a - b);
}

}  // namespace

ContinuationStencil continuation_stencil(const Grid& grid, Eigen::Index node, const LocalCoefficients& coeffs,
                                         const SchemeParams& scheme) {
  ContinuationStencil out;
  DiffusionSamples diff;
  fill_continuation(grid, node, coeffs, scheme, nullptr, out, diff);
  return out;
}

DiffusionSamples diffusion_samples(const Grid& grid, const Point& x, const SpaceMatrix& vol,
                                   const SchemeParams& scheme) {
  DiffusionSamples out;
  fill_diffusion(grid, x, vol, scheme, out);
  return out;
}

double continuation_value(const Grid& grid, const Eigen::ArrayXd& next_slice, Eigen::Index node,
                          const LocalCoefficients& coeffs, const SchemeParams& scheme, long* clamps) {
  Workspace ws;
  return continuation_with(grid, next_slice, node, coeffs, scheme, ws, clamps);
}

double continuation_value(const Problem& problem, const Eigen::ArrayXd& next_slice, Eigen::Index node,
                          const SchemeParams& scheme, long* clamps) {
  Workspace ws;
  return problem_continuation(problem, next_slice, node, problem.grid().coords(node), scheme, ws, clamps);
}

double intervention_value(const Problem& problem, const FieldView& field, double t, const Point& point, int action,
                          bool terminal, const SchemeParams& scheme, std::vector<Outcome>& buffer, long* clamps) {
  if (!problem.admissible(point, action)) throw InadmissibleAction("inadmissible action " + problem.action_label(action));
  std::vector<double> logs, weights;
  return intervention_with(problem, field, t, point, action, terminal, scheme, buffer, logs, weights, clamps);
}

InterventionChoice best_intervention(const Problem& problem, const FieldView& field, double t, const Point& point,
                                     bool terminal, const SchemeParams& scheme, std::vector<Outcome>& buffer,
                                     long* clamps) {
  Workspace ws;
  ws.outcomes = std::move(buffer);
  auto best = best_with(problem, field, t, point, terminal, scheme, ws, clamps);
  buffer = std::move(ws.outcomes);
  return best;
}

Eigen::ArrayXd post_horizon_field(const Problem& problem) {
  const Grid& grid = problem.grid();
  Eigen::ArrayXd post(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) post[i] = problem.terminal_log_value(grid.coords(i));
  return post;
}

Eigen::ArrayXd terminal_slice(const Problem& problem, const Eigen::ArrayXd& post_horizon, const SchemeParams& scheme,
                              int* iterations, long* clamps) {
  const Grid& grid = problem.grid();
  const int n = slice_count_for(problem, scheme);
  std::vector<Eigen::ArrayXd> slices(static_cast<std::size_t>(n + 1));
  slices[static_cast<std::size_t>(n)] = post_horizon;
  Eigen::ArrayXd& current = slices[static_cast<std::size_t>(n)];
  FieldView view{&grid, std::span<const Eigen::ArrayXd>(slices), &post_horizon, scheme.time_step,
                 problem.horizon()};
  const double T = problem.horizon();

  // Layers along axis 0, highest first; zero-delay actions only reach higher layers.
  const Eigen::Index layers = grid.axis(0).size();
  const Eigen::Index layer_size = grid.stride(0);
  const int max_sweeps = static_cast<int>(layers) + 1;
  Eigen::ArrayXd layer_out(layer_size);
  long clamp_total = 0;
  int sweep = 0;
  for (;;) {
    ++sweep;
    double change = 0.0;
    for (Eigen::Index layer = layers - 1; layer >= 0; --layer) {
      const Eigen::Index begin = layer * layer_size;
#pragma omp parallel reduction(+ : clamp_total)
      {
        Workspace ws;
#pragma omp for schedule(dynamic, 64)
        for (Eigen::Index off = 0; off < layer_size; ++off) {
          const Eigen::Index node = begin + off;
          if (grid.classify(node) != NodeClass::interior) {
            layer_out[off] = post_horizon[node];
            continue;
          }
          const Point x = grid.coords(node);
          const auto best = best_with(problem, view, T, x, true, scheme, ws, &clamp_total);
          layer_out[off] = std::min(post_horizon[node], best.value);
        }
      }
      for (Eigen::Index off = 0; off < layer_size; ++off) {
        change = std::max(change, diff_of(current[begin + off], layer_out[off]));
        current[begin + off] = layer_out[off];
      }
    }
    if (change <= scheme.tol_fix) break;
    if (sweep >= max_sweeps) throw std::runtime_error("terminal fixed point did not converge");
  }
  if (iterations) *iterations = sweep;
  if (clamps) *clamps += clamp_total;
  return std::move(slices[static_cast<std::size_t>(n)]);
}

SolveResult backward_solve(const Problem& problem, const SchemeParams& scheme) {
  scheme.validate();
  const Grid& grid = problem.grid();
  const int n = slice_count_for(problem, scheme);

  SolveResult result;
  ValueField& field = result.field;
  field.grid = grid;
  field.time_step = scheme.time_step;
  field.horizon = problem.horizon();
  field.post_horizon = post_horizon_field(problem);
  field.slices.resize(static_cast<std::size_t>(n + 1));

  QVIReport& report = result.report;
  report.slices.resize(static_cast<std::size_t>(n + 1));
  field.slices[static_cast<std::size_t>(n)] =
      terminal_slice(problem, field.post_horizon, scheme, &report.terminal_iterations, &report.clamp_count);

  // Terminal-slice bookkeeping (active nodes).
  {
    const FieldView view = field.view();
    SliceResidual& rep = report.slices[static_cast<std::size_t>(n)];
    rep.t = field.horizon;
    Workspace ws;
    long dummy = 0;
    for (Eigen::Index node = 0; node < grid.size(); ++node) {
      if (grid.classify(node) != NodeClass::interior) continue;
      ++rep.interior;
      const auto best = best_with(problem, view, field.horizon, grid.coords(node), true, scheme, ws, &dummy);
      if (best.value <= field.post_horizon[node]) ++rep.active;
    }
  }

  for (int j = n - 1; j >= 0; --j) {
    const double t = field.time(j);
    const Eigen::ArrayXd& next = field.slices[static_cast<std::size_t>(j + 1)];
    Eigen::ArrayXd current(grid.size());
    const FieldView view = field.view();
    long clamps = 0, active = 0, interior = 0;
#pragma omp parallel reduction(+ : clamps, active, interior)
    {
      Workspace ws;
#pragma omp for schedule(dynamic, 256)
      for (Eigen::Index node = 0; node < grid.size(); ++node) {
        if (grid.classify(node) != NodeClass::interior) {
          current[node] = field.post_horizon[node];
          continue;
        }
        ++interior;
        const Point x = grid.coords(node);
        const double cont = problem_continuation(problem, next, node, x, scheme, ws, &clamps);
        const auto best = best_with(problem, view, t, x, false, scheme, ws, &clamps);
        if (best.value <= cont) {
          ++active;
          current[node] = best.value;
        } else {
          current[node] = cont;
        }
      }
    }
    field.slices[static_cast<std::size_t>(j)] = std::move(current);
    SliceResidual& rep = report.slices[static_cast<std::size_t>(j)];
    rep.t = t;
    rep.active = active;
    rep.interior = interior;
    report.clamp_count += clamps;
  }
  return result;
}

QVIReport qvi_residuals(const ValueField& field, const Problem& problem, const SchemeParams& scheme) {
  const Grid& grid = field.grid;
  const int n = field.slice_count() - 1;
  const FieldView view = field.view();
  QVIReport report;
  report.slices.resize(static_cast<std::size_t>(n + 1));
  for (int j = n; j >= 0; --j) {
    const bool terminal = j == n;
    const double t = field.time(j);
    const Eigen::ArrayXd& w = field.slices[static_cast<std::size_t>(j)];
    double m_cont = 0.0, m_int = 0.0, m_comp = 0.0;
    long clamps = 0, active = 0, interior = 0;
#pragma omp parallel reduction(max : m_cont, m_int, m_comp) reduction(+ : clamps, active, interior)
    {
      Workspace ws;
#pragma omp for schedule(dynamic, 256)
      for (Eigen::Index node = 0; node < grid.size(); ++node) {
        if (grid.classify(node) != NodeClass::interior) continue;
        ++interior;
        const Point x = grid.coords(node);
        double cont;
        if (terminal) {
          cont = field.post_horizon[node];
        } else {
          cont = problem_continuation(problem, field.slices[static_cast<std::size_t>(j + 1)], node, x, scheme, ws,
                                      &clamps);
        }
        const auto best = best_with(problem, view, t, x, terminal, scheme, ws, &clamps);
        if (best.value <= cont) ++active;
        const double v = w[node];
        m_cont = std::max(m_cont, std::max(0.0, v - cont));
        if (std::isfinite(best.value)) m_int = std::max(m_int, std::max(0.0, v - best.value));
        m_comp = std::max(m_comp, std::max(0.0, std::min(cont, best.value) - v));
      }
    }
    SliceResidual& rep = report.slices[static_cast<std::size_t>(j)];
    rep.t = t;
    rep.max_continuation = m_cont;
    rep.max_intervention = m_int;
    rep.max_complementarity = m_comp;
    rep.active = active;
    rep.interior = interior;
    report.clamp_count += clamps;
  }
  return report;
}

}  // namespace adaptex
