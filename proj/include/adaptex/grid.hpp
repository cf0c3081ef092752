#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace adaptex {

/// space axes carry the state-space boundary; discrete axes are exact-match;
/// belief axes are interpolated but have no boundary condition.
enum class AxisKind { space, discrete, belief };

enum class NodeClass { interior, boundary, absorbing };

constexpr int kMaxAxes = 8;

template <typename Scalar>
using BasicPoint = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, 0, kMaxAxes, 1>;
using Point = BasicPoint<double>;

template <typename Scalar>
class BasicAxis {
 public:
  struct Location {
    Eigen::Index cell = 0;
    Scalar frac = 0;
    bool clamped = false;
  };

  static BasicAxis uniform(std::string name, Scalar lo, Scalar hi, Eigen::Index count, AxisKind kind) {
    if (count < 2) throw std::invalid_argument("axis " + name + ": count must be >= 2");
    if (!(lo < hi)) throw std::invalid_argument("axis " + name + ": min must be < max");
    std::vector<Scalar> nodes(static_cast<std::size_t>(count));
    const Scalar h = (hi - lo) / Scalar(count - 1);
    for (Eigen::Index i = 0; i < count; ++i) nodes[static_cast<std::size_t>(i)] = lo + h * Scalar(i);
    nodes.back() = hi;
    BasicAxis axis(std::move(name), std::move(nodes), kind);
    axis.uniform_ = true;
    axis.spacing_ = h;
    return axis;
  }

  static BasicAxis from_nodes(std::string name, std::vector<Scalar> nodes, AxisKind kind) {
    if (nodes.size() < 2) throw std::invalid_argument("axis " + name + ": at least two nodes required");
    for (std::size_t i = 1; i < nodes.size(); ++i)
      if (!(nodes[i - 1] < nodes[i])) throw std::invalid_argument("axis " + name + ": nodes must increase");
    return BasicAxis(std::move(name), std::move(nodes), kind);
  }

  /// Discrete axis 0, 1, ..., last.
  static BasicAxis integers(std::string name, int last) {
    if (last < 0) throw std::invalid_argument("axis " + name + ": negative range");
    std::vector<Scalar> nodes(static_cast<std::size_t>(last + 1));
    for (int i = 0; i <= last; ++i) nodes[static_cast<std::size_t>(i)] = Scalar(i);
    BasicAxis axis(std::move(name), std::move(nodes), AxisKind::discrete);
    axis.uniform_ = true;
    axis.spacing_ = Scalar(1);
    return axis;
  }

  const std::string& name() const { return name_; }
  AxisKind kind() const { return kind_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(nodes_.size()); }
  Scalar node(Eigen::Index i) const { return nodes_[static_cast<std::size_t>(i)]; }
  const std::vector<Scalar>& nodes() const { return nodes_; }
  Scalar min() const { return nodes_.front(); }
  Scalar max() const { return nodes_.back(); }
  bool is_uniform() const { return uniform_; }
  /// Distance between node i and node i+1.
  Scalar gap(Eigen::Index i) const { return node(i + 1) - node(i); }

  /// Enclosing cell and local coordinate in [0, 1); points outside are clamped.
  Location locate(Scalar x) const {
    Location loc;
    const Eigen::Index n = size();
    if (x <= nodes_.front()) {
      loc.clamped = x < nodes_.front();
      return loc;
    }
    if (x >= nodes_.back()) {
      loc.clamped = x > nodes_.back();
      loc.cell = n - 1;
      return loc;
    }
    Eigen::Index i;
    if (uniform_) {
      i = static_cast<Eigen::Index>((x - nodes_.front()) / spacing_);
      i = std::clamp<Eigen::Index>(i, 0, n - 2);
      while (i > 0 && x < node(i)) --i;
      while (i < n - 2 && x >= node(i + 1)) ++i;
    } else {
      i = static_cast<Eigen::Index>(std::upper_bound(nodes_.begin(), nodes_.end(), x) - nodes_.begin()) - 1;
    }
    loc.cell = i;
    loc.frac = (x - node(i)) / gap(i);
    if (loc.frac >= Scalar(1)) {
      loc.cell = i + 1;
      loc.frac = Scalar(0);
    }
    return loc;
  }

  Eigen::Index nearest(Scalar x) const {
    const Location loc = locate(x);
    if (loc.frac > Scalar(0.5)) return loc.cell + 1;
    return loc.cell;
  }

  /// Index of the node equal to x, or nullopt.
  std::optional<Eigen::Index> exact(Scalar x) const {
    const Eigen::Index i = nearest(x);
    const Scalar tol = Scalar(1e-9) * std::max(Scalar(1), std::abs(x));
    if (std::abs(node(i) - x) <= tol) return i;
    return std::nullopt;
  }

 private:
  BasicAxis(std::string name, std::vector<Scalar> nodes, AxisKind kind)
      : name_(std::move(name)), nodes_(std::move(nodes)), kind_(kind) {}

  std::string name_;
  std::vector<Scalar> nodes_;
  AxisKind kind_;
  bool uniform_ = false;
  Scalar spacing_ = 0;
};

using Axis = BasicAxis<double>;

/// Multilinear corner weights of the cell enclosing a point.
template <typename Scalar>
struct BasicStencil {
  static constexpr int capacity = 1 << 6;
  int size = 0;
  std::array<Eigen::Index, capacity> index{};
  std::array<Scalar, capacity> weight{};
  bool clamped = false;

  Scalar weight_sum() const {
    Scalar s(0);
    for (int i = 0; i < size; ++i) s += weight[i];
    return s;
  }
};

using Stencil = BasicStencil<double>;

template <typename Scalar>
class BasicGrid {
 public:
  using AxisT = BasicAxis<Scalar>;
  using PointT = BasicPoint<Scalar>;
  using MultiIndex = std::array<Eigen::Index, kMaxAxes>;

  BasicGrid() = default;

  explicit BasicGrid(std::vector<AxisT> axes) : axes_(std::move(axes)) {
    if (axes_.empty() || axes_.size() > static_cast<std::size_t>(kMaxAxes))
      throw std::invalid_argument("grid: between 1 and 8 axes required");
    strides_.assign(axes_.size(), 1);
    for (std::size_t k = axes_.size() - 1; k > 0; --k) strides_[k - 1] = strides_[k] * axes_[k].size();
    size_ = strides_[0] * axes_[0].size();
    int interpolated = 0;
    for (const auto& a : axes_)
      if (a.kind() != AxisKind::discrete) ++interpolated;
    if (interpolated > 6) throw std::invalid_argument("grid: at most 6 interpolated axes");
  }

  /// Nodes whose `axis` coordinate equals node `index` are terminal-absorbing.
  void set_absorbing(int axis, Eigen::Index index) {
    absorbing_axis_ = axis;
    absorbing_index_ = index;
  }
  std::optional<int> absorbing_axis() const {
    return absorbing_axis_ >= 0 ? std::optional<int>(absorbing_axis_) : std::nullopt;
  }

  int dims() const { return static_cast<int>(axes_.size()); }
  const AxisT& axis(int k) const { return axes_[static_cast<std::size_t>(k)]; }
  const std::vector<AxisT>& axes() const { return axes_; }
  Eigen::Index size() const { return size_; }
  Eigen::Index stride(int k) const { return strides_[static_cast<std::size_t>(k)]; }

  int find_axis(const std::string& name) const {
    for (int k = 0; k < dims(); ++k)
      if (axis(k).name() == name) return k;
    return -1;
  }

  MultiIndex decode(Eigen::Index flat) const {
    MultiIndex idx{};
    for (int k = 0; k < dims(); ++k) {
      idx[k] = flat / stride(k);
      flat -= idx[k] * stride(k);
    }
    return idx;
  }

  Eigen::Index encode(const MultiIndex& idx) const {
    Eigen::Index flat = 0;
    for (int k = 0; k < dims(); ++k) flat += idx[k] * stride(k);
    return flat;
  }

  PointT coords(Eigen::Index flat) const {
    const MultiIndex idx = decode(flat);
    PointT p(dims());
    for (int k = 0; k < dims(); ++k) p[k] = axis(k).node(idx[k]);
    return p;
  }

  NodeClass classify(Eigen::Index flat) const {
    const MultiIndex idx = decode(flat);
    for (int k = 0; k < dims(); ++k) {
      if (axis(k).kind() != AxisKind::space) continue;
      if (idx[k] == 0 || idx[k] == axis(k).size() - 1) return NodeClass::boundary;
    }
    if (absorbing_axis_ >= 0 && idx[absorbing_axis_] == absorbing_index_) return NodeClass::absorbing;
    return NodeClass::interior;
  }

  /// Multilinear stencil; exact-node coordinates contribute a single corner.
  BasicStencil<Scalar> stencil(const PointT& p) const {
    if (p.size() != dims()) throw std::invalid_argument("stencil: point dimension mismatch");
    BasicStencil<Scalar> st;
    Eigen::Index base = 0;
    std::array<int, kMaxAxes> split_axes{};
    std::array<Scalar, kMaxAxes> fracs{};
    int n_split = 0;
    for (int k = 0; k < dims(); ++k) {
      const Scalar x = p[k];
      if (std::isnan(x)) throw std::invalid_argument("invalid point: NaN coordinate on axis " + axis(k).name());
      if (axis(k).kind() == AxisKind::discrete) {
        const auto i = axis(k).exact(x);
        if (!i) throw std::invalid_argument("point off discrete axis " + axis(k).name());
        base += *i * stride(k);
        continue;
      }
      const auto loc = axis(k).locate(x);
      st.clamped = st.clamped || loc.clamped;
      base += loc.cell * stride(k);
      if (loc.frac > Scalar(0)) {
        split_axes[n_split] = k;
        fracs[n_split] = loc.frac;
        ++n_split;
      }
    }
    st.size = 1 << n_split;
    for (int c = 0; c < st.size; ++c) {
      Eigen::Index idx = base;
      Scalar w(1);
      for (int j = 0; j < n_split; ++j) {
        if (c & (1 << j)) {
          idx += stride(split_axes[j]);
          w *= fracs[j];
        } else {
          w *= Scalar(1) - fracs[j];
        }
      }
      st.index[c] = idx;
      st.weight[c] = w;
    }
    return st;
  }

  /// Multilinear interpolant of nodal values at p (clamped to the box).
  template <typename Values>
  Scalar interpolate(const Values& values, const PointT& p, long* clamp_count = nullptr) const {
    const auto st = stencil(p);
    if (st.clamped && clamp_count) ++*clamp_count;
    Scalar v(0);
    for (int c = 0; c < st.size; ++c) v += st.weight[c] * values[st.index[c]];
    return v;
  }

  /// Nearest node, optionally restricted to nodes that are not on the space boundary.
  Eigen::Index nearest_node(const PointT& p, bool interior_only) const {
    MultiIndex idx{};
    for (int k = 0; k < dims(); ++k) {
      Eigen::Index i = axis(k).nearest(p[k]);
      if (interior_only && axis(k).kind() == AxisKind::space && axis(k).size() > 2)
        i = std::clamp<Eigen::Index>(i, 1, axis(k).size() - 2);
      idx[k] = i;
    }
    return encode(idx);
  }

  /// Human-readable description used to match artifacts against configs.
  std::string signature() const {
    std::string s;
    for (const auto& a : axes_) {
      s += a.name() + "[";
      s += std::to_string(a.size()) + ":";
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.12g..%.12g", double(a.min()), double(a.max()));
      s += buf;
      s += "]";
    }
    return s;
  }

 private:
  std::vector<AxisT> axes_;
  std::vector<Eigen::Index> strides_;
  Eigen::Index size_ = 0;
  int absorbing_axis_ = -1;
  Eigen::Index absorbing_index_ = 0;
};

using Grid = BasicGrid<double>;

/// Read-only view of a time-sliced field: slices at j*time_step for j <= horizon/time_step
/// and a time-independent field used on (horizon, 2 horizon].
struct FieldView {
  const Grid* grid = nullptr;
  std::span<const Eigen::ArrayXd> slices;
  const Eigen::ArrayXd* post_horizon = nullptr;
  double time_step = 1.0;
  double horizon = 1.0;
};

/// Index of the slice at [t]_h, or -1 for the post-horizon field.
int snap_time(double t, double time_step, double horizon);

double sample_field(const FieldView& field, double t, const Point& p, long* clamp_count = nullptr);

}  // namespace adaptex
