#include "adaptex/grid.hpp"

#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

using namespace adaptex;
using doctest::Approx;

namespace {

Point pt(std::initializer_list<double> v) {
  Point p(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) p[i++] = x;
  return p;
}

Grid plane() {
  return Grid({Axis::uniform("a", 0.0, 4.0, 5, AxisKind::space), Axis::uniform("b", -1.0, 1.0, 3, AxisKind::space)});
}

}  // namespace

TEST_CASE("stencil: node, midpoint, bilinear corners") {
  const Grid line({Axis::uniform("x", 0.0, 1.0, 3, AxisKind::space)});
  auto on = line.stencil(pt({0.5}));
  REQUIRE(on.size == 1);
  CHECK(on.weight[0] == 1.0);
  CHECK(on.index[0] == 1);

  auto mid = line.stencil(pt({0.25}));
  REQUIRE(mid.size == 2);
  CHECK(mid.weight[0] == Approx(0.5));
  CHECK(mid.weight[1] == Approx(0.5));

  const Grid g = plane();
  const auto st = g.stencil(pt({1.25, -0.25}));
  REQUIRE(st.size == 4);
  const auto corner = [&](Eigen::Index i, Eigen::Index j) { return g.encode({i, j}); };
  CHECK(st.index[0] == corner(1, 0));
  CHECK(st.weight[0] == Approx(0.1875).epsilon(1e-15));
  CHECK(st.index[1] == corner(2, 0));
  CHECK(st.weight[1] == Approx(0.0625).epsilon(1e-15));
  CHECK(st.index[2] == corner(1, 1));
  CHECK(st.weight[2] == Approx(0.5625).epsilon(1e-15));
  CHECK(st.index[3] == corner(2, 1));
  CHECK(st.weight[3] == Approx(0.1875).epsilon(1e-15));
}

TEST_CASE("stencil: NaN is rejected, outside points are clamped") {
  const Grid g = plane();
  CHECK_THROWS_AS(g.stencil(pt({std::numeric_limits<double>::quiet_NaN(), 0.0})), std::invalid_argument);
  const auto st = g.stencil(pt({9.0, 0.0}));
  CHECK(st.clamped);
  CHECK(st.size == 1);
  CHECK(st.index[0] == g.encode({4, 1}));
}

TEST_CASE("stencil: discrete axes must match a node") {
  const Grid g({Axis::integers("x3", 3), Axis::uniform("p", 0.0, 1.0, 11, AxisKind::belief)});
  CHECK(g.stencil(pt({2.0, 0.35})).size == 2);
  CHECK_THROWS_AS(g.stencil(pt({1.5, 0.35})), std::invalid_argument);
}

TEST_CASE("property: partition of unity and exact linear reproduction") {
  const Grid g({Axis::uniform("a", -2.0, 3.0, 7, AxisKind::space), Axis::from_nodes("b", {0.0, 1e-3, 0.1, 1.0}, AxisKind::belief),
                Axis::uniform("c", 10.0, 11.0, 4, AxisKind::space)});
  Eigen::ArrayXd f(g.size());
  const double a0 = 0.7, a1 = -3.0, a2 = 2.5, b = 1.25;
  for (Eigen::Index n = 0; n < g.size(); ++n) {
    const Point x = g.coords(n);
    f[n] = a0 * x[0] + a1 * x[1] + a2 * x[2] + b;
  }
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const Point x = pt({-2.0 + 5.0 * u(rng), u(rng), 10.0 + u(rng)});
    const auto st = g.stencil(x);
    CHECK(std::abs(st.weight_sum() - 1.0) < 1e-12);
    for (int c = 0; c < st.size; ++c) CHECK(st.weight[c] >= 0.0);
    CHECK(std::abs(g.interpolate(f, x) - (a0 * x[0] + a1 * x[1] + a2 * x[2] + b)) < 1e-12);
  }
}

TEST_CASE("property: interpolation stays within the corner values") {
  const Grid g = plane();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::ArrayXd f(g.size());
  for (Eigen::Index n = 0; n < g.size(); ++n) f[n] = u(rng);
  for (int k = 0; k < 500; ++k) {
    const Point x = pt({4.0 * u(rng), -1.0 + 2.0 * u(rng)});
    const auto st = g.stencil(x);
    double lo = 1e300, hi = -1e300;
    for (int c = 0; c < st.size; ++c) {
      lo = std::min(lo, f[st.index[c]]);
      hi = std::max(hi, f[st.index[c]]);
    }
    const double v = g.interpolate(f, x);
    CHECK(v >= lo - 1e-15);
    CHECK(v <= hi + 1e-15);
  }
}

TEST_CASE("property: clamped sampling equals sampling at the nearest box point") {
  const Grid g = plane();
  Eigen::ArrayXd f(g.size());
  for (Eigen::Index n = 0; n < g.size(); ++n) f[n] = std::sin(static_cast<double>(n));
  long clamps = 0;
  CHECK(g.interpolate(f, pt({-3.0, 0.3}), &clamps) == g.interpolate(f, pt({0.0, 0.3})));
  CHECK(g.interpolate(f, pt({2.6, 7.0}), &clamps) == g.interpolate(f, pt({2.6, 1.0})));
  CHECK(clamps == 2);
}

TEST_CASE("boundary classification") {
  Grid g({Axis::integers("x3", 2), Axis::uniform("x1", 0.0, 1.0, 5, AxisKind::space),
          Axis::uniform("m", 0.0, 1.0, 3, AxisKind::belief)});
  g.set_absorbing(0, 2);
  CHECK(g.classify(g.encode({0, 0, 0})) == NodeClass::boundary);
  CHECK(g.classify(g.encode({1, 4, 2})) == NodeClass::boundary);
  CHECK(g.classify(g.encode({1, 2, 0})) == NodeClass::interior);
  CHECK(g.classify(g.encode({0, 1, 2})) == NodeClass::interior);
  CHECK(g.classify(g.encode({2, 2, 1})) == NodeClass::absorbing);
  CHECK(g.classify(g.encode({2, 0, 1})) == NodeClass::boundary);
}

TEST_CASE("sample_field: time snapping") {
  const Grid g({Axis::uniform("x", 0.0, 1.0, 2, AxisKind::space)});
  std::vector<Eigen::ArrayXd> slices;
  for (int j = 0; j <= 10; ++j) slices.push_back(Eigen::ArrayXd::Constant(2, j));
  const Eigen::ArrayXd post = Eigen::ArrayXd::Constant(2, -1.0);
  const FieldView view{&g, slices, &post, 1.0, 10.0};
  CHECK(snap_time(2.3, 1.0, 10.0) == 3);
  CHECK(snap_time(3.0, 1.0, 10.0) == 3);
  CHECK(sample_field(view, 2.3, pt({0.5})) == 3.0);
  CHECK(sample_field(view, 10.0, pt({0.5})) == 10.0);
  CHECK(sample_field(view, 10.5, pt({0.5})) == -1.0);
  CHECK(sample_field(view, 20.0, pt({0.5})) == -1.0);
  CHECK_THROWS_AS(sample_field(view, 20.5, pt({0.5})), std::invalid_argument);
}

TEST_CASE("sample_field: constant field") {
  const Grid g = plane();
  std::vector<Eigen::ArrayXd> slices(4, Eigen::ArrayXd::Constant(g.size(), 2.5));
  const Eigen::ArrayXd post = Eigen::ArrayXd::Constant(g.size(), 2.5);
  const FieldView view{&g, slices, &post, 0.5, 1.5};
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 100; ++k)
    CHECK(sample_field(view, 3.0 * u(rng), pt({4.0 * u(rng), 2.0 * u(rng) - 1.0})) == Approx(2.5).epsilon(1e-15));
}
