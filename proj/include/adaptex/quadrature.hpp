#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace adaptex {

/// Expectation rule for a standard normal variable: E[f(Z)] ~ sum_i w_i f(z_i).
template <typename Scalar>
struct StandardRule {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> nodes;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;

  Eigen::Index size() const { return nodes.size(); }

  template <typename F>
  Scalar expectation(F&& f) const {
    Scalar sum(0);
    for (Eigen::Index i = 0; i < nodes.size(); ++i) sum += weights[i] * f(nodes[i]);
    return sum;
  }
};

using StandardRuled = StandardRule<double>;

/// Gauss-Hermite rule for the standard normal density (probabilists'
/// polynomials), built by Golub-Welsch from the Jacobi matrix.
template <typename Scalar>
StandardRule<Scalar> gauss_hermite_rule(int order) {
  if (order < 1) throw std::invalid_argument("gauss-hermite: order must be >= 1");
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Mat jacobi = Mat::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    jacobi(k, k - 1) = std::sqrt(Scalar(k));
    jacobi(k - 1, k) = jacobi(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(jacobi);
  StandardRule<Scalar> rule;
  rule.nodes = eig.eigenvalues();
  rule.weights = eig.eigenvectors().row(0).transpose().array().square();
  rule.weights /= rule.weights.sum();
  // Symmetrize against round-off so odd moments vanish exactly.
  for (int i = 0; i < order / 2; ++i) {
    const int j = order - 1 - i;
    const Scalar z = (rule.nodes[j] - rule.nodes[i]) / 2;
    const Scalar w = (rule.weights[i] + rule.weights[j]) / 2;
    rule.nodes[i] = -z;
    rule.nodes[j] = z;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = Scalar(0);
  return rule;
}

/// Two-point rule {-1, +1} with probability 1/2 each.
template <typename Scalar>
StandardRule<Scalar> symmetric_two_point_rule() {
  StandardRule<Scalar> rule;
  rule.nodes.resize(2);
  rule.weights.resize(2);
  rule.nodes << Scalar(-1), Scalar(1);
  rule.weights << Scalar(0.5), Scalar(0.5);
  return rule;
}

}  // namespace adaptex
