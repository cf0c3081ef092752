#pragma once

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

namespace adaptex {

/// Raised when an observation has zero probability under the current belief.
class DegenerateEvidence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Gaussian belief on the per-unit impact parameter. std == 0 is a Dirac mass.
struct GaussianBelief {
  double mean = 0.0;
  double std = 0.0;

  bool is_dirac() const { return std == 0.0; }
};

struct ObservationNoise {
  double std = 1e-4;
};

/// Belief with finite support. The atom list is shared and never modified by
/// updates, so two beliefs on the same support differ only by their weights.
class FiniteBelief {
 public:
  FiniteBelief(std::vector<double> atoms, Eigen::VectorXd weights);
  FiniteBelief(std::shared_ptr<const std::vector<double>> atoms, Eigen::VectorXd weights);

  /// Two-atom belief with weight `p` on the second atom.
  static FiniteBelief two_point(double low, double high, double p);

  const std::vector<double>& atoms() const { return *atoms_; }
  const std::shared_ptr<const std::vector<double>>& shared_atoms() const { return atoms_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  Eigen::Index size() const { return weights_.size(); }
  double mean() const;

  FiniteBelief with_weights(Eigen::VectorXd weights) const;

 private:
  std::shared_ptr<const std::vector<double>> atoms_;
  Eigen::VectorXd weights_;
};

/// rate(u, b): execution intensity for atom u at limit price b.
using IntensityFn = std::function<double(double u, double b)>;

FiniteBelief finite_bayes_update(const FiniteBelief& belief, const Eigen::Ref<const Eigen::VectorXd>& likelihood);

/// Conjugate update for the observation y = upsilon + eps, eps ~ N(0, noise.std^2).
GaussianBelief gaussian_conjugate_update(const GaussianBelief& belief, double y, const ObservationNoise& noise);

/// Standard deviation after the conjugate update; independent of the observed value.
double gaussian_posterior_std(double prior_std, double noise_std);

/// Continuous execution-time update. `elapsed` is the execution time when
/// executed; `wait` is the maximal wait used for the censored branch.
FiniteBelief execution_time_update(const FiniteBelief& belief, bool executed, double elapsed, double wait,
                                   double limit_price, const IntensityFn& intensity);

/// Outcome of an order observed on a slot clock. slot == 0 means censored.
struct SlotOutcome {
  int slot = 0;

  static SlotOutcome executed_in(int k) {
    if (k < 1) throw std::invalid_argument("invalid slot: executed slots start at 1");
    return SlotOutcome{k};
  }
  static SlotOutcome censored() { return SlotOutcome{0}; }
  bool executed() const { return slot > 0; }
};

/// Per-atom likelihood of a slot outcome: exp(-r(k-1)d) - exp(-rkd), or exp(-rKd) when censored.
Eigen::VectorXd slot_likelihood(const FiniteBelief& belief, SlotOutcome outcome, double slot_length, int max_slots,
                                double limit_price, const IntensityFn& intensity);

FiniteBelief slot_censored_update(const FiniteBelief& belief, SlotOutcome outcome, double slot_length, int max_slots,
                                  double limit_price, const IntensityFn& intensity);

}  // namespace adaptex
