#include "adaptex/priors.hpp"

#include <cmath>
#include <string>

namespace adaptex {

namespace {

void check_weights(const std::vector<double>& atoms, const Eigen::VectorXd& weights) {
  if (static_cast<Eigen::Index>(atoms.size()) != weights.size())
    throw std::invalid_argument("finite belief: atom/weight size mismatch");
  if (atoms.empty()) throw std::invalid_argument("finite belief: empty support");
  if ((weights.array() < 0.0).any()) throw std::invalid_argument("finite belief: negative weight");
  if (std::abs(weights.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("finite belief: weights must sum to 1");
}

}  // namespace

FiniteBelief::FiniteBelief(std::vector<double> atoms, Eigen::VectorXd weights)
    : FiniteBelief(std::make_shared<const std::vector<double>>(std::move(atoms)), std::move(weights)) {}

FiniteBelief::FiniteBelief(std::shared_ptr<const std::vector<double>> atoms, Eigen::VectorXd weights)
    : atoms_(std::move(atoms)), weights_(std::move(weights)) {
  if (!atoms_) throw std::invalid_argument("finite belief: null atoms");
  check_weights(*atoms_, weights_);
}

FiniteBelief FiniteBelief::two_point(double low, double high, double p) {
  Eigen::VectorXd w(2);
  w << 1.0 - p, p;
  return FiniteBelief(std::vector<double>{low, high}, std::move(w));
}

double FiniteBelief::mean() const {
  double m = 0.0;
  for (Eigen::Index j = 0; j < weights_.size(); ++j) m += weights_[j] * (*atoms_)[j];
  return m;
}

FiniteBelief FiniteBelief::with_weights(Eigen::VectorXd weights) const { return FiniteBelief(atoms_, std::move(weights)); }

FiniteBelief finite_bayes_update(const FiniteBelief& belief, const Eigen::Ref<const Eigen::VectorXd>& likelihood) {
  if (likelihood.size() != belief.size()) throw std::invalid_argument("bayes update: one likelihood per atom required");
  if ((likelihood.array() < 0.0).any()) throw std::invalid_argument("bayes update: negative likelihood");
  Eigen::VectorXd posterior = belief.weights().cwiseProduct(likelihood);
  const double evidence = posterior.sum();
  if (!(evidence > 0.0)) throw DegenerateEvidence("degenerate evidence: observation impossible under the prior");
  posterior /= evidence;
  return belief.with_weights(std::move(posterior));
}

double gaussian_posterior_std(double prior_std, double noise_std) {
  if (prior_std == 0.0) return 0.0;
  return 1.0 / std::sqrt(1.0 / (prior_std * prior_std) + 1.0 / (noise_std * noise_std));
}

GaussianBelief gaussian_conjugate_update(const GaussianBelief& belief, double y, const ObservationNoise& noise) {
  if (!(noise.std > 0.0)) throw std::invalid_argument("invalid noise parameter: std must be > 0");
  if (belief.std < 0.0) throw std::invalid_argument("gaussian belief: negative std");
  if (belief.is_dirac()) return belief;
  const double s2 = belief.std * belief.std;
  const double e2 = noise.std * noise.std;
  const double post = gaussian_posterior_std(belief.std, noise.std);
  return GaussianBelief{post * post * (y / e2 + belief.mean / s2), post};
}

FiniteBelief execution_time_update(const FiniteBelief& belief, bool executed, double elapsed, double wait,
                                   double limit_price, const IntensityFn& intensity) {
  if (executed && (elapsed < 0.0 || elapsed > wait))
    throw std::invalid_argument("execution time update: elapsed outside [0, wait]");
  Eigen::VectorXd like(belief.size());
  for (Eigen::Index j = 0; j < belief.size(); ++j) {
    const double rate = intensity(belief.atoms()[j], limit_price);
    like[j] = executed ? rate * std::exp(-rate * elapsed) : std::exp(-rate * wait);
  }
  return finite_bayes_update(belief, like);
}

Eigen::VectorXd slot_likelihood(const FiniteBelief& belief, SlotOutcome outcome, double slot_length, int max_slots,
                                double limit_price, const IntensityFn& intensity) {
  if (outcome.slot < 0 || outcome.slot > max_slots)
    throw std::invalid_argument("invalid slot " + std::to_string(outcome.slot));
  if (!(slot_length > 0.0) && max_slots > 0) throw std::invalid_argument("slot length must be > 0");
  Eigen::VectorXd like(belief.size());
  for (Eigen::Index j = 0; j < belief.size(); ++j) {
    const double rate = intensity(belief.atoms()[j], limit_price);
    if (outcome.executed()) {
      const int k = outcome.slot;
      like[j] = std::exp(-rate * (k - 1) * slot_length) - std::exp(-rate * k * slot_length);
    } else {
      like[j] = std::exp(-rate * max_slots * slot_length);
    }
  }
  return like;
}

FiniteBelief slot_censored_update(const FiniteBelief& belief, SlotOutcome outcome, double slot_length, int max_slots,
                                  double limit_price, const IntensityFn& intensity) {
  if (max_slots == 0 && !outcome.executed()) return belief;
  return finite_bayes_update(belief, slot_likelihood(belief, outcome, slot_length, max_slots, limit_price, intensity));
}

}  // namespace adaptex
