#pragma once

#include "adaptex/simulate.hpp"
#include "adaptex/solver.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace adaptex {

/// Per (slice, node): kWait or an action index.
struct PolicyGrid {
  Grid grid;
  double time_step = 1.0;
  double horizon = 1.0;
  std::vector<std::vector<std::int16_t>> actions;
  std::vector<std::string> labels;

  int slice_count() const { return static_cast<int>(actions.size()); }
  int at(int slice, Eigen::Index node) const { return actions[static_cast<std::size_t>(slice)][static_cast<std::size_t>(node)]; }
  /// Slice index of a decision time; throws when t is off the policy clock.
  int slice_of(double t) const;
};

/// Act iff the best intervention is within tol_act of the stored value.
PolicyGrid extract_policy(const ValueField& field, const Problem& problem, const SchemeParams& scheme);

/// Reads the policy at the nearest node that is not on the space boundary.
class PolicyRule final : public DecisionRule {
 public:
  PolicyRule(const PolicyGrid& policy, const Problem& problem) : policy_(policy), problem_(problem) {}
  int decide(const DecisionContext& ctx) const override;
  /// Grid distance between ctx and the node that is read, in axis units.
  double lookup_distance(const DecisionContext& ctx) const;

 private:
  const PolicyGrid& policy_;
  const Problem& problem_;
};

}  // namespace adaptex
