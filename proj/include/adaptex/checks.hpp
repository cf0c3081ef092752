#pragma once

#include "adaptex/config.hpp"
#include "adaptex/oracle.hpp"
#include "adaptex/problems.hpp"

#include <string>
#include <vector>

namespace adaptex {

struct CheckResult {
  std::string name;
  bool passed = false;
  double metric = 0.0;     // worst error or violation
  double tolerance = 0.0;
  std::string detail;
};

/// Grid-aligned degenerate impact problem (sigma = 0, no resilience, Dirac
/// belief, two-point noise): every trade lands on a node.
struct DegenerateImpactSetup {
  DegenerateImpactSpec spec;
  ImpactModelParams params;
  ImpactGridSpec grid;
  /// x1 nodes whose reachable states stay inside the price box.
  std::vector<double> checked_prices;
};

DegenerateImpactSetup degenerate_impact_setup();

/// Solver vs exhaustive recursion on the degenerate impact instance; relative error.
CheckResult check_impact_oracle(double tolerance = 1e-8);
/// Solver vs exhaustive recursion on a small limit instance at p = 0 and p = 1.
CheckResult check_limit_oracle(double tolerance = 1e-8);

/// Conjugate update against trapezoidal Bayes on randomized cases.
CheckResult check_gaussian_bayes(int cases, std::uint64_t seed, ValidateFault fault, double tolerance = 1e-4);
/// Hand Bayes ratios and slot/censoring telescoping for finite beliefs.
CheckResult check_finite_bayes(double tolerance = 1e-12);
/// Expected posterior equals the prior (finite: exhaustive outcomes; Gaussian: quadrature).
CheckResult check_martingale(double finite_tolerance = 1e-10, double gaussian_tolerance = 1e-6);

/// QVI residuals after a solve on a coarsened copy of the configured model.
CheckResult check_coarse_residuals(const RunConfig& config, double tolerance = 1e-10);

/// The coarsened model used by check_coarse_residuals.
RunConfig coarse_config(const RunConfig& config);

}  // namespace adaptex
