#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "mmc/ensembles.hpp"
#include "mmc/indicator.hpp"
#include "mmc/types.hpp"

namespace mmc {

/// A bound component: point value plus a 3-standard-error radius when it was
/// estimated by Monte Carlo (radius 0 and exact = true otherwise).
struct Estimate {
  double value = 0.0;
  double radius = 0.0;
  bool exact = true;
  std::size_t samples = 0;
  std::uint64_t seed = 0;

  static Estimate exact_value(double v) { return {v, 0.0, true, 0, 0}; }
  std::string provenance() const;
};

struct BoundComponents {
  Estimate b1;
  Estimate b1p;
  Estimate b2;
  Estimate b2p;
  Estimate b3;
};

struct BoundParams {
  double beta = 1.0;
  double delta = 1.0;
  double tau = 1.0;
  double C = 1.0;

  SmoothingParams smoothing() const { return {beta, delta}; }
  double phi() const { return beta * (1.0 + delta); }
};

struct BoundReport {
  Eigen::Index n = 1;
  Eigen::Index m = 1;
  BoundParams params;
  EpsilonValue eps;
  double lambda = 0.0;
  double threshold = 0.0;
  double rhs_general = 0.0;
  std::optional<double> rhs_gaussian;
  BoundComponents components;
};

/// max |covA - covB| entrywise.
double compute_B3(const EntryCovariance& covA, const EntryCovariance& covB);

/// E max_{a,b} |X_a X_b - E X_a X_b|, centered with the exact covariance.
Estimate estimate_B1(const SampleStream& stream, std::size_t samples,
                     unsigned workers = 0);

/// E max_a |X_a|^3.
Estimate estimate_B2(const SampleStream& stream, std::size_t samples,
                     unsigned workers = 0);

/// max(log n / (beta delta), log m / beta).
double smoothing_lambda(Eigen::Index n, Eigen::Index m, const SmoothingParams& sp);

/// 2 lambda + 3 tau.
double coupling_threshold(Eigen::Index n, Eigen::Index m, const BoundParams& p);

/// Assembles threshold and right-hand sides. The Gaussian variant keeps only
/// B3 and is filled when `gaussian` is set. Throws ConstraintError unless
/// tau > 1/phi and C >= 0.
BoundReport coupling_rhs(Eigen::Index n, Eigen::Index m, const BoundParams& params,
                         const BoundComponents& comps, bool gaussian);

/// beta = log(nm)/tau, delta = 1.
SmoothingParams log_nm_parameters(Eigen::Index n, Eigen::Index m, double tau);

struct OptimizedParams {
  bool feasible = false;
  double beta = 0.0;
  double delta = 0.0;
  double tau = 0.0;
  double rhs = 0.0;
  /// Smallest threshold seen over the search box; informative when infeasible.
  double min_threshold = 0.0;
  std::size_t evaluations = 0;
};

/// Minimizes the right-hand side over (beta, delta, tau) subject to
/// threshold <= cap and tau > 1/phi. The right-hand side is strictly
/// decreasing in tau, so tau sits on the cap, tau = (cap - 2 lambda) / 3;
/// (log beta, log delta) is searched on a grid, then refined by Nelder-Mead.
OptimizedParams optimize_parameters(const BoundComponents& comps, Eigen::Index n,
                                    Eigen::Index m, double C, double threshold_cap,
                                    bool gaussian);

}  // namespace mmc
