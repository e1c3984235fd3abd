#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mmc/bounds.hpp"
#include "mmc/ensembles.hpp"
#include "mmc/indicator.hpp"

namespace mmc {

/// Sorted sample with closed-interval probabilities.
class EmpiricalCdf {
 public:
  explicit EmpiricalCdf(std::vector<double> samples);

  std::size_t size() const { return sorted_.size(); }
  const std::vector<double>& sorted() const { return sorted_; }
  /// Fraction of samples <= t.
  double operator()(double t) const;
  /// Fraction of samples in [lo, hi].
  double probability(const Interval& iv) const;
  double mean() const;

 private:
  std::vector<double> sorted_;
};

/// N realizations of min_i max_j X_ij, sorted ascending.
std::vector<double> minmax_samples(const SampleStream& stream, std::size_t samples,
                                   unsigned workers = 0);

struct GridSpec {
  int quantile_levels = 99;
  int random_intervals = 30;
  std::optional<std::vector<Interval>> explicit_intervals;
};

/// Empirical quantiles q_1..q_L of the pooled sample at levels k/(L+1);
/// intervals (-inf, q_k], [q_k, inf), [q_k, q_{k+1}] plus random
/// [q_a, q_b] with a < b drawn from `seed`.
std::vector<Interval> default_grid(const std::vector<double>& pooled_sorted,
                                   const GridSpec& spec, std::uint64_t seed);

struct GapRow {
  Interval interval;
  double mu_hat = 0.0;           // P_A(minmax in A)
  double nu_enlarged_hat = 0.0;  // P_B(minmax in A^r)
  double gap = 0.0;
  double se = 0.0;  // binomial SE of the gap
};

struct GapOptions {
  std::size_t samples = 100000;
  /// Samples for B1/B2 estimates; 0 means `samples`.
  std::size_t component_samples = 0;
  std::uint64_t seed = 1;
  unsigned workers = 0;
  GridSpec grid;
};

struct GapReport {
  std::string name_a;
  std::string name_b;
  BoundReport bound;
  bool gaussian = false;
  double rhs = 0.0;  // Gaussian variant when both ensembles are Gaussian
  double enlargement = 0.0;
  std::vector<GapRow> rows;
  std::size_t argmax = 0;
  double max_gap = 0.0;
  double max_gap_se = 0.0;
  /// Passing policy: every row has gap <= rhs + 2 se.
  bool pass = false;
  std::size_t samples = 0;
  std::uint64_t seed_a = 0;
  std::uint64_t seed_b = 0;
};

/// Per-interval gaps mu_hat(A) - nu_hat(A^r) for r = enlargement.
std::vector<GapRow> interval_gaps(const EmpiricalCdf& a, const EmpiricalCdf& b,
                                  const std::vector<Interval>& grid, double enlargement);

/// Evaluates the passing policy of `rows` against a right-hand side.
bool gap_passes(const std::vector<GapRow>& rows, double rhs);

GapReport distributional_gap(const EnsembleSpec& spec_a, const EnsembleSpec& spec_b,
                             const BoundParams& params, const GapOptions& options);

struct Scenario {
  std::string name;
  EnsembleSpec a;
  EnsembleSpec b;
  BoundParams params;  // C is ignored
};

struct ScenarioMargin {
  std::string name;
  double required_c = 0.0;  // smallest C passing this scenario alone
  double margin = 0.0;      // min over rows of rhs(C*) + 2 se - gap
  bool feasible = true;
};

struct CalibrationResult {
  double c_star = 0.0;
  bool finite = true;
  std::string binding;
  std::vector<ScenarioMargin> scenarios;
  std::vector<GapReport> reports;
};

/// Smallest C >= 0 for which every scenario passes, by bisection on C.
CalibrationResult calibrate_C(const std::vector<Scenario>& scenarios,
                              const GapOptions& options);

}  // namespace mmc
