#pragma once

#include <vector>

#include "mmc/types.hpp"

namespace mmc {

/// Smoothing loss of the indicator approximation.
struct EpsilonValue {
  double alpha = 0.0;    // phi^2 tau^2 - 1
  double epsilon = 0.0;  // sqrt(exp(-alpha) (1 + alpha))
};

/// Throws ConstraintError unless tau > 1/phi.
EpsilonValue epsilon(const SmoothingParams& sp, double tau);

/// Closed interval [lo, hi]; lo may be -inf and hi may be +inf.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Finite union of disjoint closed intervals, kept sorted and merged.
class IntervalSet {
 public:
  IntervalSet() = default;
  explicit IntervalSet(std::vector<Interval> parts);
  static IntervalSet single(double lo, double hi) { return IntervalSet({{lo, hi}}); }

  const std::vector<Interval>& parts() const { return parts_; }
  bool empty() const { return parts_.empty(); }
  bool contains(double t) const;
  /// Euclidean distance from t to the set (0 inside); +inf for the empty set.
  double distance(double t) const;
  /// Signed slope of distance() at t: 0 inside, +1 right of the nearest
  /// point, -1 left of it. At equidistant junctions the right-hand limit.
  double distance_slope(double t) const;

  friend bool operator==(const IntervalSet&, const IntervalSet&) = default;

 private:
  std::vector<Interval> parts_;
};

/// {t : d(t, set) <= r}.
IntervalSet enlarge(const IntervalSet& set, double r);

struct IndicatorSpec {
  double tau = 1.0;
  IntervalSet set;
};

/// g(t) = s(1 - d(t, Q) / (3 tau)) with the quintic smoothstep
/// s(u) = 6u^5 - 15u^4 + 10u^3 clamped to [0, 1]. Satisfies
/// 1_Q <= g <= 1_{Q^{3 tau}} and |g'| <= 0.625/tau, |g''| <= 0.65/tau^2,
/// |g'''| <= 2.25/tau^3.
class SmoothIndicator {
 public:
  explicit SmoothIndicator(IndicatorSpec spec);

  double operator()(double t) const { return value(t); }
  double value(double t) const;
  double d1(double t) const;
  double d2(double t) const;
  double d3(double t) const;

  const IndicatorSpec& spec() const { return spec_; }

  static constexpr double kD1Const = 0.625;  // 15/8 / 3
  static constexpr double kD2Const = 0.65;   // >= (10/sqrt(3)) / 9
  static constexpr double kD3Const = 2.25;   // >= 60 / 27

 private:
  double u(double t) const;
  IndicatorSpec spec_;
};

double smooth_indicator(const IndicatorSpec& spec, double t);

namespace smoothstep {
double s(double u);
double s1(double u);
double s2(double u);
double s3(double u);
}  // namespace smoothstep

}  // namespace mmc
