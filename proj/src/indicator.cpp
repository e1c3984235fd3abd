#include "mmc/indicator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mmc {

EpsilonValue epsilon(const SmoothingParams& sp, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw ConstraintError("tau must be positive and finite");
  const double phi_tau = sp.phi() * tau;
  if (!(phi_tau > 1.0))
    throw ConstraintError("tau must exceed 1/(beta(1+delta)) = " +
                          std::to_string(1.0 / sp.phi()));
  EpsilonValue e;
  e.alpha = phi_tau * phi_tau - 1.0;
  // log-domain to keep tiny values accurate for large alpha
  e.epsilon = std::exp(0.5 * (std::log1p(e.alpha) - e.alpha));
  return e;
}

IntervalSet::IntervalSet(std::vector<Interval> parts) {
  for (const auto& p : parts)
    if (std::isnan(p.lo) || std::isnan(p.hi) || p.lo > p.hi)
      throw DomainError("interval endpoints must satisfy lo <= hi");
  std::sort(parts.begin(), parts.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  for (const auto& p : parts) {
    if (!parts_.empty() && p.lo <= parts_.back().hi)
      parts_.back().hi = std::max(parts_.back().hi, p.hi);
    else
      parts_.push_back(p);
  }
}

bool IntervalSet::contains(double t) const { return distance(t) == 0.0; }

namespace {

// Index of the first interval with hi >= t.
std::size_t first_not_left(const std::vector<Interval>& parts, double t) {
  return static_cast<std::size_t>(
      std::lower_bound(parts.begin(), parts.end(), t,
                       [](const Interval& iv, double v) { return iv.hi < v; }) -
      parts.begin());
}

}  // namespace

double IntervalSet::distance(double t) const {
  if (parts_.empty()) return std::numeric_limits<double>::infinity();
  const std::size_t k = first_not_left(parts_, t);
  double best = std::numeric_limits<double>::infinity();
  if (k < parts_.size()) {
    if (parts_[k].lo <= t) return 0.0;
    best = parts_[k].lo - t;
  }
  if (k > 0) best = std::min(best, t - parts_[k - 1].hi);
  return best;
}

double IntervalSet::distance_slope(double t) const {
  if (parts_.empty()) return 0.0;
  const std::size_t k = first_not_left(parts_, t);
  if (k < parts_.size() && parts_[k].lo <= t) return 0.0;
  const double right = k < parts_.size() ? parts_[k].lo - t
                                         : std::numeric_limits<double>::infinity();
  const double left = k > 0 ? t - parts_[k - 1].hi
                            : std::numeric_limits<double>::infinity();
  return left < right ? 1.0 : -1.0;
}

IntervalSet enlarge(const IntervalSet& set, double r) {
  if (!(r >= 0.0)) throw DomainError("enlargement radius must be nonnegative");
  std::vector<Interval> widened;
  widened.reserve(set.parts().size());
  for (const auto& p : set.parts()) widened.push_back({p.lo - r, p.hi + r});
  return IntervalSet(std::move(widened));
}

namespace smoothstep {

double s(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  // rounding can push the polynomial a few ulps past 1 near u = 1
  return std::min(1.0, u * u * u * (10.0 + u * (-15.0 + 6.0 * u)));
}
double s1(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  const double w = u * (1.0 - u);
  return 30.0 * w * w;
}
double s2(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  return 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u);
}
double s3(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  return 60.0 - 360.0 * u + 360.0 * u * u;
}

}  // namespace smoothstep

SmoothIndicator::SmoothIndicator(IndicatorSpec spec) : spec_(std::move(spec)) {
  if (!(spec_.tau > 0.0) || !std::isfinite(spec_.tau))
    throw DomainError("tau must be positive and finite");
}

double SmoothIndicator::u(double t) const {
  return 1.0 - spec_.set.distance(t) / (3.0 * spec_.tau);
}

// With u = 1 - d(t)/(3 tau) and d' = slope (|slope| = 1 outside Q):
// g' = -s'(u) slope / (3 tau), g'' = s''(u) / (3 tau)^2,
// g''' = -s'''(u) slope / (3 tau)^3.
double SmoothIndicator::value(double t) const { return smoothstep::s(u(t)); }

double SmoothIndicator::d1(double t) const {
  const double w = 3.0 * spec_.tau;
  return -smoothstep::s1(u(t)) * spec_.set.distance_slope(t) / w;
}

double SmoothIndicator::d2(double t) const {
  const double w = 3.0 * spec_.tau;
  return smoothstep::s2(u(t)) / (w * w);
}

double SmoothIndicator::d3(double t) const {
  const double w = 3.0 * spec_.tau;
  return -smoothstep::s3(u(t)) * spec_.set.distance_slope(t) / (w * w * w);
}

double smooth_indicator(const IndicatorSpec& spec, double t) {
  return SmoothIndicator(spec).value(t);
}

}  // namespace mmc
