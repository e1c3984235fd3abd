#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "mmc/empirical.hpp"

using namespace mmc;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

BoundParams unit_params(double tau) { return {1000.0, 1.0, tau, 1.0}; }

EnsembleSpec gauss1(double variance) {
  return EnsembleSpec::gaussian(1, 1, variance * covariance::identity(1));
}

GapOptions small_options(std::uint64_t seed) {
  GapOptions o;
  o.samples = 20000;
  o.seed = seed;
  o.workers = 1;
  o.grid.quantile_levels = 19;
  o.grid.random_intervals = 10;
  return o;
}

}  // namespace

TEST(EmpiricalCdf, StepFunction) {
  const EmpiricalCdf f({3.0, 1.0, 2.0, 2.0});
  EXPECT_EQ(f(0.5), 0.0);
  EXPECT_EQ(f(1.0), 0.25);
  EXPECT_EQ(f(2.0), 0.75);
  EXPECT_EQ(f(10.0), 1.0);
  EXPECT_EQ(f.probability({2.0, 2.0}), 0.5);
  EXPECT_EQ(f.probability({1.5, 3.0}), 0.75);
  EXPECT_EQ(f.probability({-kInf, kInf}), 1.0);
  EXPECT_EQ(f.mean(), 2.0);
  EXPECT_THROW(EmpiricalCdf({}), EstimationError);
}

TEST(MinmaxSamples, OneByOneIsTheEntry) {
  const SampleStream s(gauss1(1.0), 3);
  const auto v = minmax_samples(s, 1000, 1);
  ASSERT_EQ(v.size(), 1000u);
  EXPECT_TRUE(std::is_sorted(v.begin(), v.end()));
  std::vector<double> raw;
  for (std::size_t k = 0; k < 1000; ++k) raw.push_back(s.sample_at(k)(0, 0));
  std::sort(raw.begin(), raw.end());
  EXPECT_EQ(v, raw);
  EXPECT_EQ(minmax_samples(s, 1000, 3), v);
}

TEST(MinmaxSamples, TwoByOneMean) {
  // min of two independent standard normals has mean -1/sqrt(pi)
  const auto v = minmax_samples(
      SampleStream(EnsembleSpec::gaussian(2, 1, covariance::identity(2)), 4), 100000);
  double m = 0, m2 = 0;
  for (double x : v) {
    m += x;
    m2 += x * x;
  }
  m /= static_cast<double>(v.size());
  const double se = std::sqrt((m2 / static_cast<double>(v.size()) - m * m) /
                              static_cast<double>(v.size()));
  EXPECT_LE(std::abs(m + 1.0 / std::sqrt(std::numbers::pi)), 3.0 * se);
}

TEST(Grid, DefaultShape) {
  std::vector<double> pooled(1000);
  for (std::size_t k = 0; k < pooled.size(); ++k) pooled[k] = static_cast<double>(k);
  const GridSpec spec{9, 5, std::nullopt};
  const auto g = default_grid(pooled, spec, 1);
  EXPECT_EQ(g.size(), 9u + 9u + 8u + 5u);
  EXPECT_EQ(g.front().lo, -kInf);
  EXPECT_EQ(default_grid(pooled, spec, 1), g);
  for (const auto& iv : g) EXPECT_LE(iv.lo, iv.hi);
}

TEST(Gaps, IntervalArithmetic) {
  const EmpiricalCdf a({0.0, 1.0, 2.0, 3.0}), b({0.5, 1.5, 2.5, 3.5});
  const auto rows = interval_gaps(a, b, {{0.0, 1.0}, {-kInf, kInf}}, 0.5);
  EXPECT_EQ(rows[0].mu_hat, 0.5);
  EXPECT_EQ(rows[0].nu_enlarged_hat, 0.5);
  EXPECT_EQ(rows[0].gap, 0.0);
  EXPECT_NEAR(rows[0].se, std::sqrt(0.25 / 4 + 0.25 / 4), 1e-15);
  EXPECT_EQ(rows[1].gap, 0.0);
  EXPECT_EQ(rows[1].se, 0.0);
  EXPECT_TRUE(gap_passes(rows, 0.0));
  GapRow bad = rows[0];
  bad.gap = 0.6;
  bad.se = 0.01;
  EXPECT_FALSE(gap_passes({bad}, 0.1));
}

TEST(DistributionalGap, IdenticalEnsembles) {
  const auto spec = EnsembleSpec::gaussian(2, 2, covariance::identity(4));
  const auto rep = distributional_gap(spec, spec, {2.0, 1.0, 0.3, 1.0}, small_options(5));
  EXPECT_TRUE(rep.gaussian);
  EXPECT_EQ(rep.bound.components.b3.value, 0.0);
  EXPECT_LE(rep.max_gap, 2.0 * rep.max_gap_se + 1e-12);
  EXPECT_TRUE(rep.pass);
  EXPECT_NEAR(rep.enlargement, rep.bound.threshold, 1e-15);

  GapOptions whole = small_options(5);
  whole.grid.explicit_intervals = std::vector<Interval>{{-kInf, kInf}};
  const auto all = distributional_gap(spec, spec, {2.0, 1.0, 0.3, 1.0}, whole);
  ASSERT_EQ(all.rows.size(), 1u);
  EXPECT_EQ(all.rows[0].gap, 0.0);
}

TEST(DistributionalGap, Deterministic) {
  const auto a = gauss1(1.0), b = gauss1(1.5);
  const auto r1 = distributional_gap(a, b, unit_params(0.05), small_options(9));
  const auto r2 = distributional_gap(a, b, unit_params(0.05), small_options(9));
  ASSERT_EQ(r1.rows.size(), r2.rows.size());
  for (std::size_t k = 0; k < r1.rows.size(); ++k) EXPECT_EQ(r1.rows[k].gap, r2.rows[k].gap);
  EXPECT_EQ(r1.rhs, r2.rhs);
  EXPECT_THROW(distributional_gap(a, EnsembleSpec::gaussian(1, 2, covariance::identity(2)),
                                  unit_params(0.05), small_options(9)),
               DomainError);
}

TEST(Calibration, TrivialScenarioNeedsNoC) {
  const auto spec = EnsembleSpec::gaussian(2, 2, covariance::identity(4));
  const auto cal = calibrate_C({{"same", spec, spec, {2.0, 1.0, 1.0, 0.0}}}, small_options(2));
  EXPECT_EQ(cal.c_star, 0.0);
  EXPECT_TRUE(cal.finite);
  EXPECT_THROW(calibrate_C({}, small_options(2)), ConstraintError);
}

TEST(Calibration, DifferentVariancesNeedPositiveC) {
  const auto cal = calibrate_C({{"var", gauss1(1.0), gauss1(2.0), unit_params(0.01)}},
                               small_options(3));
  ASSERT_TRUE(cal.finite);
  EXPECT_GT(cal.c_star, 0.0);
  EXPECT_EQ(cal.binding, "var");
  // passes at C*, fails just below it
  EXPECT_GE(cal.scenarios[0].margin, -1e-12);
  BoundParams below = unit_params(0.01);
  below.C = cal.c_star * (1 - 1e-6);
  const auto& rep = cal.reports[0];
  const auto b = coupling_rhs(1, 1, below, rep.bound.components, true);
  EXPECT_FALSE(gap_passes(rep.rows, *b.rhs_gaussian));

  // same samples and grid: a wider enlargement never raises a gap
  const auto wider = calibrate_C({{"var", gauss1(1.0), gauss1(2.0), unit_params(0.05)}},
                                 small_options(3));
  ASSERT_EQ(wider.reports[0].rows.size(), rep.rows.size());
  for (std::size_t k = 0; k < rep.rows.size(); ++k)
    EXPECT_LE(wider.reports[0].rows[k].gap, rep.rows[k].gap);
}

TEST(Calibration, MaxOverScenarios) {
  const auto spec = EnsembleSpec::gaussian(1, 1, covariance::identity(1));
  const auto cal = calibrate_C({{"same", spec, spec, unit_params(0.01)},
                                {"var", gauss1(1.0), gauss1(2.0), unit_params(0.01)}},
                               small_options(3));
  ASSERT_EQ(cal.scenarios.size(), 2u);
  EXPECT_EQ(cal.binding, "var");
  EXPECT_EQ(cal.c_star, std::max(cal.scenarios[0].required_c, cal.scenarios[1].required_c));
}
