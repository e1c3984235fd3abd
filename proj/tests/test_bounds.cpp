#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "mmc/bounds.hpp"
#include "mmc/parallel.hpp"

using namespace mmc;

namespace {

BoundComponents zero_components() {
  BoundComponents c;
  c.b1 = c.b1p = c.b2 = c.b2p = c.b3 = Estimate::exact_value(0.0);
  return c;
}

// E|Z^2 - 1| by composite Simpson on [0, 12]: 2 int |z^2 - 1| phi(z) dz.
double abs_z2_minus_one() {
  const int n = 200000;
  const double a = 0.0, b = 12.0, h = (b - a) / n;
  auto f = [](double z) {
    return 2.0 * std::abs(z * z - 1.0) * std::exp(-0.5 * z * z) / std::sqrt(2 * std::numbers::pi);
  };
  double s = f(a) + f(b);
  for (int k = 1; k < n; ++k) s += f(a + k * h) * (k % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST(Bounds, B3) {
  EXPECT_EQ(compute_B3(covariance::identity(4), covariance::identity(4)), 0.0);
  EXPECT_NEAR(compute_B3(covariance::identity(4), covariance::equicorrelated(4, 0.1)), 0.1, 1e-15);
  Eigen::VectorXd v(3);
  v << 1.0, 1.2, 1.0;
  EXPECT_NEAR(compute_B3(covariance::identity(3), covariance::diagonal(v)), 0.2, 1e-15);
  EXPECT_THROW(compute_B3(covariance::identity(3), covariance::identity(4)), DomainError);
}

TEST(Bounds, QuadratureOracle) {
  // frozen: 4 phi(1) = 0.9679...
  EXPECT_NEAR(abs_z2_minus_one(), 4.0 * std::exp(-0.5) / std::sqrt(2 * std::numbers::pi), 1e-10);
  EXPECT_NEAR(abs_z2_minus_one(), 0.9678828, 1e-7);
}

TEST(Bounds, EstimatorsOnClosedForms) {
  const auto gauss = EnsembleSpec::gaussian(1, 1, covariance::identity(1));
  const auto b1 = estimate_B1(SampleStream(gauss, 3), 10000);
  EXPECT_FALSE(b1.exact);
  EXPECT_LE(std::abs(b1.value - abs_z2_minus_one()), b1.radius);
  const auto b2 = estimate_B2(SampleStream(gauss, 4), 10000);
  EXPECT_LE(std::abs(b2.value - 2.0 * std::sqrt(2.0 / std::numbers::pi)), b2.radius);
  const auto uni = estimate_B2(SampleStream(EnsembleSpec::iid(1, 1, {Driver::uniform}), 5), 10000);
  EXPECT_LE(std::abs(uni.value - 3.0 * std::sqrt(3.0) / 4.0), uni.radius);

  const auto rad = EnsembleSpec::iid(3, 2, {Driver::rademacher});
  EXPECT_EQ(estimate_B2(SampleStream(rad, 6), 5000).value, 1.0);
  EXPECT_EQ(estimate_B1(SampleStream(EnsembleSpec::iid(1, 1, {Driver::rademacher}), 6), 5000).value,
            0.0);
}

TEST(Bounds, B1ScalesQuadratically) {
  const auto unit = EnsembleSpec::gaussian(2, 2, covariance::equicorrelated(4, 0.2));
  const auto scaled = EnsembleSpec::gaussian(2, 2, 9.0 * covariance::equicorrelated(4, 0.2));
  const auto a = estimate_B1(SampleStream(unit, 7), 20000);
  const auto b = estimate_B1(SampleStream(scaled, 7), 20000);
  EXPECT_NEAR(b.value, 9.0 * a.value, 1e-9 * b.value);
}

TEST(Bounds, WorkerCountDoesNotChangeEstimates) {
  const SampleStream s(EnsembleSpec::iid(2, 3, {Driver::centered_exponential}), 8);
  const auto one = estimate_B2(s, 30000, 1);
  const auto four = estimate_B2(s, 30000, 4);
  EXPECT_EQ(one.value, four.value);
  EXPECT_EQ(one.radius, four.radius);
}

TEST(Bounds, CouplingRhsArithmetic) {
  const auto zero = coupling_rhs(1, 1, {1, 1, 1, 1}, zero_components(), true);
  // 2 e^{-1.5} / (1 - 2 e^{-1.5})
  EXPECT_NEAR(zero.rhs_general, 0.8059027313, 1e-10);
  EXPECT_NEAR(*zero.rhs_gaussian, zero.eps.epsilon / (1 - zero.eps.epsilon), 1e-15);

  auto comps = zero_components();
  comps.b3 = Estimate::exact_value(0.1);
  const auto g = coupling_rhs(1, 1, {1, 1, 1, 1}, comps, true);
  EXPECT_NEAR(*g.rhs_gaussian, 1.1671, 1e-4);

  const auto t = coupling_rhs(2, 3, {1, 1, 1, 1}, zero_components(), false);
  EXPECT_NEAR(t.threshold, 2.0 * std::log(3.0) + 3.0, 1e-14);
  EXPECT_NEAR(t.threshold, 5.1972, 1e-4);
  EXPECT_FALSE(t.rhs_gaussian);

  EXPECT_THROW(coupling_rhs(2, 2, {1, 1, 1, -1}, zero_components(), false), ConstraintError);
  EXPECT_THROW(coupling_rhs(2, 2, {1, 1, 0.5, 1}, zero_components(), false), ConstraintError);
}

TEST(Bounds, RhsMonotone) {
  BoundComponents c = zero_components();
  c.b1 = c.b1p = Estimate::exact_value(0.5);
  c.b2 = c.b2p = Estimate::exact_value(1.2);
  c.b3 = Estimate::exact_value(0.05);
  const BoundParams p{2.0, 1.0, 1.0, 0.5};
  const auto base = coupling_rhs(3, 3, p, c, true);
  EXPECT_LE(*base.rhs_gaussian, base.rhs_general);
  BoundParams bigger_c = p;
  bigger_c.C = 0.6;
  EXPECT_GT(coupling_rhs(3, 3, bigger_c, c, false).rhs_general, base.rhs_general);
  BoundComponents bigger_b = c;
  bigger_b.b2.value = 1.3;
  EXPECT_GT(coupling_rhs(3, 3, p, bigger_b, false).rhs_general, base.rhs_general);
}

TEST(Bounds, LogNmParameters) {
  const auto sp = log_nm_parameters(4, 4, 1.0);
  EXPECT_NEAR(sp.beta(), std::log(16.0), 1e-15);
  EXPECT_NEAR(sp.beta(), 2.7726, 1e-4);
  EXPECT_EQ(sp.delta(), 1.0);
  EXPECT_NEAR(log_nm_parameters(4, 4, 2.0).beta(), sp.beta() / 2, 1e-15);
  EXPECT_THROW(log_nm_parameters(1, 1, 1.0), ConstraintError);
}

TEST(Bounds, OptimizerDominatesLogNmPoint) {
  BoundComponents c = zero_components();
  c.b3 = Estimate::exact_value(0.1);
  const double cap = 10.0;
  const auto opt = optimize_parameters(c, 8, 8, 1.0, cap, true);
  ASSERT_TRUE(opt.feasible);
  // log-nm point with tau chosen so that its threshold equals the cap
  const double lam_tau = std::log(8.0) / std::log(64.0);  // lambda * tau
  const double tau = cap / (2 * lam_tau + 3);
  const auto sp = log_nm_parameters(8, 8, tau);
  const auto log_nm = coupling_rhs(8, 8, {sp.beta(), sp.delta(), tau, 1.0}, c, true);
  EXPECT_NEAR(log_nm.threshold, cap, 1e-12);
  EXPECT_LE(opt.rhs, *log_nm.rhs_gaussian);
  const auto check = coupling_rhs(8, 8, {opt.beta, opt.delta, opt.tau, 1.0}, c, true);
  EXPECT_LE(check.threshold, cap + 1e-9);
  EXPECT_NEAR(*check.rhs_gaussian, opt.rhs, 1e-12);
}

TEST(Bounds, OptimizerMonotoneAndInfeasible) {
  BoundComponents c = zero_components();
  c.b1 = c.b1p = Estimate::exact_value(0.3);
  c.b2 = c.b2p = Estimate::exact_value(0.8);
  c.b3 = Estimate::exact_value(0.05);
  const auto base = optimize_parameters(c, 4, 4, 1.0, 8.0, false);
  BoundComponents ten = c;
  for (Estimate* e : {&ten.b1, &ten.b1p, &ten.b2, &ten.b2p, &ten.b3}) e->value *= 10;
  EXPECT_GT(optimize_parameters(ten, 4, 4, 1.0, 8.0, false).rhs, base.rhs);

  const auto none = optimize_parameters(c, 4, 4, 1.0, 1e-5, false);
  EXPECT_FALSE(none.feasible);
  EXPECT_GT(none.min_threshold, 1e-5);
}

TEST(Bounds, OptimizerWithZeroComponentsUsesCap) {
  const auto opt = optimize_parameters(zero_components(), 4, 4, 1.0, 6.0, true);
  ASSERT_TRUE(opt.feasible);
  const auto at = coupling_rhs(4, 4, {opt.beta, opt.delta, opt.tau, 1.0}, zero_components(), true);
  EXPECT_NEAR(at.threshold, 6.0, 1e-9);
  EXPECT_NEAR(opt.rhs, at.eps.epsilon / (1 - at.eps.epsilon), 1e-15);
}
