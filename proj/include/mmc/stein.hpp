#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mmc/ensembles.hpp"
#include "mmc/indicator.hpp"
#include "mmc/smooth_minmax.hpp"

namespace mmc {

/// Value and first two derivatives of a test function at a point.
struct Jet {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

/// A smooth function of the flattened n x m matrix. Analytic derivative
/// accessors are optional; missing ones fall back to central differences
/// (steps 1e-5, 1e-4, 1e-3 for orders 1, 2, 3).
struct SmoothTestFunction {
  std::string name;
  Eigen::Index n = 1;
  Eigen::Index m = 1;
  std::function<double(const Eigen::VectorXd&)> value;
  /// order 1 fills grad, order 2 fills grad and hess.
  std::function<Jet(const Eigen::VectorXd&, int order)> jet;
  /// D^3 f(x)[v, v, v].
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)> third_cubic;
  /// Declared bounds on sum |D^k f| for k = 1, 2, 3.
  std::array<double, 3> declared{0.0, 0.0, 0.0};

  Eigen::Index dim() const { return n * m; }
  bool analytic() const { return static_cast<bool>(jet); }

  Jet eval(const Eigen::VectorXd& x, int order) const;
  double third(const Eigen::VectorXd& x, const Eigen::VectorXd& v) const;
  /// Finite-difference jet regardless of analytic availability.
  Jet eval_fd(const Eigen::VectorXd& x, int order) const;
  double third_fd(const Eigen::VectorXd& x, const Eigen::VectorXd& v) const;
};

namespace test_functions {
SmoothTestFunction constant(Eigen::Index n, Eigen::Index m, double c);
SmoothTestFunction linear(Eigen::Index n, Eigen::Index m, Eigen::VectorXd a);
/// f(x) = x^T A x with A symmetric.
SmoothTestFunction quadratic(Eigen::Index n, Eigen::Index m, Eigen::MatrixXd A);
/// f = g o F with F the smoothed min-max and g the smooth indicator.
SmoothTestFunction composed(Eigen::Index n, Eigen::Index m, const SmoothingParams& sp,
                            const IndicatorSpec& indicator,
                            std::size_t limit = kDefaultMaterializeLimit);
}  // namespace test_functions

struct QuadratureBudget {
  int t_nodes = 32;
  std::size_t mc_samples = 200000;
  std::uint64_t seed = 1;
};

/// Gauss-Legendre nodes and weights on (a, b).
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int nodes, double a,
                                                                   double b);

/// Centered Gaussian draws (rows) with antithetic pairing and moment
/// matching: the sample mean is zero and the sample second-moment matrix
/// equals `cov` up to rounding. `samples` is rounded up to an even count.
Eigen::MatrixXd moment_matched_gaussians(const EntryCovariance& cov, std::size_t samples,
                                         std::uint64_t seed);

struct StatEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Solution of the Gaussian Stein equation,
///   h(x) = int_0^1 1/(2t) E[f(sqrt(t) x + sqrt(1-t) Y) - f(Y)] dt,
/// evaluated with t = sin^2(theta), a Gauss-Legendre rule in theta, and a
/// moment-matched Gaussian bank shared across nodes.
class SteinSolution {
 public:
  SteinSolution(SmoothTestFunction f, const EntryCovariance& cov, QuadratureBudget qb);

  StatEstimate h(const Eigen::VectorXd& x) const;
  /// Gradient and Hessian of h, differentiating under the integral with the
  /// analytic derivatives of f.
  Jet derivatives(const Eigen::VectorXd& x) const;
  /// Same, by central differences of h() on the shared bank (step 1e-3).
  Jet derivatives_fd(const Eigen::VectorXd& x, double step = 1e-3) const;
  /// Mean of f over the bank.
  double mean_f() const { return mean_f_; }

  const EntryCovariance& covariance() const { return cov_; }

 private:
  SmoothTestFunction f_;
  EntryCovariance cov_;
  QuadratureBudget qb_;
  Eigen::MatrixXd bank_;
  std::vector<double> f_bank_;
  std::vector<double> theta_, weight_;
  double mean_f_ = 0.0;
};

StatEstimate stein_h(const Eigen::VectorXd& x, const SmoothTestFunction& f,
                     const EntryCovariance& cov, const QuadratureBudget& qb);

struct SteinResidual {
  double lhs = 0.0;             // f(x) - E f(Y)
  double rhs_covariance = 0.0;  // x . grad h - sum cov_ab d2h_ab
  double rhs_outer = 0.0;       // x . grad h - sum x_a x_b d2h_ab
  double residual_covariance = 0.0;
  double residual_outer = 0.0;
  double tolerance = 0.0;
  bool covariance_passes = false;
  bool outer_passes = false;
};

enum class HDerivatives { analytic, finite_difference };

SteinResidual stein_identity_residual(const Eigen::VectorXd& x, const SmoothTestFunction& f,
                                      const EntryCovariance& cov, const QuadratureBudget& qb,
                                      double tolerance,
                                      HDerivatives mode = HDerivatives::analytic);

/// One Monte Carlo comparison against an expected value.
struct MomentCheck {
  std::string name;
  double estimate = 0.0;
  double expected = 0.0;
  double std_error = 0.0;
  bool pass = false;  // |estimate - expected| <= 3 SE (+1e-12)
};

struct ExchangeablePairReport {
  std::vector<MomentCheck> checks;
  bool all_pass = true;
};

/// Conditional moments of Delta = Xbar - X at fixed probes X = x with Xbar
/// resampled: E[Delta | x] = -x and E[Delta Delta^T | x] = Sigma + x x^T.
/// Probes are the zero matrix followed by `extra_probes` draws from the
/// stream.
ExchangeablePairReport exchangeable_pair_moments(const SampleStream& stream,
                                                 std::size_t samples,
                                                 int extra_probes = 1);

struct InterpolationPoint {
  double t = 0.0;
  double lhs = 0.0;  // d/dt E p(zeta(t)), central difference
  double rhs = 0.0;  // 1/2 sum (SigmaXi - SigmaEta) E[d2 p(zeta(t))]
  double std_error = 0.0;
  bool pass = false;
};

struct InterpolationReport {
  std::vector<InterpolationPoint> points;
  bool all_pass = true;
};

/// Smart-path check along zeta(t) = sqrt(t) xi + sqrt(1-t) eta.
InterpolationReport gaussian_interpolation_check(const SmoothTestFunction& p,
                                                 const EntryCovariance& cov_xi,
                                                 const EntryCovariance& cov_eta,
                                                 const std::vector<double>& t_grid,
                                                 std::size_t samples, std::uint64_t seed,
                                                 double exact_tolerance = 1e-10);

struct TaylorRemainderReport {
  StatEstimate remainder;  // E[R3]
  StatEstimate b2;         // E max |X|^3
  double scale = 0.0;      // beta^2 (1+delta)^2 / tau
  double bound = 0.0;      // scale * b2
  double ratio = 0.0;      // |E R3| / bound (0 when bound is 0)
  StatEstimate delta_cubed_direct;     // E max |Xbar - X|^3
  StatEstimate delta_cubed_reflected;  // E max |Xbar + X|^3
  double symmetry_gap_se = 0.0;        // SE of the paired difference
  bool symmetry_agrees = false;
};

/// Monte Carlo estimate of the third-order Taylor remainder of h along
/// the exchangeable pair, from its integral form with uniform theta. The
/// Gaussian in h has the stream's exact covariance.
TaylorRemainderReport taylor_remainder_probe(const SampleStream& stream,
                                             const SmoothTestFunction& f, double scale,
                                             std::size_t samples);

TaylorRemainderReport taylor_remainder_probe(const SampleStream& stream,
                                             const SmoothingParams& sp,
                                             const IndicatorSpec& indicator,
                                             std::size_t samples);

}  // namespace mmc
