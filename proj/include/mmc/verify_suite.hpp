#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "mmc/indicator.hpp"
#include "mmc/report.hpp"
#include "mmc/smooth_minmax.hpp"

namespace mmc {

/// Max-norm relative errors of the analytic derivatives against central
/// differences (of F, of the gradient, of the Hessian respectively).
struct FdErrors {
  double gradient = 0.0;
  double hessian = 0.0;
  double third = 0.0;
};

FdErrors derivative_fd_errors(const MatrixSample& x, const SmoothingParams& sp);

struct SandwichStats {
  std::size_t checked = 0;
  std::size_t violations = 0;
  double worst_excess = 0.0;  // largest amount by which the envelope is exceeded
};

/// minmax - log n/(beta delta) <= F <= minmax + log m/beta on `per_shape`
/// random matrices for every shape up to max_n x max_m and every params
/// pair. Entry scales vary over three decades.
SandwichStats sandwich_stats(const std::vector<SmoothingParams>& params, int max_n, int max_m,
                             std::size_t per_shape, std::uint64_t seed, double slack = 1e-9);

struct TensorSumStats {
  std::size_t cases = 0;
  double pi_sum_error = 0.0;     // max |sum pi - 1|
  double omega_ratio = 0.0;      // max sum|omega| / (2 (1 + delta))
  double gamma_ratio = 0.0;      // max sum|gamma| / (6 (1 + delta)^2)
  double closed_form_error = 0.0;  // max |omega_abs_sum - brute force|
};

/// Brute force over every shape with n*m <= max_dim.
TensorSumStats tensor_sum_stats(std::size_t max_dim, std::size_t draws, std::uint64_t seed);

struct IndicatorStats {
  std::size_t points = 0;
  std::size_t violations = 0;  // of 1_Q <= g <= 1_{Q^{3 tau}}
  double d1 = 0.0;             // tau   * max |g'|
  double d2 = 0.0;             // tau^2 * max |g''|
  double d3 = 0.0;             // tau^3 * max |g'''|
};

IndicatorStats indicator_stats(const IndicatorSpec& spec, std::size_t points);

/// Union of 1-4 random intervals inside [-3, 3].
IntervalSet random_interval_union(std::uint64_t seed);

struct VerifyOptions {
  std::uint64_t seed = 1;
  unsigned workers = 0;
  int t_nodes = 32;
  std::size_t stein_samples = 200000;
  std::size_t samples = 100000;
  /// Extra (beta, delta, tau) from the config, checked alongside the defaults.
  std::optional<std::array<double, 3>> params;
};

std::vector<CheckResult> run_verify_suite(const VerifyOptions& options);

}  // namespace mmc
