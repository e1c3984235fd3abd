#include "mmc/bounds.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "mmc/parallel.hpp"

namespace mmc {

std::string Estimate::provenance() const {
  if (exact) return "exact";
  return "monte-carlo(N=" + std::to_string(samples) + ", seed=" + std::to_string(seed) +
         ")";
}

double compute_B3(const EntryCovariance& covA, const EntryCovariance& covB) {
  if (covA.rows() != covB.rows() || covA.cols() != covB.cols())
    throw DomainError("covariance shapes differ");
  if (covA.size() == 0) return 0.0;
  return (covA - covB).cwiseAbs().maxCoeff();
}

namespace {

template <typename Fn>
Estimate mc_estimate(const SampleStream& stream, std::size_t samples, unsigned workers,
                     Fn&& per_sample) {
  if (samples < 2) throw EstimationError("need at least two samples");
  const Moments mom = parallel_moments(samples, workers, [&](std::size_t k) {
    return per_sample(stream.sample_flat_at(k));
  });
  if (!std::isfinite(mom.mean) || !std::isfinite(mom.m2))
    throw EstimationError("non-finite Monte Carlo estimate");
  return {mom.mean, 3.0 * mom.std_error(), false, samples, stream.seed()};
}

}  // namespace

Estimate estimate_B1(const SampleStream& stream, std::size_t samples, unsigned workers) {
  const EntryCovariance cov = exact_covariance(stream.spec());
  return mc_estimate(stream, samples, workers, [&](const Eigen::VectorXd& v) {
    double worst = 0.0;
    for (Eigen::Index a = 0; a < v.size(); ++a)
      for (Eigen::Index b = a; b < v.size(); ++b)
        worst = std::max(worst, std::abs(v(a) * v(b) - cov(a, b)));
    return worst;
  });
}

Estimate estimate_B2(const SampleStream& stream, std::size_t samples, unsigned workers) {
  return mc_estimate(stream, samples, workers, [](const Eigen::VectorXd& v) {
    const double top = v.cwiseAbs().maxCoeff();
    return top * top * top;
  });
}

double smoothing_lambda(Eigen::Index n, Eigen::Index m, const SmoothingParams& sp) {
  return std::max(std::log(static_cast<double>(n)) / (sp.beta() * sp.delta()),
                  std::log(static_cast<double>(m)) / sp.beta());
}

double coupling_threshold(Eigen::Index n, Eigen::Index m, const BoundParams& p) {
  return 2.0 * smoothing_lambda(n, m, p.smoothing()) + 3.0 * p.tau;
}

BoundReport coupling_rhs(Eigen::Index n, Eigen::Index m, const BoundParams& params,
                         const BoundComponents& comps, bool gaussian) {
  if (n < 1 || m < 1) throw DomainError("shape must be at least 1x1");
  if (!(params.C >= 0.0) || !std::isfinite(params.C))
    throw ConstraintError("C must be nonnegative and finite");
  const SmoothingParams sp = params.smoothing();

  BoundReport r;
  r.n = n;
  r.m = m;
  r.params = params;
  r.components = comps;
  r.eps = epsilon(sp, params.tau);
  r.lambda = smoothing_lambda(n, m, sp);
  r.threshold = 2.0 * r.lambda + 3.0 * params.tau;

  const double phi = sp.phi();
  const double scale = params.C * phi / params.tau;
  const double e = r.eps.epsilon;
  const double general_sum = comps.b1.value + comps.b1p.value + comps.b3.value +
                             phi * (comps.b2.value + comps.b2p.value);
  r.rhs_general = (e + scale * general_sum) / (1.0 - e);
  if (gaussian) r.rhs_gaussian = (e + scale * comps.b3.value) / (1.0 - e);
  return r;
}

SmoothingParams log_nm_parameters(Eigen::Index n, Eigen::Index m, double tau) {
  if (!(tau > 0.0)) throw ConstraintError("tau must be positive");
  if (n * m < 2) throw ConstraintError("remark1 parameters need n*m >= 2 (log 1 = 0)");
  return {std::log(static_cast<double>(n * m)) / tau, 1.0};
}

namespace {

struct Objective {
  const BoundComponents& comps;
  Eigen::Index n, m;
  double C, cap;
  bool gaussian;
  std::size_t evaluations = 0;
  double min_threshold = std::numeric_limits<double>::infinity();

  // tau on the cap; +inf when infeasible.
  double tau_for(double beta, double delta) {
    const double lam = smoothing_lambda(n, m, SmoothingParams(beta, delta));
    min_threshold = std::min(min_threshold, 2.0 * lam + 3.0 / (beta * (1.0 + delta)));
    return (cap - 2.0 * lam) / 3.0;
  }

  double operator()(double log_beta, double log_delta) {
    ++evaluations;
    const double beta = std::exp(log_beta), delta = std::exp(log_delta);
    if (!std::isfinite(beta) || !std::isfinite(delta) || beta <= 0.0 || delta <= 0.0)
      return std::numeric_limits<double>::infinity();
    const double tau = tau_for(beta, delta);
    if (!(tau * beta * (1.0 + delta) > 1.0)) return std::numeric_limits<double>::infinity();
    const auto rep = coupling_rhs(n, m, {beta, delta, tau, C}, comps, gaussian);
    return gaussian ? *rep.rhs_gaussian : rep.rhs_general;
  }
};

}  // namespace

OptimizedParams optimize_parameters(const BoundComponents& comps, Eigen::Index n,
                                    Eigen::Index m, double C, double threshold_cap,
                                    bool gaussian) {
  if (!(threshold_cap > 0.0)) throw ConstraintError("threshold cap must be positive");
  Objective obj{comps, n, m, C, threshold_cap, gaussian};

  // log-grid: beta in [1e-2, 1e4], delta in [1e-2, 1e2] (includes delta = 1)
  using Point = std::array<double, 2>;
  Point best{0.0, 0.0};
  double best_val = std::numeric_limits<double>::infinity();
  constexpr double kLn10 = 2.302585092994046;
  for (int bi = 0; bi <= 36; ++bi)
    for (int di = 0; di <= 24; ++di) {
      const Point pt{(-2.0 + bi / 6.0) * kLn10, (-2.0 + di / 6.0) * kLn10};
      const double v = obj(pt[0], pt[1]);
      if (v < best_val) {
        best_val = v;
        best = pt;
      }
    }

  OptimizedParams out;
  if (!std::isfinite(best_val)) {
    out.feasible = false;
    out.min_threshold = obj.min_threshold;
    out.evaluations = obj.evaluations;
    return out;
  }

  // Nelder-Mead refinement around the best grid point.
  std::array<Point, 3> simplex{best, Point{best[0] + 0.4, best[1]},
                               Point{best[0], best[1] + 0.4}};
  std::array<double, 3> vals{};
  for (int k = 0; k < 3; ++k) vals[k] = obj(simplex[k][0], simplex[k][1]);
  auto order = [&] {
    std::array<int, 3> idx{0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return vals[a] < vals[b]; });
    std::array<Point, 3> s{simplex[idx[0]], simplex[idx[1]], simplex[idx[2]]};
    std::array<double, 3> v{vals[idx[0]], vals[idx[1]], vals[idx[2]]};
    simplex = s;
    vals = v;
  };
  for (int it = 0; it < 400; ++it) {
    order();
    if (std::abs(vals[2] - vals[0]) <= 1e-14 * (1.0 + std::abs(vals[0])) &&
        std::isfinite(vals[2]))
      break;
    const Point centroid{(simplex[0][0] + simplex[1][0]) / 2,
                         (simplex[0][1] + simplex[1][1]) / 2};
    auto along = [&](double t) {
      return Point{centroid[0] + t * (simplex[2][0] - centroid[0]),
                   centroid[1] + t * (simplex[2][1] - centroid[1])};
    };
    const Point refl = along(-1.0);
    const double fr = obj(refl[0], refl[1]);
    if (fr < vals[0]) {
      const Point exp_pt = along(-2.0);
      const double fe = obj(exp_pt[0], exp_pt[1]);
      if (fe < fr) {
        simplex[2] = exp_pt;
        vals[2] = fe;
      } else {
        simplex[2] = refl;
        vals[2] = fr;
      }
    } else if (fr < vals[1]) {
      simplex[2] = refl;
      vals[2] = fr;
    } else {
      const Point con = along(fr < vals[2] ? -0.5 : 0.5);
      const double fc = obj(con[0], con[1]);
      if (fc < std::min(fr, vals[2])) {
        simplex[2] = con;
        vals[2] = fc;
      } else {
        for (int k = 1; k < 3; ++k) {
          simplex[k] = {(simplex[k][0] + simplex[0][0]) / 2,
                        (simplex[k][1] + simplex[0][1]) / 2};
          vals[k] = obj(simplex[k][0], simplex[k][1]);
        }
      }
    }
  }
  order();
  if (vals[0] < best_val) {
    best_val = vals[0];
    best = simplex[0];
  }

  out.feasible = true;
  out.beta = std::exp(best[0]);
  out.delta = std::exp(best[1]);
  out.tau = obj.tau_for(out.beta, out.delta);
  out.rhs = best_val;
  out.min_threshold = obj.min_threshold;
  out.evaluations = obj.evaluations;
  return out;
}

}  // namespace mmc
