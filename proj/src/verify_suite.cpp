#include "mmc/verify_suite.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "mmc/bounds.hpp"
#include "mmc/ensembles.hpp"
#include "mmc/parallel.hpp"
#include "mmc/stein.hpp"
#include "mmc/strassen.hpp"

namespace mmc {

FdErrors derivative_fd_errors(const MatrixSample& x, const SmoothingParams& sp) {
  const Eigen::Index n = x.rows(), m = x.cols(), d = n * m;
  const double beta = sp.beta();
  const auto t = derivative_tensors(x, sp, static_cast<std::size_t>(d));
  const Eigen::VectorXd pi = flatten(gradient(x, sp));
  auto shifted = [&](Eigen::Index a, double h) {
    Eigen::VectorXd v = flatten(x);
    v(a) += h;
    return unflatten(v, n, m);
  };

  Eigen::VectorXd g_fd(d);
  Eigen::MatrixXd h_fd(d, d);
  std::vector<double> t_fd(static_cast<std::size_t>(d * d * d));
  constexpr double h1 = 1e-5, h2 = 1e-5, h3 = 1e-4;
  for (Eigen::Index c = 0; c < d; ++c) {
    g_fd(c) = (smooth_minmax_value(shifted(c, h1), sp) -
               smooth_minmax_value(shifted(c, -h1), sp)) / (2 * h1);
    h_fd.col(c) = (flatten(gradient(shifted(c, h2), sp)) -
                   flatten(gradient(shifted(c, -h2), sp))) / (2 * h2);
    const Eigen::MatrixXd dh = beta * (omega_matrix(shifted(c, h3), sp) -
                                       omega_matrix(shifted(c, -h3), sp)) / (2 * h3);
    for (Eigen::Index a = 0; a < d; ++a)
      for (Eigen::Index b = 0; b < d; ++b)
        t_fd[static_cast<std::size_t>((a * d + b) * d + c)] = dh(a, b);
  }

  // relative to max |exact|, floored at 1e-6 beta^(k-1): the Hessian and
  // third tensor of a 1x1 input vanish and are only rounding noise
  FdErrors e;
  e.gradient = (g_fd - pi).cwiseAbs().maxCoeff() / pi.cwiseAbs().maxCoeff();
  const Eigen::MatrixXd hess = beta * t.omega;
  e.hessian =
      (h_fd - hess).cwiseAbs().maxCoeff() / std::max(hess.cwiseAbs().maxCoeff(), 1e-6 * beta);
  double diff = 0.0, scale = 1e-6 * beta * beta;
  for (std::size_t k = 0; k < t_fd.size(); ++k) {
    const double exact = beta * beta * t.gamma[k];
    diff = std::max(diff, std::abs(t_fd[k] - exact));
    scale = std::max(scale, std::abs(exact));
  }
  e.third = diff / scale;
  return e;
}

SandwichStats sandwich_stats(const std::vector<SmoothingParams>& params, int max_n, int max_m,
                             std::size_t per_shape, std::uint64_t seed, double slack) {
  SandwichStats st;
  for (int n = 1; n <= max_n; ++n)
    for (int m = 1; m <= max_m; ++m) {
      std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(n * 64 + m)));
      std::normal_distribution<double> normal;
      for (std::size_t k = 0; k < per_shape; ++k) {
        const double scale = std::pow(10.0, static_cast<double>(k % 3) - 1.0);
        MatrixSample x(n, m);
        for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = scale * normal(rng);
        const double mm = exact_minmax(x);
        const double tol = slack * std::max(1.0, std::abs(mm));
        for (const auto& sp : params) {
          const double F = smooth_minmax_value(x, sp);
          const double lo = mm - std::log(static_cast<double>(n)) / (sp.beta() * sp.delta());
          const double hi = mm + std::log(static_cast<double>(m)) / sp.beta();
          const double excess = std::max(lo - F, F - hi);
          ++st.checked;
          if (excess > tol) ++st.violations;
          st.worst_excess = std::max(st.worst_excess, excess);
        }
      }
    }
  return st;
}

TensorSumStats tensor_sum_stats(std::size_t max_dim, std::size_t draws, std::uint64_t seed) {
  TensorSumStats st;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (std::size_t n = 1; n <= max_dim; ++n)
    for (std::size_t m = 1; n * m <= max_dim; ++m)
      for (double beta : {0.5, 3.0})
        for (double delta : {0.2, 1.0, 5.0})
          for (std::size_t k = 0; k < draws; ++k) {
            const SmoothingParams sp(beta, delta);
            MatrixSample x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
            for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = normal(rng);
            const auto t = derivative_tensors(x, sp, max_dim);
            const double pi_sum = gradient(x, sp).sum();
            const double omega_brute = t.omega.cwiseAbs().sum();
            double gamma_sum = 0.0;
            for (double g : t.gamma) gamma_sum += std::abs(g);
            ++st.cases;
            st.pi_sum_error = std::max(st.pi_sum_error, std::abs(pi_sum - 1.0));
            st.omega_ratio = std::max(st.omega_ratio, omega_brute / omega_sum_bound(sp));
            st.gamma_ratio = std::max(st.gamma_ratio, gamma_sum / gamma_sum_bound(sp));
            st.closed_form_error = std::max(st.closed_form_error,
                                            std::abs(omega_abs_sum(x, sp) - omega_brute));
          }
  return st;
}

IndicatorStats indicator_stats(const IndicatorSpec& spec, std::size_t points) {
  if (spec.set.empty()) throw DomainError("indicator set is empty");
  const SmoothIndicator g(spec);
  const IntervalSet outer = enlarge(spec.set, 3.0 * spec.tau);
  const double lo = spec.set.parts().front().lo - 3.0 * spec.tau - 1.0;
  const double hi = spec.set.parts().back().hi + 3.0 * spec.tau + 1.0;
  const double tau = spec.tau;

  IndicatorStats st;
  st.points = points;
  for (std::size_t k = 0; k < points; ++k) {
    const double t = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
    const double v = g(t);
    const double inner = spec.set.contains(t) ? 1.0 : 0.0;
    const double upper = outer.contains(t) ? 1.0 : 0.0;
    if (v < inner || v > upper) ++st.violations;
    st.d1 = std::max(st.d1, tau * std::abs(g.d1(t)));
    st.d2 = std::max(st.d2, tau * tau * std::abs(g.d2(t)));
    st.d3 = std::max(st.d3, tau * tau * tau * std::abs(g.d3(t)));
  }
  return st;
}

IntervalSet random_interval_union(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> count(1, 4);
  std::uniform_real_distribution<double> pos(-3.0, 3.0), len(0.0, 1.5);
  std::vector<Interval> parts;
  const int k = count(rng);
  for (int i = 0; i < k; ++i) {
    const double a = pos(rng);
    parts.push_back({a, a + len(rng)});
  }
  return IntervalSet(std::move(parts));
}

namespace {

CheckResult at_most(std::string name, double measured, double bound) {
  return {std::move(name), measured, bound, measured <= bound};
}

// Worst |estimate - expected| in units of standard errors; 0/0 counts as 0.
double worst_z(const std::vector<MomentCheck>& checks) {
  double z = 0.0;
  for (const auto& c : checks) {
    const double diff = std::abs(c.estimate - c.expected);
    z = std::max(z, diff <= 1e-12 ? 0.0 : diff / c.std_error);
  }
  return z;
}

// Atoms on a quarter grid, weights in 1/64 units, so every sum is exact.
DiscreteDistribution dyadic_distribution(std::mt19937_64& rng, int max_atoms) {
  std::uniform_int_distribution<int> count(1, max_atoms), pos(-12, 12);
  const int k = count(rng);
  std::vector<double> atoms(static_cast<std::size_t>(k));
  for (auto& a : atoms) a = pos(rng) / 4.0;
  std::vector<int> units(static_cast<std::size_t>(k), 1);
  std::uniform_int_distribution<int> pick(0, k - 1);
  for (int r = k; r < 64; ++r) ++units[static_cast<std::size_t>(pick(rng))];
  std::vector<double> weights;
  for (int u : units) weights.push_back(u / 64.0);
  return DiscreteDistribution::make(std::move(atoms), std::move(weights));
}

}  // namespace

std::vector<CheckResult> run_verify_suite(const VerifyOptions& o) {
  std::vector<CheckResult> out;

  // smoothed min-max
  std::vector<SmoothingParams> grid;
  for (double b : {0.5, 2.0, 10.0})
    for (double d : {0.3, 1.0, 4.0}) grid.emplace_back(b, d);
  const auto sw = sandwich_stats(grid, 8, 8, 200, derive_seed(o.seed, 11));
  out.push_back(at_most("smooth_minmax.sandwich.violations", static_cast<double>(sw.violations), 0));
  const auto sw4 = sandwich_stats({SmoothingParams(5.0, 3.0)}, 4, 4, 100, derive_seed(o.seed, 12));
  out.push_back(at_most("smooth_minmax.sandwich.beta5_delta3.violations",
                        static_cast<double>(sw4.violations), 0));
  if (o.params) {
    const auto swc = sandwich_stats({SmoothingParams((*o.params)[0], (*o.params)[1])}, 8, 8, 50,
                                    derive_seed(o.seed, 13));
    out.push_back(at_most("smooth_minmax.sandwich.config_params.violations",
                          static_cast<double>(swc.violations), 0));
  }

  {
    std::mt19937_64 rng(derive_seed(o.seed, 14));
    std::normal_distribution<double> normal;
    FdErrors worst;
    for (auto [n, m] : {std::pair{1, 2}, {2, 2}, {2, 3}, {3, 2}})
      for (auto [b, d] : {std::pair{1.0, 1.0}, {2.5, 0.5}, {0.7, 3.0}}) {
        MatrixSample x(n, m);
        for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = normal(rng);
        const auto e = derivative_fd_errors(x, SmoothingParams(b, d));
        worst.gradient = std::max(worst.gradient, e.gradient);
        worst.hessian = std::max(worst.hessian, e.hessian);
        worst.third = std::max(worst.third, e.third);
      }
    out.push_back(at_most("smooth_minmax.fd.gradient_rel_error", worst.gradient, 1e-6));
    out.push_back(at_most("smooth_minmax.fd.hessian_rel_error", worst.hessian, 1e-5));
    out.push_back(at_most("smooth_minmax.fd.third_rel_error", worst.third, 1e-4));
  }

  const auto ts = tensor_sum_stats(12, 2, derive_seed(o.seed, 15));
  out.push_back(at_most("smooth_minmax.pi_sum_error", ts.pi_sum_error, 1e-12));
  out.push_back(at_most("smooth_minmax.omega_sum_over_bound", ts.omega_ratio, 1.0));
  out.push_back(at_most("smooth_minmax.gamma_sum_over_bound", ts.gamma_ratio, 1.0));
  out.push_back(at_most("smooth_minmax.omega_closed_form_error", ts.closed_form_error, 1e-12));

  // indicator smoothing
  out.push_back(at_most("indicator.epsilon_111_error",
                        std::abs(epsilon(SmoothingParams(1, 1), 1).epsilon - 0.4462603), 1e-7));
  {
    double worst = 0.0;
    for (auto [n, m] : {std::pair{2, 2}, {4, 4}, {8, 16}}) {
      const double L = std::log(static_cast<double>(n * m));
      const double closed = 2.0 * std::sqrt(std::exp(1.0)) * L * std::pow(n * m, -2.0 * L);
      const double eps = epsilon(log_nm_parameters(n, m, 1.0), 1.0).epsilon;
      worst = std::max(worst, std::abs(eps - closed) / closed);
    }
    out.push_back(at_most("indicator.log_nm_closed_form_rel_error", worst, 1e-12));
  }
  {
    IndicatorStats worst;
    std::vector<double> taus{0.05, 0.2, 1.0};
    if (o.params) taus.push_back((*o.params)[2]);
    for (int k = 0; k < 20; ++k)
      for (double tau : taus) {
        const auto st = indicator_stats({tau, random_interval_union(derive_seed(o.seed, 100 + k))},
                                        10000);
        worst.violations += st.violations;
        worst.d1 = std::max(worst.d1, st.d1);
        worst.d2 = std::max(worst.d2, st.d2);
        worst.d3 = std::max(worst.d3, st.d3);
      }
    out.push_back(at_most("indicator.sandwich.violations", static_cast<double>(worst.violations), 0));
    out.push_back(at_most("indicator.tau_d1", worst.d1, 1.0));
    out.push_back(at_most("indicator.tau2_d2", worst.d2, 0.7));
    out.push_back(at_most("indicator.tau3_d3", worst.d3, 2.3));
  }

  // Stein identity
  {
    const QuadratureBudget small{o.t_nodes, 2000, derive_seed(o.seed, 20)};
    const EntryCovariance one = covariance::identity(1);
    Eigen::VectorXd x(1);
    x << 0.7;
    Eigen::VectorXd a(1);
    a << 1.3;
    Eigen::MatrixXd A(1, 1);
    A << 0.8;
    const auto lin = stein_identity_residual(x, test_functions::linear(1, 1, a), one, small, 1e-10);
    const auto quad =
        stein_identity_residual(x, test_functions::quadratic(1, 1, A), one, small, 1e-10);
    out.push_back(at_most("stein.linear_1x1.residual", lin.residual_covariance, 1e-10));
    out.push_back(at_most("stein.quadratic_1x1.residual", quad.residual_covariance, 1e-10));

    const QuadratureBudget qb{o.t_nodes, o.stein_samples, derive_seed(o.seed, 21)};
    const auto f = test_functions::composed(2, 2, SmoothingParams(1.0, 1.0),
                                            {0.5, IntervalSet::single(0.0, 1.0)});
    Eigen::VectorXd x4(4);
    x4 << 0.3, -0.2, 0.5, 0.1;
    const auto comp = stein_identity_residual(x4, f, covariance::identity(4), qb, 5e-3);
    out.push_back(at_most("stein.composed_2x2.covariance_residual", comp.residual_covariance, 5e-3));
  }
  {
    Eigen::MatrixXd A(2, 2);
    A << 0.0, 0.5, 0.5, 0.0;  // p(z) = z1 z2
    EntryCovariance xi(2, 2), eta(2, 2);
    xi << 1.0, 0.3, 0.3, 1.0;
    eta << 1.0, -0.2, -0.2, 1.0;
    const std::vector<double> ts{0.1, 0.3, 0.5, 0.7, 0.9};
    const auto q = gaussian_interpolation_check(test_functions::quadratic(1, 2, A), xi, eta, ts,
                                                20000, derive_seed(o.seed, 22));
    double worst = 0.0;
    for (const auto& p : q.points) worst = std::max(worst, std::abs(p.lhs - p.rhs));
    out.push_back(at_most("stein.interpolation_quadratic.abs_error", worst, 1e-10));

    const auto f = test_functions::composed(2, 2, SmoothingParams(1.0, 1.0),
                                            {0.5, IntervalSet::single(0.0, 1.0)});
    const auto g = gaussian_interpolation_check(f, covariance::identity(4),
                                                covariance::equicorrelated(4, 0.2), ts,
                                                o.stein_samples, derive_seed(o.seed, 23));
    double z = 0.0;
    for (const auto& p : g.points) z = std::max(z, std::abs(p.lhs - p.rhs) / p.std_error);
    out.push_back(at_most("stein.interpolation_composed.max_z", z, 3.0));
  }
  {
    const std::vector<EnsembleSpec> ens{
        EnsembleSpec::gaussian(2, 2, covariance::identity(4)),
        EnsembleSpec::iid(2, 2, {Driver::rademacher}),
        EnsembleSpec::iid(2, 2, {Driver::centered_exponential})};
    const char* labels[] = {"gaussian", "rademacher", "exponential"};
    for (std::size_t k = 0; k < ens.size(); ++k) {
      const auto rep = exchangeable_pair_moments(SampleStream(ens[k], derive_seed(o.seed, 30 + k)),
                                                 o.samples);
      out.push_back(at_most(std::string("stein.exchangeable_pair.") + labels[k] + ".max_z",
                            worst_z(rep.checks), 3.0));
    }
  }
  {
    const IndicatorSpec ind{1.0, IntervalSet::single(0.0, 1.0)};
    const auto g = taylor_remainder_probe(
        SampleStream(EnsembleSpec::gaussian(1, 1, covariance::identity(1)), derive_seed(o.seed, 40)),
        SmoothingParams(1.0, 1.0), ind, o.samples);
    out.push_back(at_most("stein.taylor_remainder.gaussian_1x1.ratio", g.ratio, 1.0));
    const auto r = taylor_remainder_probe(
        SampleStream(EnsembleSpec::iid(2, 2, {Driver::rademacher}), derive_seed(o.seed, 41)),
        SmoothingParams(1.0, 1.0), ind, o.samples);
    out.push_back(at_most("stein.taylor_remainder.rademacher_2x2.ratio", r.ratio, 1.0));
    const double z = r.symmetry_gap_se > 0
                         ? std::abs(r.delta_cubed_direct.value - r.delta_cubed_reflected.value) /
                               r.symmetry_gap_se
                         : 0.0;
    out.push_back(at_most("stein.taylor_remainder.rademacher_symmetry_z", z, 3.0));
  }

  // coupling LP
  {
    const auto pm = [](double v) { return DiscreteDistribution::point_mass(v); };
    const auto half = DiscreteDistribution::make({0.0, 1.0}, {0.5, 0.5});
    out.push_back(at_most("strassen.point_masses_d0.5.error",
                          std::abs(strassen_min_coupling(pm(0), pm(1), 0.5).primal - 1.0), 0));
    out.push_back(at_most("strassen.point_masses_d1.5.error",
                          std::abs(strassen_min_coupling(pm(0), pm(1), 1.5).primal), 0));
    out.push_back(at_most("strassen.half_half_vs_mass.error",
                          std::abs(strassen_min_coupling(half, pm(0), 0.5).primal - 0.5), 0));
    std::mt19937_64 rng(derive_seed(o.seed, 50));
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      const auto mu = dyadic_distribution(rng, 12);
      const auto nu = dyadic_distribution(rng, 12);
      const auto res = strassen_min_coupling(mu, nu, 0.25 * (k % 5));
      worst = std::max(worst, std::abs(res.primal - res.dual));
    }
    out.push_back(at_most("strassen.random_pairs.primal_minus_dual", worst, 0));
  }

  // bound components on 1x1 closed forms
  {
    const double z2 = 4.0 * std::exp(-0.5) / std::sqrt(2.0 * std::numbers::pi);
    struct Case {
      std::string name;
      EnsembleSpec spec;
      bool b1;
      double truth;
    };
    const std::vector<Case> cases{
        {"gaussian.B1", EnsembleSpec::gaussian(1, 1, covariance::identity(1)), true, z2},
        {"gaussian.B2", EnsembleSpec::gaussian(1, 1, covariance::identity(1)), false,
         2.0 * std::sqrt(2.0 / std::numbers::pi)},
        {"uniform.B2", EnsembleSpec::iid(1, 1, {Driver::uniform}), false, 3.0 * std::sqrt(3.0) / 4.0},
        {"rademacher.B2", EnsembleSpec::iid(1, 1, {Driver::rademacher}), false, 1.0},
        {"rademacher.B1", EnsembleSpec::iid(1, 1, {Driver::rademacher}), true, 0.0}};
    for (std::size_t k = 0; k < cases.size(); ++k) {
      const SampleStream s(cases[k].spec, derive_seed(o.seed, 60 + k));
      const Estimate e = cases[k].b1 ? estimate_B1(s, 10000, o.workers)
                                     : estimate_B2(s, 10000, o.workers);
      const double diff = std::abs(e.value - cases[k].truth);
      out.push_back(at_most("bounds." + cases[k].name + ".error_over_radius",
                            diff <= 1e-12 ? 0.0 : diff / e.radius, 1.0));
    }
  }
  return out;
}

}  // namespace mmc
