#include "mmc/stein.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "mmc/parallel.hpp"

namespace mmc {

// ---------------------------------------------------------------------------
// Test functions

Jet SmoothTestFunction::eval_fd(const Eigen::VectorXd& x, int order) const {
  Jet j;
  j.value = value(x);
  const Eigen::Index d = x.size();
  if (order >= 1) {
    constexpr double h = 1e-5;
    j.grad.resize(d);
    Eigen::VectorXd y = x;
    for (Eigen::Index a = 0; a < d; ++a) {
      y(a) = x(a) + h;
      const double up = value(y);
      y(a) = x(a) - h;
      const double dn = value(y);
      y(a) = x(a);
      j.grad(a) = (up - dn) / (2 * h);
    }
  }
  if (order >= 2) {
    constexpr double h = 1e-4;
    j.hess.resize(d, d);
    Eigen::VectorXd y = x;
    for (Eigen::Index a = 0; a < d; ++a) {
      y(a) = x(a) + h;
      const double up = value(y);
      y(a) = x(a) - h;
      const double dn = value(y);
      y(a) = x(a);
      j.hess(a, a) = (up - 2 * j.value + dn) / (h * h);
      for (Eigen::Index b = a + 1; b < d; ++b) {
        double acc = 0.0;
        for (int sa : {1, -1})
          for (int sb : {1, -1}) {
            y(a) = x(a) + sa * h;
            y(b) = x(b) + sb * h;
            acc += sa * sb * value(y);
          }
        y(a) = x(a);
        y(b) = x(b);
        j.hess(a, b) = j.hess(b, a) = acc / (4 * h * h);
      }
    }
  }
  return j;
}

double SmoothTestFunction::third_fd(const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& v) const {
  constexpr double h = 1e-3;
  auto along = [&](double s) { return value(x + s * v); };
  return (along(2 * h) - 2 * along(h) + 2 * along(-h) - along(-2 * h)) / (2 * h * h * h);
}

Jet SmoothTestFunction::eval(const Eigen::VectorXd& x, int order) const {
  return jet ? jet(x, order) : eval_fd(x, order);
}

double SmoothTestFunction::third(const Eigen::VectorXd& x, const Eigen::VectorXd& v) const {
  return third_cubic ? third_cubic(x, v) : third_fd(x, v);
}

namespace test_functions {

SmoothTestFunction constant(Eigen::Index n, Eigen::Index m, double c) {
  SmoothTestFunction f;
  f.name = "constant";
  f.n = n;
  f.m = m;
  f.value = [c](const Eigen::VectorXd&) { return c; };
  f.jet = [c](const Eigen::VectorXd& x, int order) {
    Jet j{c, {}, {}};
    if (order >= 1) j.grad = Eigen::VectorXd::Zero(x.size());
    if (order >= 2) j.hess = Eigen::MatrixXd::Zero(x.size(), x.size());
    return j;
  };
  f.third_cubic = [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return 0.0; };
  return f;
}

SmoothTestFunction linear(Eigen::Index n, Eigen::Index m, Eigen::VectorXd a) {
  SmoothTestFunction f;
  f.name = "linear";
  f.n = n;
  f.m = m;
  f.declared = {a.cwiseAbs().sum(), 0.0, 0.0};
  f.value = [a](const Eigen::VectorXd& x) { return a.dot(x); };
  f.jet = [a](const Eigen::VectorXd& x, int order) {
    Jet j{a.dot(x), {}, {}};
    if (order >= 1) j.grad = a;
    if (order >= 2) j.hess = Eigen::MatrixXd::Zero(x.size(), x.size());
    return j;
  };
  f.third_cubic = [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return 0.0; };
  return f;
}

SmoothTestFunction quadratic(Eigen::Index n, Eigen::Index m, Eigen::MatrixXd A) {
  const Eigen::MatrixXd S = 0.5 * (A + A.transpose());
  SmoothTestFunction f;
  f.name = "quadratic";
  f.n = n;
  f.m = m;
  f.declared = {std::numeric_limits<double>::infinity(), 2.0 * S.cwiseAbs().sum(), 0.0};
  f.value = [S](const Eigen::VectorXd& x) { return x.dot(S * x); };
  f.jet = [S](const Eigen::VectorXd& x, int order) {
    Jet j{x.dot(S * x), {}, {}};
    if (order >= 1) j.grad = 2.0 * S * x;
    if (order >= 2) j.hess = 2.0 * S;
    return j;
  };
  f.third_cubic = [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return 0.0; };
  return f;
}

SmoothTestFunction composed(Eigen::Index n, Eigen::Index m, const SmoothingParams& sp,
                            const IndicatorSpec& indicator, std::size_t limit) {
  const SmoothIndicator g(indicator);
  const double tau = indicator.tau;
  const GBounds gb{SmoothIndicator::kD1Const / tau,
                   SmoothIndicator::kD2Const / (tau * tau),
                   SmoothIndicator::kD3Const / (tau * tau * tau)};
  const auto [bound2, bound3] = composed_derivative_sums(sp, gb);

  SmoothTestFunction f;
  f.name = "g_of_smooth_minmax";
  f.n = n;
  f.m = m;
  f.declared = {gb.g1, bound2, bound3};
  f.value = [=](const Eigen::VectorXd& x) {
    return g(smooth_minmax_value(unflatten(x, n, m), sp));
  };
  f.jet = [=](const Eigen::VectorXd& x, int order) {
    const MatrixSample X = unflatten(x, n, m);
    const double F = smooth_minmax_value(X, sp);
    Jet j{g(F), {}, {}};
    if (order < 1) return j;
    const auto w = weight_tensors(X, sp);
    const Eigen::VectorXd pi = flatten(w.pi);
    j.grad = g.d1(F) * pi;
    if (order >= 2) {
      const Eigen::MatrixXd inner =
          detail::omega_inner(pi, flatten(w.p), m, sp.delta());
      j.hess = g.d2(F) * pi * pi.transpose() +
               (g.d1(F) * sp.beta()) * (pi.asDiagonal() * inner);
    }
    return j;
  };
  f.third_cubic = [=](const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    const MatrixSample X = unflatten(x, n, m);
    const double F = smooth_minmax_value(X, sp);
    const auto t = derivative_tensors(X, sp, limit);
    const Eigen::VectorXd pi = flatten(gradient(X, sp));
    const double pv = pi.dot(v);
    const double beta = sp.beta();
    return g.d3(F) * pv * pv * pv + 3.0 * g.d2(F) * beta * v.dot(t.omega * v) * pv +
           g.d1(F) * beta * beta * t.gamma_cubic(v);
  };
  return f;
}

}  // namespace test_functions

// ---------------------------------------------------------------------------
// Quadrature and Gaussian banks

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int nodes, double a,
                                                                   double b) {
  if (nodes < 1) throw DomainError("quadrature needs at least one node");
  // Golub-Welsch: eigen-decomposition of the Jacobi matrix.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nodes, nodes);
  for (int k = 1; k < nodes; ++k) {
    const double off = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = J(k - 1, k) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J);
  std::vector<double> x(nodes), w(nodes);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (int k = 0; k < nodes; ++k) {
    const double v0 = eig.eigenvectors()(0, k);
    x[k] = mid + half * eig.eigenvalues()(k);
    w[k] = half * 2.0 * v0 * v0;
  }
  return {x, w};
}

Eigen::MatrixXd moment_matched_gaussians(const EntryCovariance& cov, std::size_t samples,
                                         std::uint64_t seed) {
  const Eigen::Index d = cov.rows();
  const std::size_t half = (samples + 1) / 2;
  if (half < static_cast<std::size_t>(d))
    throw EstimationError("too few samples to moment-match the covariance");
  const Eigen::Index N = static_cast<Eigen::Index>(2 * half);
  Eigen::MatrixXd Z(N, d);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (Eigen::Index s = 0; s < static_cast<Eigen::Index>(half); ++s)
    for (Eigen::Index a = 0; a < d; ++a) {
      Z(s, a) = normal(rng);
      Z(s + static_cast<Eigen::Index>(half), a) = -Z(s, a);
    }
  const Eigen::MatrixXd second = (Z.transpose() * Z) / static_cast<double>(N);
  Eigen::LLT<Eigen::MatrixXd> llt(second);
  if (llt.info() != Eigen::Success) throw EstimationError("degenerate Gaussian bank");
  // Z L^{-T} has identity second moment.
  const Eigen::MatrixXd Linv =
      llt.matrixL().solve(Eigen::MatrixXd::Identity(d, d));
  const Eigen::MatrixXd A = covariance::factor(cov);
  return Z * (Linv.transpose() * A.transpose());
}

// ---------------------------------------------------------------------------
// Stein solution

SteinSolution::SteinSolution(SmoothTestFunction f, const EntryCovariance& cov,
                             QuadratureBudget qb)
    : f_(std::move(f)), cov_(cov), qb_(qb) {
  if (cov.rows() != f_.dim() || cov.cols() != f_.dim())
    throw DomainError("covariance does not match the test function dimension");
  if (qb.t_nodes < 1) throw DomainError("need at least one quadrature node");
  bank_ = moment_matched_gaussians(cov, qb.mc_samples, qb.seed);
  std::tie(theta_, weight_) = gauss_legendre(qb.t_nodes, 0.0, std::numbers::pi / 2);
  f_bank_.resize(static_cast<std::size_t>(bank_.rows()));
  Moments mom;
  for (Eigen::Index s = 0; s < bank_.rows(); ++s) {
    f_bank_[static_cast<std::size_t>(s)] = f_.value(bank_.row(s).transpose());
    mom.add(f_bank_[static_cast<std::size_t>(s)]);
  }
  mean_f_ = mom.mean;
}

StatEstimate SteinSolution::h(const Eigen::VectorXd& x) const {
  const Moments mom = parallel_moments(
      static_cast<std::size_t>(bank_.rows()), 0, [&](std::size_t s) {
        const Eigen::VectorXd y = bank_.row(static_cast<Eigen::Index>(s)).transpose();
        double acc = 0.0;
        for (std::size_t k = 0; k < theta_.size(); ++k) {
          const double sn = std::sin(theta_[k]), cs = std::cos(theta_[k]);
          acc += weight_[k] * (cs / sn) * (f_.value(sn * x + cs * y) - f_bank_[s]);
        }
        return acc;
      });
  return {mom.mean, mom.std_error()};
}

Jet SteinSolution::derivatives(const Eigen::VectorXd& x) const {
  const Eigen::Index d = x.size();
  struct Acc {
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
  };
  auto blocks = map_blocks<Acc>(
      static_cast<std::size_t>(bank_.rows()), 0, [&](std::size_t b, std::size_t e) {
        Acc acc{Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d)};
        for (std::size_t s = b; s < e; ++s) {
          const Eigen::VectorXd y = bank_.row(static_cast<Eigen::Index>(s)).transpose();
          for (std::size_t k = 0; k < theta_.size(); ++k) {
            const double sn = std::sin(theta_[k]), cs = std::cos(theta_[k]);
            const Jet j = f_.eval(sn * x + cs * y, 2);
            acc.grad += (weight_[k] * cs) * j.grad;
            acc.hess += (weight_[k] * cs * sn) * j.hess;
          }
        }
        return acc;
      });
  const Acc total = tree_reduce(blocks, [](const Acc& a, const Acc& b) {
    return Acc{a.grad + b.grad, a.hess + b.hess};
  });
  const double N = static_cast<double>(bank_.rows());
  return Jet{h(x).value, total.grad / N, total.hess / N};
}

Jet SteinSolution::derivatives_fd(const Eigen::VectorXd& x, double step) const {
  const Eigen::Index d = x.size();
  Jet j;
  j.value = h(x).value;
  j.grad.resize(d);
  j.hess.resize(d, d);
  Eigen::VectorXd y = x;
  auto hv = [&](const Eigen::VectorXd& z) { return h(z).value; };
  for (Eigen::Index a = 0; a < d; ++a) {
    y(a) = x(a) + step;
    const double up = hv(y);
    y(a) = x(a) - step;
    const double dn = hv(y);
    y(a) = x(a);
    j.grad(a) = (up - dn) / (2 * step);
    j.hess(a, a) = (up - 2 * j.value + dn) / (step * step);
    for (Eigen::Index b = a + 1; b < d; ++b) {
      double acc = 0.0;
      for (int sa : {1, -1})
        for (int sb : {1, -1}) {
          y(a) = x(a) + sa * step;
          y(b) = x(b) + sb * step;
          acc += sa * sb * hv(y);
        }
      y(a) = x(a);
      y(b) = x(b);
      j.hess(a, b) = j.hess(b, a) = acc / (4 * step * step);
    }
  }
  return j;
}

StatEstimate stein_h(const Eigen::VectorXd& x, const SmoothTestFunction& f,
                     const EntryCovariance& cov, const QuadratureBudget& qb) {
  return SteinSolution(f, cov, qb).h(x);
}

SteinResidual stein_identity_residual(const Eigen::VectorXd& x, const SmoothTestFunction& f,
                                      const EntryCovariance& cov, const QuadratureBudget& qb,
                                      double tolerance, HDerivatives mode) {
  const SteinSolution sol(f, cov, qb);
  const Jet dh = mode == HDerivatives::analytic ? sol.derivatives(x) : sol.derivatives_fd(x);
  SteinResidual r;
  r.lhs = f.value(x) - sol.mean_f();
  const double first = x.dot(dh.grad);
  r.rhs_covariance = first - (cov.array() * dh.hess.array()).sum();
  r.rhs_outer = first - x.dot(dh.hess * x);
  r.residual_covariance = std::abs(r.lhs - r.rhs_covariance);
  r.residual_outer = std::abs(r.lhs - r.rhs_outer);
  r.tolerance = tolerance;
  r.covariance_passes = r.residual_covariance <= tolerance;
  r.outer_passes = r.residual_outer <= tolerance;
  return r;
}

// ---------------------------------------------------------------------------
// Exchangeable pairs

ExchangeablePairReport exchangeable_pair_moments(const SampleStream& stream,
                                                 std::size_t samples, int extra_probes) {
  const Eigen::Index d = stream.spec().dim();
  const EntryCovariance cov = exact_covariance(stream.spec());
  const SampleStream copy = stream.independent_copy();

  std::vector<Eigen::VectorXd> probes{Eigen::VectorXd::Zero(d)};
  for (int k = 0; k < extra_probes; ++k)
    probes.push_back(stream.sample_flat_at(static_cast<std::uint64_t>(k)));

  // stats per probe: d first moments then d(d+1)/2 second moments
  const std::size_t per_probe = static_cast<std::size_t>(d + d * (d + 1) / 2);
  const std::size_t nstats = per_probe * probes.size();
  auto blocks = map_blocks<std::vector<Moments>>(
      samples, 0, [&](std::size_t b, std::size_t e) {
        std::vector<Moments> acc(nstats);
        for (std::size_t s = b; s < e; ++s) {
          const Eigen::VectorXd xbar = copy.sample_flat_at(s);
          std::size_t k = 0;
          for (const auto& x : probes) {
            const Eigen::VectorXd delta = xbar - x;
            for (Eigen::Index a = 0; a < d; ++a) acc[k++].add(delta(a));
            for (Eigen::Index a = 0; a < d; ++a)
              for (Eigen::Index c = a; c < d; ++c) acc[k++].add(delta(a) * delta(c));
          }
        }
        return acc;
      });
  const auto totals = tree_reduce(blocks, [](const auto& a, const auto& b) {
    std::vector<Moments> out(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) out[k] = merge(a[k], b[k]);
    return out;
  });

  ExchangeablePairReport rep;
  std::size_t k = 0;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const auto& x = probes[p];
    auto add = [&](std::string name, double expected) {
      const Moments& mom = totals[k++];
      MomentCheck c{std::move(name), mom.mean, expected, mom.std_error(), false};
      c.pass = std::abs(c.estimate - c.expected) <= 3.0 * c.std_error + 1e-12;
      rep.all_pass = rep.all_pass && c.pass;
      rep.checks.push_back(std::move(c));
    };
    const std::string tag = "probe" + std::to_string(p);
    for (Eigen::Index a = 0; a < d; ++a)
      add(tag + ".E[D" + std::to_string(a) + "|X]", -x(a));
    for (Eigen::Index a = 0; a < d; ++a)
      for (Eigen::Index c = a; c < d; ++c)
        add(tag + ".E[D" + std::to_string(a) + "D" + std::to_string(c) + "|X]",
            cov(a, c) + x(a) * x(c));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Gaussian interpolation

InterpolationReport gaussian_interpolation_check(const SmoothTestFunction& p,
                                                 const EntryCovariance& cov_xi,
                                                 const EntryCovariance& cov_eta,
                                                 const std::vector<double>& t_grid,
                                                 std::size_t samples, std::uint64_t seed,
                                                 double exact_tolerance) {
  const Eigen::Index d = p.dim();
  if (cov_xi.rows() != d || cov_eta.rows() != d)
    throw DomainError("covariances must match the test function dimension");
  EntryCovariance joint = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  joint.topLeftCorner(d, d) = cov_xi;
  joint.bottomRightCorner(d, d) = cov_eta;
  const Eigen::MatrixXd bank = moment_matched_gaussians(joint, samples, seed);
  const Eigen::MatrixXd diff = cov_xi - cov_eta;

  InterpolationReport rep;
  for (double t : t_grid) {
    if (!(t > 0.0 && t < 1.0)) throw DomainError("interpolation times must lie in (0, 1)");
    const double h = std::min({1e-3, t / 2, (1 - t) / 2});
    struct Acc {
      Moments lhs, rhs, gap;
    };
    auto blocks = map_blocks<Acc>(
        static_cast<std::size_t>(bank.rows()), 0, [&](std::size_t b, std::size_t e) {
          Acc acc;
          for (std::size_t s = b; s < e; ++s) {
            const auto row = bank.row(static_cast<Eigen::Index>(s));
            const Eigen::VectorXd xi = row.head(d).transpose();
            const Eigen::VectorXd eta = row.tail(d).transpose();
            auto zeta = [&](double u) {
              return Eigen::VectorXd(std::sqrt(u) * xi + std::sqrt(1 - u) * eta);
            };
            const double l = (p.value(zeta(t + h)) - p.value(zeta(t - h))) / (2 * h);
            const double r = 0.5 * (diff.array() * p.eval(zeta(t), 2).hess.array()).sum();
            acc.lhs.add(l);
            acc.rhs.add(r);
            acc.gap.add(l - r);
          }
          return acc;
        });
    const Acc tot = tree_reduce(blocks, [](const Acc& a, const Acc& b) {
      return Acc{merge(a.lhs, b.lhs), merge(a.rhs, b.rhs), merge(a.gap, b.gap)};
    });
    InterpolationPoint pt{t, tot.lhs.mean, tot.rhs.mean, tot.gap.std_error(), false};
    pt.pass = std::abs(pt.lhs - pt.rhs) <= std::max(3.0 * pt.std_error, exact_tolerance);
    rep.all_pass = rep.all_pass && pt.pass;
    rep.points.push_back(pt);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Taylor remainder

TaylorRemainderReport taylor_remainder_probe(const SampleStream& stream,
                                             const SmoothTestFunction& f, double scale,
                                             std::size_t samples) {
  const Eigen::Index d = stream.spec().dim();
  if (f.dim() != d) throw DomainError("test function does not match ensemble shape");
  const SampleStream copy = stream.independent_copy();
  const Eigen::MatrixXd gfactor = covariance::factor(exact_covariance(stream.spec()));
  const std::uint64_t aux_seed = mix64(stream.seed() ^ 0x5851f42d4c957f2dULL);

  struct Acc {
    Moments r3, b2, direct, reflected, paired;
  };
  auto blocks = map_blocks<Acc>(samples, 0, [&](std::size_t b, std::size_t e) {
    Acc acc;
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t s = b; s < e; ++s) {
      const Eigen::VectorXd x = stream.sample_flat_at(s);
      const Eigen::VectorXd xbar = copy.sample_flat_at(s);
      const Eigen::VectorXd delta = xbar - x;
      std::mt19937_64 rng(derive_seed(aux_seed, s));
      const double theta = unif(rng);
      const double phi = 0.5 * std::numbers::pi * unif(rng);
      Eigen::VectorXd z(d);
      for (Eigen::Index a = 0; a < d; ++a) z(a) = normal(rng);
      const Eigen::VectorXd y = gfactor * z;
      // d3h(w) = int_0^{pi/2} cos(phi) sin^2(phi) E[d3f(sin(phi) w + cos(phi) Y)] dphi
      const double sn = std::sin(phi), cs = std::cos(phi);
      const Eigen::VectorXd w = x + theta * delta;
      const double kernel = 0.5 * std::numbers::pi * cs * sn * sn;
      const double r3 =
          0.5 * (1 - theta) * (1 - theta) * kernel * f.third(sn * w + cs * y, delta);
      acc.r3.add(r3);
      const double top = x.cwiseAbs().maxCoeff();
      acc.b2.add(top * top * top);
      const double dd = delta.cwiseAbs().maxCoeff();
      const double rr = (xbar + x).cwiseAbs().maxCoeff();
      acc.direct.add(dd * dd * dd);
      acc.reflected.add(rr * rr * rr);
      acc.paired.add(dd * dd * dd - rr * rr * rr);
    }
    return acc;
  });
  const Acc tot = tree_reduce(blocks, [](const Acc& a, const Acc& b) {
    return Acc{merge(a.r3, b.r3), merge(a.b2, b.b2), merge(a.direct, b.direct),
               merge(a.reflected, b.reflected), merge(a.paired, b.paired)};
  });

  TaylorRemainderReport rep;
  rep.remainder = {tot.r3.mean, tot.r3.std_error()};
  rep.b2 = {tot.b2.mean, tot.b2.std_error()};
  rep.scale = scale;
  rep.bound = scale * rep.b2.value;
  rep.ratio = rep.bound > 0.0 ? std::abs(rep.remainder.value) / rep.bound : 0.0;
  rep.delta_cubed_direct = {tot.direct.mean, tot.direct.std_error()};
  rep.delta_cubed_reflected = {tot.reflected.mean, tot.reflected.std_error()};
  rep.symmetry_gap_se = tot.paired.std_error();
  rep.symmetry_agrees =
      std::abs(tot.paired.mean) <= 3.0 * rep.symmetry_gap_se + 1e-12;
  return rep;
}

TaylorRemainderReport taylor_remainder_probe(const SampleStream& stream,
                                             const SmoothingParams& sp,
                                             const IndicatorSpec& indicator,
                                             std::size_t samples) {
  const auto& spec = stream.spec();
  const auto f = test_functions::composed(spec.n, spec.m, sp, indicator);
  const double phi = sp.phi();
  return taylor_remainder_probe(stream, f, phi * phi / indicator.tau, samples);
}

}  // namespace mmc
