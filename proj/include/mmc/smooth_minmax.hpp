#pragma once

// Smoothed min-max statistic
//
//   F(x) = -1/(beta*delta) * log sum_i ( sum_j exp(beta x_ij) )^(-delta)
//
// and its derivative weight tensors. With p the row-softmax of beta*x and q
// the softmax over rows of -delta * logsumexp_j(beta x_ij):
//
//   dF/dx_a          = pi_a                 pi_a = p_a q_{row(a)}
//   d2F/dx_a dx_b    = beta   * omega_ab
//   d3F/dx_a dx_b dx_c = beta^2 * gamma_abc
//
// Flattened indices a = i*m + j throughout.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "mmc/types.hpp"

namespace mmc {

inline constexpr std::size_t kDefaultMaterializeLimit = 16;

namespace detail {

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& x) {
  if (x.size() == 0) throw DomainError("matrix must be at least 1x1");
  if (!x.allFinite()) throw DomainError("matrix has non-finite entries");
}

// log sum_j exp(beta x_ij) per row, max-shifted.
template <typename Derived>
Vector<typename Derived::Scalar> row_log_partition(
    const Eigen::MatrixBase<Derived>& x, typename Derived::Scalar beta) {
  using Scalar = typename Derived::Scalar;
  Vector<Scalar> out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Scalar top = beta * x.row(i).maxCoeff();
    Scalar acc(0);
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      acc += std::exp(beta * x(i, j) - top);
    out(i) = top + std::log(acc);
  }
  return out;
}

template <typename Scalar>
Scalar log_sum_exp(const Vector<Scalar>& a) {
  const Scalar top = a.maxCoeff();
  Scalar acc(0);
  for (Eigen::Index i = 0; i < a.size(); ++i) acc += std::exp(a(i) - top);
  return top + std::log(acc);
}

}  // namespace detail

template <typename Derived>
typename Derived::Scalar smooth_minmax_value(const Eigen::MatrixBase<Derived>& x,
                                             const SmoothingParams& sp) {
  using Scalar = typename Derived::Scalar;
  detail::require_finite(x);
  const Scalar beta(sp.beta());
  const Scalar delta(sp.delta());
  const Vector<Scalar> outer = -delta * detail::row_log_partition(x, beta);
  return -detail::log_sum_exp(outer) / (beta * delta);
}

template <typename Derived>
typename Derived::Scalar exact_minmax(const Eigen::MatrixBase<Derived>& x) {
  detail::require_finite(x);
  return x.rowwise().maxCoeff().minCoeff();
}

template <typename Scalar>
struct WeightTensors {
  Matrix<Scalar> p;   // n x m, rows sum to one
  Vector<Scalar> q;   // n, sums to one
  Matrix<Scalar> pi;  // n x m, pi(i,j) = p(i,j) q(i)
};

template <typename Derived>
WeightTensors<typename Derived::Scalar> weight_tensors(
    const Eigen::MatrixBase<Derived>& x, const SmoothingParams& sp) {
  using Scalar = typename Derived::Scalar;
  detail::require_finite(x);
  const Scalar beta(sp.beta());
  const Scalar delta(sp.delta());
  const Vector<Scalar> lse = detail::row_log_partition(x, beta);

  WeightTensors<Scalar> w;
  w.p.resize(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      w.p(i, j) = std::exp(beta * x(i, j) - lse(i));

  const Vector<Scalar> outer = -delta * lse;
  const Scalar norm = detail::log_sum_exp(outer);
  w.q = (outer.array() - norm).exp().matrix();
  w.pi = w.q.asDiagonal() * w.p;
  return w;
}

template <typename Derived>
Matrix<typename Derived::Scalar> gradient(const Eigen::MatrixBase<Derived>& x,
                                          const SmoothingParams& sp) {
  return weight_tensors(x, sp).pi;
}

/// Explicit omega ((nm)^2 entries) and gamma ((nm)^3 entries). Only built
/// for n*m up to a limit; the sum operations below work at any size.
struct DerivativeTensors {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  bool materialized = false;
  Eigen::MatrixXd omega;
  std::vector<double> gamma;

  Eigen::Index dim() const { return n * m; }
  double gamma_at(Eigen::Index a, Eigen::Index b, Eigen::Index c) const {
    const auto d = dim();
    return gamma[static_cast<std::size_t>((a * d + b) * d + c)];
  }
  /// gamma contracted with v three times.
  double gamma_cubic(const Eigen::VectorXd& v) const {
    const auto d = dim();
    double acc = 0.0;
    std::size_t k = 0;
    for (Eigen::Index a = 0; a < d; ++a)
      for (Eigen::Index b = 0; b < d; ++b) {
        const double vab = v(a) * v(b);
        for (Eigen::Index c = 0; c < d; ++c) acc += gamma[k++] * vab * v(c);
      }
    return acc;
  }
};

namespace detail {

// a_ab = delta pi_b + [i_a = i_b]([a = b] - (1 + delta) p_b), so that
// omega_ab = pi_a a_ab.
inline Eigen::MatrixXd omega_inner(const Eigen::VectorXd& pi, const Eigen::VectorXd& p,
                                   Eigen::Index m, double delta) {
  const Eigen::Index d = pi.size();
  Eigen::MatrixXd inner(d, d);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b) {
      double v = delta * pi(b);
      if (a / m == b / m) v += (a == b ? 1.0 : 0.0) - (1.0 + delta) * p(b);
      inner(a, b) = v;
    }
  return inner;
}

}  // namespace detail

/// omega alone, (nm) x (nm). No size limit.
inline Eigen::MatrixXd omega_matrix(const MatrixSample& x, const SmoothingParams& sp) {
  const auto w = weight_tensors(x, sp);
  const Eigen::VectorXd pi = flatten(w.pi);
  return pi.asDiagonal() * detail::omega_inner(pi, flatten(w.p), x.cols(), sp.delta());
}

inline DerivativeTensors derivative_tensors(
    const MatrixSample& x, const SmoothingParams& sp,
    std::size_t limit = kDefaultMaterializeLimit) {
  const Eigen::Index n = x.rows(), m = x.cols(), d = n * m;
  if (static_cast<std::size_t>(d) > limit)
    throw CapacityError("n*m = " + std::to_string(d) +
                        " exceeds the materialization limit " +
                        std::to_string(limit) +
                        "; use omega_abs_sum or raise the limit");
  const auto w = weight_tensors(x, sp);
  const double delta = sp.delta();
  const Eigen::VectorXd pi = flatten(w.pi);
  const Eigen::VectorXd p = flatten(w.p);
  const Eigen::MatrixXd inner = detail::omega_inner(pi, p, m, delta);

  DerivativeTensors t;
  t.n = n;
  t.m = m;
  t.materialized = true;
  t.omega = pi.asDiagonal() * inner;
  t.gamma.resize(static_cast<std::size_t>(d * d * d));
  std::size_t k = 0;
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b)
      for (Eigen::Index c = 0; c < d; ++c) {
        double v = t.omega(a, b) * inner(a, c) + delta * pi(a) * t.omega(b, c);
        if (a / m == b / m && b / m == c / m)
          v -= (1.0 + delta) * pi(a) * p(b) * ((b == c ? 1.0 : 0.0) - p(c));
        t.gamma[k++] = v;
      }
  return t;
}

/// sum |omega| over all index pairs without materializing omega. Pairs in
/// distinct rows contribute delta * q_i (1 - q_i) in total per row i; pairs
/// inside row i are summed directly, O(n m^2).
inline double omega_abs_sum(const MatrixSample& x, const SmoothingParams& sp) {
  const auto w = weight_tensors(x, sp);
  const double delta = sp.delta();
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double qi = w.q(i);
    total += delta * qi * (1.0 - qi);
    for (Eigen::Index j1 = 0; j1 < x.cols(); ++j1) {
      double row_sum = 0.0;
      for (Eigen::Index j2 = 0; j2 < x.cols(); ++j2) {
        const double v = w.p(i, j2) * (delta * qi - (1.0 + delta)) +
                         (j1 == j2 ? 1.0 : 0.0);
        row_sum += std::abs(v);
      }
      total += w.pi(i, j1) * row_sum;
    }
  }
  return total;
}

inline double gamma_abs_sum(const MatrixSample& x, const SmoothingParams& sp,
                            std::size_t limit = kDefaultMaterializeLimit) {
  const auto t = derivative_tensors(x, sp, limit);
  double total = 0.0;
  for (double g : t.gamma) total += std::abs(g);
  return total;
}

inline double omega_sum_bound(const SmoothingParams& sp) {
  return 2.0 * (1.0 + sp.delta());
}
inline double gamma_sum_bound(const SmoothingParams& sp) {
  return 6.0 * (1.0 + sp.delta()) * (1.0 + sp.delta());
}

/// Sup-norms of g', g'', g'''.
struct GBounds {
  double g1 = 0.0;
  double g2 = 0.0;
  double g3 = 0.0;
};

/// Right-hand sides bounding the second- and third-order derivative sums of
/// g o F: (g2 + 2 phi g1, g3 + 6 phi g2 + 6 phi^2 g1).
inline std::pair<double, double> composed_derivative_sums(const SmoothingParams& sp,
                                                          const GBounds& g) {
  const double phi = sp.phi();
  return {g.g2 + 2.0 * phi * g.g1,
          g.g3 + 6.0 * phi * g.g2 + 6.0 * phi * phi * g.g1};
}

/// Values g'(F(x)), g''(F(x)), g'''(F(x)).
struct GDerivatives {
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 0.0;
};

/// Absolute sums of the explicit second and third derivative tensors of
/// g o F at x, assembled by the chain rule from pi, omega, gamma.
inline std::pair<double, double> measured_composed_sums(
    const MatrixSample& x, const SmoothingParams& sp, const GDerivatives& g,
    std::size_t limit = kDefaultMaterializeLimit) {
  const auto t = derivative_tensors(x, sp, limit);
  const Eigen::VectorXd pi = flatten(gradient(x, sp));
  const double beta = sp.beta();
  const Eigen::Index d = t.dim();

  double second = 0.0;
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b)
      second += std::abs(g.d2 * pi(a) * pi(b) + g.d1 * beta * t.omega(a, b));

  double third = 0.0;
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b)
      for (Eigen::Index c = 0; c < d; ++c) {
        const double v =
            g.d3 * pi(a) * pi(b) * pi(c) +
            g.d2 * beta *
                (t.omega(a, b) * pi(c) + t.omega(a, c) * pi(b) +
                 t.omega(b, c) * pi(a)) +
            g.d1 * beta * beta * t.gamma_at(a, b, c);
        third += std::abs(v);
      }
  return {second, third};
}

}  // namespace mmc
