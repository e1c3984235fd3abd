#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mmc {

/// An n x m realization. Entries are addressed (i, j); flattened vectors use
/// row-major order, k = i * m + j.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixSample = Matrix<double>;

/// Covariance of the flattened entries, (n*m) x (n*m).
using EntryCovariance = Eigen::MatrixXd;

// Error taxonomy. The CLI maps ConfigError/ConstraintError to exit code 2
// and EstimationError to exit code 3.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct ConstraintError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct CapacityError : std::length_error {
  using std::length_error::length_error;
};

struct ConfigError : std::invalid_argument {
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(what), field(std::move(field)) {}
  std::string field;
};

struct EstimationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Smoothing parameters of the nested log-sum-exp: inner inverse
/// temperature beta, outer exponent delta. phi = beta * (1 + delta).
class SmoothingParams {
 public:
  SmoothingParams(double beta, double delta) : beta_(beta), delta_(delta) {
    if (!(beta > 0.0) || !std::isfinite(beta))
      throw ConstraintError("beta must be positive and finite");
    if (!(delta > 0.0) || !std::isfinite(delta))
      throw ConstraintError("delta must be positive and finite");
  }

  double beta() const { return beta_; }
  double delta() const { return delta_; }
  double phi() const { return beta_ * (1.0 + delta_); }

 private:
  double beta_;
  double delta_;
};

inline Eigen::VectorXd flatten(const MatrixSample& x) {
  Eigen::VectorXd v(x.size());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) v(i * x.cols() + j) = x(i, j);
  return v;
}

inline MatrixSample unflatten(const Eigen::VectorXd& v, Eigen::Index n,
                              Eigen::Index m) {
  MatrixSample x(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) x(i, j) = v(i * m + j);
  return x;
}

}  // namespace mmc
