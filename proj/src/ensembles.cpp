#include "mmc/ensembles.hpp"

#include <cmath>
#include <numbers>

#include "mmc/parallel.hpp"

namespace mmc {

std::string DriverSpec::name() const {
  switch (kind) {
    case Driver::rademacher: return "rademacher";
    case Driver::uniform: return "uniform";
    case Driver::centered_exponential: return "centered_exponential";
    case Driver::student_t: return "student_t";
  }
  return "unknown";
}

std::optional<double> DriverSpec::third_abs_moment() const {
  switch (kind) {
    case Driver::rademacher: return 1.0;
    case Driver::uniform: return 3.0 * std::sqrt(3.0) / 4.0;
    // E|E - 1|^3 for E ~ Exp(1): (6/e - 2) on [0,1] plus 6/e on [1, inf)
    case Driver::centered_exponential: return 12.0 / std::numbers::e - 2.0;
    case Driver::student_t: return std::nullopt;
  }
  return std::nullopt;
}

double DriverSpec::draw(std::mt19937_64& rng) const {
  switch (kind) {
    case Driver::rademacher:
      return (rng() >> 63) ? 1.0 : -1.0;
    case Driver::uniform: {
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      return std::sqrt(3.0) * u(rng);
    }
    case Driver::centered_exponential: {
      std::exponential_distribution<double> e(1.0);
      return e(rng) - 1.0;
    }
    case Driver::student_t: {
      std::student_t_distribution<double> t(df);
      return t(rng) * std::sqrt((df - 2.0) / df);
    }
  }
  return 0.0;
}

EnsembleSpec EnsembleSpec::gaussian(Eigen::Index n, Eigen::Index m,
                                    EntryCovariance cov, std::string name) {
  return {std::move(name), n, m, GaussianFamily{std::move(cov)}};
}

EnsembleSpec EnsembleSpec::iid(Eigen::Index n, Eigen::Index m, DriverSpec driver,
                               std::string name) {
  return {std::move(name), n, m, IidFamily{driver}};
}

EnsembleSpec EnsembleSpec::linear_mix(Eigen::Index n, Eigen::Index m,
                                      Eigen::MatrixXd loadings, DriverSpec driver,
                                      std::string name) {
  return {std::move(name), n, m, LinearMixFamily{std::move(loadings), driver}};
}

namespace covariance {

EntryCovariance identity(Eigen::Index d, double variance) {
  return variance * Eigen::MatrixXd::Identity(d, d);
}

EntryCovariance equicorrelated(Eigen::Index d, double rho) {
  EntryCovariance c = Eigen::MatrixXd::Constant(d, d, rho);
  c.diagonal().setOnes();
  return c;
}

EntryCovariance diagonal(const Eigen::VectorXd& variances) {
  return variances.asDiagonal();
}

Eigen::MatrixXd factor(const EntryCovariance& cov) {
  if (cov.rows() != cov.cols()) throw DomainError("covariance must be square");
  if (!cov.allFinite()) throw DomainError("covariance has non-finite entries");
  if (!cov.isApprox(cov.transpose(), 1e-12))
    throw DomainError("covariance must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd lambda = eig.eigenvalues();
  const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
  if (lambda.minCoeff() < -1e-10 * scale)
    throw DomainError("covariance is not positive semidefinite");
  return eig.eigenvectors() * lambda.cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         eig.eigenvectors().transpose();
}

}  // namespace covariance

namespace {

void validate_driver(const DriverSpec& d) {
  if (d.kind == Driver::student_t && !(d.df >= 4.0))
    throw DomainError("student_t requires df >= 4 for a finite third moment");
}

}  // namespace

void validate(const EnsembleSpec& spec) {
  if (spec.n < 1 || spec.m < 1) throw DomainError("ensemble shape must be at least 1x1");
  const Eigen::Index d = spec.dim();
  std::visit(
      [&](const auto& fam) {
        using F = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<F, GaussianFamily>) {
          if (fam.covariance.rows() != d || fam.covariance.cols() != d)
            throw DomainError("gaussian covariance must be (n*m)x(n*m)");
          (void)covariance::factor(fam.covariance);
        } else if constexpr (std::is_same_v<F, IidFamily>) {
          validate_driver(fam.driver);
        } else {
          if (fam.loadings.rows() != d || fam.loadings.cols() < 1)
            throw DomainError("linear_mix loadings must have n*m rows");
          if (!fam.loadings.allFinite()) throw DomainError("loadings must be finite");
          validate_driver(fam.driver);
        }
      },
      spec.family);
}

EntryCovariance exact_covariance(const EnsembleSpec& spec) {
  return std::visit(
      [&](const auto& fam) -> EntryCovariance {
        using F = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<F, GaussianFamily>)
          return fam.covariance;
        else if constexpr (std::is_same_v<F, IidFamily>)
          return covariance::identity(spec.dim());
        else
          return fam.loadings * fam.loadings.transpose();
      },
      spec.family);
}

std::optional<Eigen::VectorXd> exact_entry_third_moment(const EnsembleSpec& spec) {
  return std::visit(
      [&](const auto& fam) -> std::optional<Eigen::VectorXd> {
        using F = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<F, GaussianFamily>) {
          const double c = 2.0 * std::sqrt(2.0 / std::numbers::pi);
          return (c * fam.covariance.diagonal().array().pow(1.5)).matrix();
        } else if constexpr (std::is_same_v<F, IidFamily>) {
          const auto mu3 = fam.driver.third_abs_moment();
          if (!mu3) return std::nullopt;
          return Eigen::VectorXd::Constant(spec.dim(), *mu3);
        } else {
          return std::nullopt;
        }
      },
      spec.family);
}

SampleStream::SampleStream(EnsembleSpec spec, std::uint64_t seed) : seed_(seed) {
  validate(spec);
  auto prepared = std::make_shared<Prepared>();
  if (const auto* g = std::get_if<GaussianFamily>(&spec.family))
    prepared->factor = covariance::factor(g->covariance);
  else if (const auto* l = std::get_if<LinearMixFamily>(&spec.family))
    prepared->factor = l->loadings;
  prepared->spec = std::move(spec);
  prepared_ = std::move(prepared);
}

SampleStream::SampleStream(std::shared_ptr<const Prepared> prepared, std::uint64_t seed)
    : prepared_(std::move(prepared)), seed_(seed) {}

Eigen::VectorXd SampleStream::sample_flat_at(std::uint64_t index) const {
  std::mt19937_64 rng(derive_seed(seed_, index));
  const auto& spec = prepared_->spec;
  const Eigen::Index d = spec.dim();
  return std::visit(
      [&](const auto& fam) -> Eigen::VectorXd {
        using F = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<F, GaussianFamily>) {
          std::normal_distribution<double> normal;
          Eigen::VectorXd z(d);
          for (Eigen::Index k = 0; k < d; ++k) z(k) = normal(rng);
          return prepared_->factor * z;
        } else if constexpr (std::is_same_v<F, IidFamily>) {
          Eigen::VectorXd z(d);
          for (Eigen::Index k = 0; k < d; ++k) z(k) = fam.driver.draw(rng);
          return z;
        } else {
          Eigen::VectorXd z(prepared_->factor.cols());
          for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = fam.driver.draw(rng);
          return prepared_->factor * z;
        }
      },
      spec.family);
}

MatrixSample SampleStream::sample_at(std::uint64_t index) const {
  const auto& spec = prepared_->spec;
  return unflatten(sample_flat_at(index), spec.n, spec.m);
}

MatrixSample SampleStream::sample() { return sample_at(counter_++); }

SampleStream SampleStream::independent_copy() const {
  return SampleStream(prepared_, mix64(seed_ ^ 0xa0761d6478bd642fULL) + 1);
}

MatrixSample sample(SampleStream& stream) { return stream.sample(); }
SampleStream independent_copy(const SampleStream& stream) {
  return stream.independent_copy();
}

}  // namespace mmc
