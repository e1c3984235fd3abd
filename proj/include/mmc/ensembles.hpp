#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <variant>

#include "mmc/types.hpp"

namespace mmc {

/// Standardized (mean 0, variance 1) driver distributions.
enum class Driver { rademacher, uniform, centered_exponential, student_t };

struct DriverSpec {
  Driver kind = Driver::rademacher;
  double df = 5.0;  // student_t only; >= 4

  std::string name() const;
  /// E|Z|^3 where closed-form; nullopt for student_t.
  std::optional<double> third_abs_moment() const;
  double draw(std::mt19937_64& rng) const;
};

struct GaussianFamily {
  EntryCovariance covariance;
};
struct IidFamily {
  DriverSpec driver;
};
/// Flattened entries are loadings * z for an iid standardized driver vector z.
struct LinearMixFamily {
  Eigen::MatrixXd loadings;
  DriverSpec driver;
};

using Family = std::variant<GaussianFamily, IidFamily, LinearMixFamily>;

struct EnsembleSpec {
  std::string name;
  Eigen::Index n = 1;
  Eigen::Index m = 1;
  Family family;

  Eigen::Index dim() const { return n * m; }
  bool is_gaussian() const { return std::holds_alternative<GaussianFamily>(family); }

  static EnsembleSpec gaussian(Eigen::Index n, Eigen::Index m, EntryCovariance cov,
                               std::string name = "gaussian");
  static EnsembleSpec iid(Eigen::Index n, Eigen::Index m, DriverSpec driver,
                          std::string name = "iid");
  static EnsembleSpec linear_mix(Eigen::Index n, Eigen::Index m,
                                 Eigen::MatrixXd loadings, DriverSpec driver,
                                 std::string name = "linear_mix");
};

namespace covariance {
EntryCovariance identity(Eigen::Index d, double variance = 1.0);
/// (1 - rho) I + rho 1 1^T.
EntryCovariance equicorrelated(Eigen::Index d, double rho);
EntryCovariance diagonal(const Eigen::VectorXd& variances);
/// Lower-triangular L with L L^T = cov when positive definite, otherwise a
/// symmetric PSD square root. Throws DomainError for indefinite input.
Eigen::MatrixXd factor(const EntryCovariance& cov);
}  // namespace covariance

/// Throws DomainError on shape mismatch, non-PSD covariance or bad driver.
void validate(const EnsembleSpec& spec);

EntryCovariance exact_covariance(const EnsembleSpec& spec);

/// Per-entry E|X_ij|^3 (flattened), or nullopt when only Monte Carlo is
/// available.
std::optional<Eigen::VectorXd> exact_entry_third_moment(const EnsembleSpec& spec);

/// Counter-addressed sample source. Sample k depends only on (seed, k).
class SampleStream {
 public:
  SampleStream(EnsembleSpec spec, std::uint64_t seed);

  const EnsembleSpec& spec() const { return prepared_->spec; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  /// Draws the sample at the current counter and advances it.
  MatrixSample sample();
  MatrixSample sample_at(std::uint64_t index) const;
  /// Flattened sample (row-major), for hot loops.
  Eigen::VectorXd sample_flat_at(std::uint64_t index) const;

  /// Same spec, independently derived seed, counter reset.
  SampleStream independent_copy() const;

 private:
  struct Prepared {
    EnsembleSpec spec;
    Eigen::MatrixXd factor;  // gaussian: covariance factor; linear_mix: loadings
  };
  SampleStream(std::shared_ptr<const Prepared> prepared, std::uint64_t seed);

  std::shared_ptr<const Prepared> prepared_;
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

MatrixSample sample(SampleStream& stream);
SampleStream independent_copy(const SampleStream& stream);

}  // namespace mmc
