#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "landing/matrix.hpp"
#include "landing/objective.hpp"
#include "landing/rng.hpp"

namespace landing {

/// f(X) = -1/(2N) ||A X||^2 with A the N x n data matrix.
class PcaObjective final : public Objective {
 public:
  PcaObjective(Matrix data, std::size_t p);

  std::string name() const override { return "pca"; }
  std::size_t n() const override { return data_.cols(); }
  std::size_t p() const override { return p_; }
  std::size_t sample_count() const override { return data_.rows(); }

  double value(const Matrix& x) const override;
  Matrix grad_full(const Matrix& x) const override;
  Matrix grad_samples(std::span<const std::size_t> idx, const Matrix& x) const override;
  Matrix grad_sample(std::size_t i, const Matrix& x) const override;
  std::optional<SmoothnessConstants> analytic_constants(double epsilon) const override;

  const Matrix& data() const { return data_; }
  /// A^T A / N
  const Matrix& second_moment() const;
  /// Minimum of f over St(p, n): -1/2 times the sum of the p largest eigenvalues.
  double optimal_value() const;
  /// Top-p eigenvectors of the second-moment matrix, as columns.
  Matrix top_eigenvectors() const;

 private:
  Matrix data_;
  std::size_t p_;
  mutable std::once_flag moment_once_;
  mutable Matrix moment_;
};

/// f(X) = (1/N) sum_ij logcosh([A X]_ij)
class IcaObjective final : public Objective {
 public:
  IcaObjective(Matrix data, std::size_t p);

  std::string name() const override { return "ica"; }
  std::size_t n() const override { return data_.cols(); }
  std::size_t p() const override { return p_; }
  std::size_t sample_count() const override { return data_.rows(); }

  double value(const Matrix& x) const override;
  Matrix grad_full(const Matrix& x) const override;
  Matrix grad_samples(std::span<const std::size_t> idx, const Matrix& x) const override;
  Matrix grad_sample(std::size_t i, const Matrix& x) const override;

 private:
  Matrix data_;
  std::size_t p_;
};

/// f(X) = <M, X>, one sample.
class LinearObjective final : public Objective {
 public:
  explicit LinearObjective(Matrix m);

  std::string name() const override { return "linear"; }
  std::size_t n() const override { return m_.rows(); }
  std::size_t p() const override { return m_.cols(); }
  std::size_t sample_count() const override { return 1; }

  double value(const Matrix& x) const override;
  Matrix grad_full(const Matrix& x) const override;
  Matrix grad_samples(std::span<const std::size_t> idx, const Matrix& x) const override;
  std::optional<SmoothnessConstants> analytic_constants(double epsilon) const override;

  const Matrix& m() const { return m_; }

 private:
  Matrix m_;
};

/// f(X) = 1/2 tr(X^T C X) for symmetric C, one sample.
class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(Matrix c, std::size_t p);

  std::string name() const override { return "quadratic"; }
  std::size_t n() const override { return c_.rows(); }
  std::size_t p() const override { return p_; }
  std::size_t sample_count() const override { return 1; }

  double value(const Matrix& x) const override;
  Matrix grad_full(const Matrix& x) const override;
  Matrix grad_samples(std::span<const std::size_t> idx, const Matrix& x) const override;
  std::optional<SmoothnessConstants> analytic_constants(double epsilon) const override;

 private:
  Matrix c_;
  std::size_t p_;
  double spectral_norm_;
};

/// |x| + log1p(exp(-2|x|)) - log 2, finite for every finite x.
double logcosh(double x);

struct PcaInstance {
  Matrix data;  // N x n
  double noise_sigma = 0.0;
  Matrix planted_u;  // n x p
  std::uint64_t seed = 0;
};

struct IcaInstance {
  Matrix sources;  // N x n, Laplace
  Matrix mixing;   // n x n orthogonal
  Matrix data;     // sources * mixing^T
  std::uint64_t seed = 0;
};

/// Rows drawn from N(0, U U^T + sigma I_n).
PcaInstance gen_pca_data(std::size_t n, std::size_t p, std::size_t big_n, double sigma,
                         std::uint64_t seed);
IcaInstance gen_ica_data(std::size_t n, std::size_t big_n, std::uint64_t seed);

struct PenaltyOracle {
  Matrix x_star;      // minimizer of <M, X> + lambda N(X)
  Matrix x_stiefel;   // minimizer of <M, X> on St(p, n)
  std::vector<double> sigma_star;
};

/// Closed-form minimizer of <M, X> + lambda N(X) via the SVD of M.
PenaltyOracle penalty_oracle(const Matrix& m, double lambda_pen);

/// Root x >= 1 of x^3 - x = c for c >= 0.
double penalty_root(double c);

/// Normalized two-sided Amari distance of a square matrix to the set of
/// scaled permutations.
double amari_distance(const Matrix& p);

/// Largest principal angle (radians) between the column spans of two
/// matrices with orthonormal columns.
double max_principal_angle(const Matrix& a, const Matrix& b);

}  // namespace landing
