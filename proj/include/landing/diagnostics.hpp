#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "landing/matrix.hpp"
#include "landing/merit.hpp"
#include "landing/objective.hpp"
#include "landing/optim.hpp"

namespace landing {

struct PropertyReport {
  std::string name;
  std::size_t draws = 0;
  double worst_violation = 0.0;
  double tolerance = 0.0;
  bool passed = false;  // worst_violation <= tolerance
  std::size_t failures = 0;
  std::string note;
};

/// Single-measure reports leave failures at 0; it becomes 1 on a failed check.
PropertyReport make_report(std::string name, std::size_t draws, double worst, double tolerance,
                           std::size_t failures = 0, std::string note = {});

/// <grad phi(x), dir> by a central difference of step delta along dir / ||dir||.
double fd_directional_derivative(const std::function<double(const Matrix&)>& phi, const Matrix& x,
                                 const Matrix& dir, double delta);

/// Steps X - eta F(X, A) with eta = eta_scale * safeguard_eta over random
/// safe points and skew A; violation is the post-step distance minus eps.
/// A quarter of the draws sit on d = eps and another quarter are built so the
/// safeguard bound is tight, which is what makes eta_scale > 1 detectable.
PropertyReport check_safeguard_containment(std::size_t n, std::size_t p, double lambda,
                                           double epsilon, std::size_t draws, std::uint64_t seed,
                                           double eta_scale = 1.0);

/// Cosine between tangent and normal parts of F(X, A).
PropertyReport check_field_orthogonality(std::size_t n, std::size_t p, double lambda,
                                         double epsilon, std::size_t draws, std::uint64_t seed);

/// ||F||^2 inside field_norm_bounds, relative violation.
PropertyReport check_field_norm_bounds(std::size_t n, std::size_t p, double lambda,
                                       double epsilon, std::size_t draws, std::uint64_t seed);

/// Singular values of safe points in [sqrt(1 - eps), sqrt(1 + eps)].
PropertyReport check_singular_values(std::size_t n, std::size_t p, double epsilon,
                                     std::size_t draws, std::uint64_t seed);

/// Finite-difference derivative of the merit function along Lambda against
/// 0.49 ||grad f||^2 + 0.99 nu N and 0.99 rho ||Lambda||^2. Draws mix generic
/// safe points with rank-one stretched and shrunk ones.
PropertyReport check_merit_inequalities(const Objective& obj, const LandingParams& params,
                                        std::size_t draws, std::uint64_t seed);

/// Mean of grad_norm_sq (and n_of_x) over the first 2K rows of `longer`
/// against 0.75 times the mean over the first K rows of `shorter`.
PropertyReport check_rate_halving(const std::vector<RunRecord>& shorter,
                                  const std::vector<RunRecord>& longer, std::size_t k);

/// Best grad_norm_sq of `longer` at most `ratio` times the best of `shorter`.
PropertyReport check_best_ratio(const std::vector<RunRecord>& shorter,
                                const std::vector<RunRecord>& longer, double ratio);

/// Same with each side averaged over independent replicas (sampling seeds),
/// for stochastic runs where a single best value is noisy.
PropertyReport check_best_ratio(const std::vector<std::vector<RunRecord>>& shorter,
                                const std::vector<std::vector<RunRecord>>& longer, double ratio);

struct SuiteOptions {
  std::uint64_t seed = 0;
  double safeguard_scale = 1.0;  // negative-control hook
  double mu_scale = 1.0;         // negative-control hook, mu = scale * bound
};

/// Suites: geometry, merit, descent, oracle.
std::vector<PropertyReport> run_suite(std::string_view suite, const SuiteOptions& opts);

std::vector<std::string> suite_names();

}  // namespace landing
