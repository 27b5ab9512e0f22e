#pragma once

#include <cstddef>
#include <optional>

#include "landing/matrix.hpp"
#include "landing/objective.hpp"
#include "landing/rng.hpp"

namespace landing {

/// f(X) - 1/2 <sym(X^T G), X^T X - I> + mu N(X), with G the Euclidean gradient at X.
double merit_value(const Matrix& x, double f_val, const Matrix& grad, double mu);

/// Smallest mu for which the merit function decreases along the landing field.
double mu_lower_bound(double L_smooth, double s_bound, double L_hat, double lambda, double epsilon);

/// Smoothness constant of N on the safe region.
inline double normal_smoothness(double epsilon) { return 2.0 + 3.0 * epsilon; }

enum class MuPolicy {
  enforce_bound,
  allow_below,  // for negative controls only
};

struct LandingParams {
  double lambda = 1.0;
  double epsilon = 0.5;
  double mu = 0.0;
  double nu = 0.0;
  double rho = 0.0;
  double mu_bound = 0.0;
  double L_smooth = 0.0;
  double s_bound = 0.0;
  double L_hat = 0.0;
  double L_fh = 0.0;
  double L_g = 0.0;
  double a_tilde = 0.0;
  double eta_star = 0.0;

  /// mu defaults to mu_lower_bound. An explicit mu below the bound is a
  /// contract violation unless the policy allows it.
  static LandingParams make(double lambda, double epsilon, const SmoothnessConstants& c,
                            std::optional<double> mu = std::nullopt,
                            MuPolicy policy = MuPolicy::enforce_bound);
};

/// min(1/(2 L_g), nu/(4 lambda^2 L_g (1 + eps)), eta*)
double theory_step_gd(const LandingParams& params);

/// Step bound for landing SAGA with N samples; L_f is the smoothness of f.
double theory_step_saga(const LandingParams& params, std::size_t sample_count, double L_f);

/// Sampling estimate of the constants on the safe region, inflated by 1.5.
/// Heuristic: maxima over finitely many points can only underestimate a
/// supremum, the safety factor compensates in practice.
SmoothnessConstants smoothness_estimate(const Objective& obj, double epsilon, std::size_t samples,
                                        Rng& rng);

/// Euclidean gradient of f + h at x, with the Hessian of f applied by
/// central differences of the gradient.
Matrix merit_smooth_gradient(const Objective& obj, const Matrix& x);

}  // namespace landing
