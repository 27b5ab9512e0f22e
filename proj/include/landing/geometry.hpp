#pragma once

#include "landing/matrix.hpp"

namespace landing {

/// ||X^T X - I_p||
double distance(const Matrix& x);
/// N(X) = 1/4 ||X^T X - I_p||^2
double distance_sq(const Matrix& x);

bool in_safe_region(const Matrix& x, double epsilon);

struct SingularValueCheck {
  double sigma_min;
  double sigma_max;
  bool within;  // all singular values in [sqrt(1 - eps), sqrt(1 + eps)]
};
SingularValueCheck singular_value_check(const Matrix& x, double epsilon);

/// skew(G X^T) X, the Riemannian gradient extended off the manifold.
Matrix riemannian_gradient_ext(const Matrix& g, const Matrix& x);

/// Gradient of N: X (X^T X - I).
Matrix normal_gradient(const Matrix& x);

struct FieldDecomposition {
  Matrix tangent_part;  // A X
  Matrix normal_part;   // lambda X (X^T X - I)
  Matrix total;
  double tangent_norm = 0.0;
  double normal_norm = 0.0;
  double distance = 0.0;
};

/// Landing field with both components kept separately.
FieldDecomposition landing_field(const Matrix& g, const Matrix& x, double lambda);
/// F(X, A) = A X + lambda X (X^T X - I) for an arbitrary skew A (n x n).
FieldDecomposition general_field(const Matrix& skew_a, const Matrix& x, double lambda);

struct NormBounds {
  double lower;
  double upper;
};
NormBounds field_norm_bounds(const FieldDecomposition& fd, double lambda, double epsilon);

struct LandingDirection {
  Matrix field;
  double distance = 0.0;
};

/// Landing field only, with the cheapest product ordering for the shape.
/// This is what the optimizers call every iteration.
LandingDirection landing_direction(const Matrix& g, const Matrix& x, double lambda);

/// Largest step keeping X - eta F(X, A) inside the safe region, given
/// g = ||F(X, A)|| and d = ||X^T X - I||.
double safeguard_eta(double g_norm, double d, double lambda, double epsilon);

/// The function whose infimum over a in (0, a_tilde], d in (0, eps] lower
/// bounds the first branch of safeguard_eta.
double safeguard_k(double lambda, double epsilon, double a, double d);

/// Uniform lower bound on safeguard_eta for all fields with ||A X|| <= a_tilde.
/// Grid search with local refinement, so it estimates the infimum from above.
double safeguard_eta_star(double a_tilde, double epsilon, double lambda);

}  // namespace landing
