#include "landing/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "landing/decompositions.hpp"
#include "landing/errors.hpp"

namespace landing {

namespace {

void require_tall(const Matrix& x, std::string_view what) {
  require_finite(x, what);
  if (x.rows() < x.cols()) {
    throw ContractViolation(fmt::format("{}: need n >= p, got {}x{}", what, x.rows(), x.cols()));
  }
}

}  // namespace

double distance(const Matrix& x) {
  require_tall(x, "distance");
  return frobenius_norm(minus_identity(matmul_tn(x, x)));
}

double distance_sq(const Matrix& x) {
  require_tall(x, "distance_sq");
  return 0.25 * frobenius_norm_sq(minus_identity(matmul_tn(x, x)));
}

bool in_safe_region(const Matrix& x, double epsilon) { return distance(x) <= epsilon; }

SingularValueCheck singular_value_check(const Matrix& x, double epsilon) {
  require_tall(x, "singular_value_check");
  const EigResult e = sym_eig(sym_part(matmul_tn(x, x)));
  const double smin = std::sqrt(std::max(e.values.front(), 0.0));
  const double smax = std::sqrt(std::max(e.values.back(), 0.0));
  // one-ulp slack: the eigenvalues carry rounding from forming X^T X
  const double tol = 1e-14;
  const bool within = smin * smin >= 1.0 - epsilon - tol && smax * smax <= 1.0 + epsilon + tol;
  return {smin, smax, within};
}

Matrix riemannian_gradient_ext(const Matrix& g, const Matrix& x) {
  require_tall(x, "riemannian_gradient_ext");
  require_same_shape(g, x, "riemannian_gradient_ext");
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  if (n > 2 * p) {
    // 1/2 (G (X^T X) - X (G^T X)): four n x p by p x p products
    Matrix out = matmul(g, matmul_tn(x, x));
    out -= matmul(x, matmul_tn(g, x));
    return 0.5 * std::move(out);
  }
  return matmul(skew_part(matmul_nt(g, x)), x);
}

Matrix normal_gradient(const Matrix& x) {
  require_tall(x, "normal_gradient");
  return matmul(x, minus_identity(matmul_tn(x, x)));
}

namespace {

FieldDecomposition assemble(Matrix tangent, Matrix normal, double d) {
  FieldDecomposition fd;
  fd.total = tangent + normal;
  fd.tangent_norm = frobenius_norm(tangent);
  fd.normal_norm = frobenius_norm(normal);
  fd.tangent_part = std::move(tangent);
  fd.normal_part = std::move(normal);
  fd.distance = d;
  return fd;
}

void require_lambda(double lambda, std::string_view what) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ContractViolation(fmt::format("{}: lambda must be finite and >= 0, got {}", what, lambda));
  }
}

}  // namespace

FieldDecomposition landing_field(const Matrix& g, const Matrix& x, double lambda) {
  require_lambda(lambda, "landing_field");
  require_tall(x, "landing_field");
  require_same_shape(g, x, "landing_field");
  const Matrix a = matmul_tn(x, x);
  const Matrix delta = minus_identity(a);
  Matrix tangent = matmul(g, a);
  tangent -= matmul(x, matmul_tn(g, x));
  tangent *= 0.5;
  Matrix normal = lambda * matmul(x, delta);
  return assemble(std::move(tangent), std::move(normal), frobenius_norm(delta));
}

FieldDecomposition general_field(const Matrix& skew_a, const Matrix& x, double lambda) {
  require_lambda(lambda, "general_field");
  require_tall(x, "general_field");
  require_square(skew_a, "general_field");
  if (skew_a.rows() != x.rows()) {
    throw ContractViolation(fmt::format("general_field: A is {}x{} but X has {} rows",
                                        skew_a.rows(), skew_a.cols(), x.rows()));
  }
  const Matrix delta = minus_identity(matmul_tn(x, x));
  return assemble(matmul(skew_a, x), lambda * matmul(x, delta), frobenius_norm(delta));
}

NormBounds field_norm_bounds(const FieldDecomposition& fd, double lambda, double epsilon) {
  const double ax2 = fd.tangent_norm * fd.tangent_norm;
  const double n_of_x = 0.25 * fd.distance * fd.distance;
  const double c = 4.0 * lambda * lambda * n_of_x;
  return {ax2 + c * (1.0 - epsilon), ax2 + c * (1.0 + epsilon)};
}

LandingDirection landing_direction(const Matrix& g, const Matrix& x, double lambda) {
  require_lambda(lambda, "landing_direction");
  require_tall(x, "landing_direction");
  require_same_shape(g, x, "landing_direction");
  // A = X^T X, B = (G/2 + lambda X) A, C = G^T X, D = X C, field = B - D/2 - lambda X.
  // X^T X is needed for the distance anyway, so this beats the n x n
  // ordering for every n >= p.
  const Matrix a = matmul_tn(x, x);
  Matrix left = 0.5 * g;
  left.add_scaled(x, lambda);
  Matrix field = matmul(left, a);
  field.add_scaled(matmul(x, matmul_tn(g, x)), -0.5);
  field.add_scaled(x, -lambda);
  return {std::move(field), frobenius_norm(minus_identity(a))};
}

double safeguard_eta(double g_norm, double d, double lambda, double epsilon) {
  if (!(lambda > 0.0) || !(epsilon > 0.0) || !(epsilon < 1.0)) {
    throw ContractViolation(
        fmt::format("safeguard_eta: need lambda > 0 and 0 < eps < 1 (lambda={}, eps={})", lambda,
                    epsilon));
  }
  if (!(g_norm >= 0.0) || !(d >= 0.0)) {
    throw ContractViolation(fmt::format("safeguard_eta: negative or NaN input (g={}, d={})", g_norm, d));
  }
  if (d > epsilon + 1e-12) {
    throw ContractViolation(fmt::format(
        "safeguard_eta: iterate is outside the safe region (d = {:.17g} > eps = {})", d, epsilon));
  }
  const double cap = 1.0 / (2.0 * lambda);
  if (g_norm == 0.0) return cap;
  d = std::min(d, epsilon);
  const double g2 = g_norm * g_norm;
  const double b = lambda * d * (1.0 - d);
  const double first = (b + std::sqrt(b * b + g2 * (epsilon - d))) / g2;
  return std::min(first, cap);
}

double safeguard_k(double lambda, double epsilon, double a, double d) {
  return (lambda * (1.0 - epsilon) * d + a * std::sqrt((epsilon - d) / 2.0)) /
         (a * a + lambda * lambda * (1.0 + epsilon) * d * d);
}

double safeguard_eta_star(double a_tilde, double epsilon, double lambda) {
  if (!(a_tilde > 0.0) || !(epsilon > 0.0) || !(epsilon < 1.0) || !(lambda > 0.0)) {
    throw ContractViolation(fmt::format(
        "safeguard_eta_star: need a_tilde > 0, 0 < eps < 1, lambda > 0 (got {}, {}, {})", a_tilde,
        epsilon, lambda));
  }
  constexpr int kGrid = 256;
  constexpr double kDecades = 6.0;
  auto log_point = [](double hi, int i) {
    return hi * std::pow(10.0, -kDecades * (1.0 - static_cast<double>(i) / (kGrid - 1)));
  };
  // exp(log(.)) may overshoot the box by an ulp
  auto k_at = [&](double a, double d) {
    return safeguard_k(lambda, epsilon, std::min(a, a_tilde), std::min(d, epsilon));
  };

  double best = std::numeric_limits<double>::infinity();
  int bi = 0;
  int bj = 0;
  for (int i = 0; i < kGrid; ++i) {
    const double a = log_point(a_tilde, i);
    for (int j = 0; j < kGrid; ++j) {
      const double v = k_at(a, log_point(epsilon, j));
      if (v < best) {
        best = v;
        bi = i;
        bj = j;
      }
    }
  }

  // Alternating golden-section searches in log coordinates over the cells
  // adjacent to the grid minimum.
  double la = std::log(log_point(a_tilde, bi));
  double ld = std::log(log_point(epsilon, bj));
  const double la_lo = std::log(log_point(a_tilde, std::max(bi - 1, 0)));
  const double la_hi = std::log(log_point(a_tilde, std::min(bi + 1, kGrid - 1)));
  const double ld_lo = std::log(log_point(epsilon, std::max(bj - 1, 0)));
  const double ld_hi = std::log(log_point(epsilon, std::min(bj + 1, kGrid - 1)));
  auto golden = [&](auto&& fn, double lo, double hi) {
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - r * (hi - lo);
    double x2 = lo + r * (hi - lo);
    double f1 = fn(x1);
    double f2 = fn(x2);
    for (int it = 0; it < 60; ++it) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - r * (hi - lo);
        f1 = fn(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + r * (hi - lo);
        f2 = fn(x2);
      }
    }
    return f1 < f2 ? x1 : x2;
  };
  for (int round = 0; round < 4; ++round) {
    la = golden([&](double t) { return k_at(std::exp(t), std::exp(ld)); }, la_lo, la_hi);
    best = std::min(best, k_at(std::exp(la), std::exp(ld)));
    ld = golden([&](double t) { return k_at(std::exp(la), std::exp(t)); }, ld_lo, ld_hi);
    best = std::min(best, k_at(std::exp(la), std::exp(ld)));
  }

  const double small_a_limit = (1.0 - epsilon) / (lambda * (1.0 + epsilon) * epsilon);
  const double small_d_limit = std::sqrt(epsilon / 2.0) / a_tilde;
  const double q = std::min({best, small_a_limit, small_d_limit});
  return std::min(q, 1.0 / (2.0 * lambda));
}

}  // namespace landing
