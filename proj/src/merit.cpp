#include "landing/merit.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "landing/errors.hpp"
#include "landing/geometry.hpp"
#include "landing/sampling.hpp"

namespace landing {

double merit_value(const Matrix& x, double f_val, const Matrix& grad, double mu) {
  require_same_shape(x, grad, "merit_value");
  const Matrix delta = minus_identity(matmul_tn(x, x));
  const Matrix s = sym_part(matmul_tn(x, grad));
  return f_val - 0.5 * inner(s, delta) + mu * 0.25 * frobenius_norm_sq(delta);
}

double mu_lower_bound(double L_smooth, double s_bound, double L_hat, double lambda, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 0.75) || !(lambda > 0.0)) {
    throw ContractViolation(fmt::format(
        "mu_lower_bound: need 0 <= eps < 3/4 and lambda > 0 (eps={}, lambda={})", epsilon, lambda));
  }
  const double inner_term = L_smooth * (1.0 - epsilon) + 3.0 * s_bound +
                            L_hat * L_hat * (1.0 + epsilon) * (1.0 + epsilon) /
                                (lambda * (1.0 - epsilon));
  return 2.0 / (3.0 - 4.0 * epsilon) * inner_term;
}

LandingParams LandingParams::make(double lambda, double epsilon, const SmoothnessConstants& c,
                                  std::optional<double> mu, MuPolicy policy) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ContractViolation(fmt::format("LandingParams: lambda must be positive, got {}", lambda));
  }
  if (!(epsilon > 0.0 && epsilon < 0.75)) {
    throw ContractViolation(
        fmt::format("LandingParams: epsilon must lie in (0, 3/4), got {}", epsilon));
  }
  for (double v : {c.L_smooth, c.s_bound, c.L_hat, c.L_fh, c.a_tilde}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ContractViolation("LandingParams: smoothness constants must be finite and >= 0");
    }
  }
  LandingParams p;
  p.lambda = lambda;
  p.epsilon = epsilon;
  p.L_smooth = c.L_smooth;
  p.s_bound = c.s_bound;
  p.L_hat = std::max(c.L_hat, c.L_smooth);
  p.L_fh = c.L_fh;
  p.a_tilde = c.a_tilde;
  p.mu_bound = mu_lower_bound(p.L_smooth, p.s_bound, p.L_hat, lambda, epsilon);
  if (mu) {
    if (!(*mu > 0.0) || !std::isfinite(*mu)) {
      throw ContractViolation(fmt::format("LandingParams: mu must be positive, got {}", *mu));
    }
    if (*mu < p.mu_bound && policy == MuPolicy::enforce_bound) {
      throw ContractViolation(fmt::format(
          "LandingParams: mu = {} is below the merit bound {}", *mu, p.mu_bound));
    }
    p.mu = *mu;
  } else {
    // a constant objective has bound 0; any positive weight works
    p.mu = p.mu_bound > 0.0 ? p.mu_bound : 1.0;
  }
  p.nu = p.lambda * p.mu;
  p.rho = std::min(0.5, p.nu / (4.0 * lambda * lambda * (1.0 + epsilon)));
  p.L_g = p.L_fh + p.mu * normal_smoothness(epsilon);
  p.eta_star = p.a_tilde > 0.0 ? safeguard_eta_star(p.a_tilde, epsilon, lambda)
                               : 1.0 / (2.0 * lambda);
  return p;
}

double theory_step_gd(const LandingParams& p) {
  const double a = 1.0 / (2.0 * p.L_g);
  const double b = p.nu / (4.0 * p.lambda * p.lambda * p.L_g * (1.0 + p.epsilon));
  return std::min({a, b, p.eta_star});
}

double theory_step_saga(const LandingParams& p, std::size_t sample_count, double L_f) {
  const double big_n = static_cast<double>(sample_count);
  double eta = std::min(p.eta_star, p.rho / p.L_g);
  if (L_f > 0.0) {
    const double e1 = 1.0 + p.epsilon;
    eta = std::min(eta, 1.0 / (std::sqrt(8.0 * big_n * e1) * L_f));
    eta = std::min(eta, std::cbrt(p.rho / (8.0 * big_n * (4.0 * big_n + 2.0) * p.L_g * L_f * L_f *
                                           e1 * e1)));
  }
  return eta;
}

namespace {

double fd_step(const Matrix& x, const Matrix& v) {
  const double vn = frobenius_norm(v);
  return 1e-5 * std::max(1.0, frobenius_norm(x)) / vn;
}

/// Hessian of f applied to v, by central differences of the gradient.
Matrix hessian_apply(const Objective& obj, const Matrix& x, const Matrix& v) {
  if (frobenius_norm(v) == 0.0) return Matrix(x.rows(), x.cols());
  const double t = fd_step(x, v);
  Matrix plus = x;
  plus.add_scaled(v, t);
  Matrix minus = x;
  minus.add_scaled(v, -t);
  Matrix diff = obj.grad_full(plus);
  diff -= obj.grad_full(minus);
  return diff *= 1.0 / (2.0 * t);
}

/// Largest gain of a gradient map around x by power iteration on central
/// differences; step is relative to ||x||.
template <typename GradFn>
double local_lipschitz(GradFn&& grad, const Matrix& x, Rng& rng, double rel_step, int iters) {
  Matrix v = rng.gaussian(x.rows(), x.cols());
  v *= 1.0 / frobenius_norm(v);
  const double t = rel_step * std::max(1.0, frobenius_norm(x));
  double gain = 0.0;
  for (int it = 0; it < iters; ++it) {
    Matrix plus = x;
    plus.add_scaled(v, t);
    Matrix minus = x;
    minus.add_scaled(v, -t);
    Matrix hv = grad(plus);
    hv -= grad(minus);
    hv *= 1.0 / (2.0 * t);
    const double nrm = frobenius_norm(hv);
    gain = std::max(gain, nrm);
    if (nrm == 0.0) break;
    v = std::move(hv);
    v *= 1.0 / nrm;
  }
  return gain;
}

}  // namespace

Matrix merit_smooth_gradient(const Objective& obj, const Matrix& x) {
  const Matrix g = obj.grad_full(x);
  const Matrix delta = minus_identity(matmul_tn(x, x));
  Matrix out = g;
  out.add_scaled(hessian_apply(obj, x, matmul(x, delta)), -0.5);
  out.add_scaled(matmul(g, delta), -0.5);
  out -= matmul(x, sym_part(matmul_tn(x, g)));
  return out;
}

SmoothnessConstants smoothness_estimate(const Objective& obj, double epsilon, std::size_t samples,
                                        Rng& rng) {
  if (samples == 0) throw ContractViolation("smoothness_estimate: need at least one sample");
  constexpr double kSafety = 1.5;
  SmoothnessConstants c;
  double grad_norm = 0.0;
  Matrix prev_x;
  Matrix prev_g;
  for (std::size_t s = 0; s < samples; ++s) {
    const Matrix x = random_safe_point(obj.n(), obj.p(), epsilon * rng.uniform(), rng);
    const Matrix g = obj.grad_full(x);
    grad_norm = std::max(grad_norm, frobenius_norm(g));
    c.s_bound = std::max(c.s_bound, frobenius_norm(sym_part(matmul_tn(x, g))));
    c.a_tilde = std::max(c.a_tilde, frobenius_norm(riemannian_gradient_ext(g, x)));

    c.L_smooth = std::max(
        c.L_smooth, local_lipschitz([&](const Matrix& y) { return obj.grad_full(y); }, x, rng,
                                    1e-4, 8));
    if (!prev_x.empty()) {
      const double dx = frobenius_norm(x - prev_x);
      if (dx > 0.0) c.L_smooth = std::max(c.L_smooth, frobenius_norm(g - prev_g) / dx);
    }
    c.L_fh = std::max(
        c.L_fh, local_lipschitz([&](const Matrix& y) { return merit_smooth_gradient(obj, y); }, x,
                                rng, 1e-3, 6));
    prev_x = x;
    prev_g = g;
  }
  c.L_hat = std::max(c.L_smooth, grad_norm);
  c.L_smooth *= kSafety;
  c.s_bound *= kSafety;
  c.L_hat *= kSafety;
  c.L_fh *= kSafety;
  c.a_tilde *= kSafety;
  return c;
}

}  // namespace landing
