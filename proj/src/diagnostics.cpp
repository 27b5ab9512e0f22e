#include "landing/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "landing/decompositions.hpp"
#include "landing/errors.hpp"
#include "landing/geometry.hpp"
#include "landing/problems.hpp"
#include "landing/rng.hpp"
#include "landing/sampling.hpp"

namespace landing {

PropertyReport make_report(std::string name, std::size_t draws, double worst, double tolerance,
                           std::size_t failures, std::string note) {
  PropertyReport r;
  r.name = std::move(name);
  r.draws = draws;
  r.worst_violation = worst;
  r.tolerance = tolerance;
  r.passed = worst <= tolerance;
  r.failures = r.passed || failures > 0 ? failures : 1;
  r.note = std::move(note);
  return r;
}

double fd_directional_derivative(const std::function<double(const Matrix&)>& phi, const Matrix& x,
                                 const Matrix& dir, double delta) {
  require_same_shape(x, dir, "fd_directional_derivative");
  if (!(delta > 0.0)) throw ContractViolation("finite-difference step must be positive");
  const double norm = frobenius_norm(dir);
  if (norm == 0.0) return 0.0;
  Matrix plus = x;
  plus.add_scaled(dir, delta / norm);
  Matrix minus = x;
  minus.add_scaled(dir, -delta / norm);
  return (phi(plus) - phi(minus)) / (2.0 * delta) * norm;
}

namespace {

void require_dims(std::size_t n, std::size_t p, std::string_view what) {
  if (p == 0 || n <= p) {
    throw ContractViolation(fmt::format("{}: need n > p >= 1, got n={} p={}", what, n, p));
  }
}

Matrix unit_vector(std::size_t p, Rng& rng) {
  Matrix v = rng.gaussian(p, 1);
  v *= 1.0 / frobenius_norm(v);
  return v;
}

/// X = Q (I + s d v v^T)^{1/2}: distance exactly d along one direction.
Matrix rank_one_point(const Matrix& q, double d, double sign, Rng& rng) {
  const Matrix v = unit_vector(q.cols(), rng);
  return safe_point_from(q, matmul_nt(v, v) *= sign * d);
}

/// Skew A with ||A||_F = scale.
Matrix scaled_skew(std::size_t n, double scale, Rng& rng) {
  Matrix a = random_skew(n, rng);
  a *= scale / frobenius_norm(a);
  return a;
}

double log_uniform(double lo, double hi, Rng& rng) {
  return lo * std::pow(hi / lo, rng.uniform());
}

}  // namespace

PropertyReport check_safeguard_containment(std::size_t n, std::size_t p, double lambda,
                                           double epsilon, std::size_t draws, std::uint64_t seed,
                                           double eta_scale) {
  require_dims(n, p, "check_safeguard_containment");
  Rng rng(seed, Stream::diagnostics);
  double worst = -std::numeric_limits<double>::infinity();
  std::size_t failures = 0;
  const double tol = 1e-12;
  for (std::size_t k = 0; k < draws; ++k) {
    const Matrix q = random_stiefel(n, p, rng);
    Matrix x;
    Matrix a;
    switch (k % 4) {
      case 2:  // boundary
        x = safe_point_from(q, random_symmetric(p, epsilon, rng));
        a = scaled_skew(n, log_uniform(1e-2, 30.0, rng), rng);
        break;
      case 3: {
        // E = eps e1 e1^T and A X = c sqrt(1 + eps) w e1^T with w orthogonal
        // to span(X): every term of the step acts on the same direction
        Matrix e(p, p);
        e(0, 0) = epsilon;
        x = safe_point_from(q, e);
        Matrix w = rng.gaussian(n, 1);
        for (int pass = 0; pass < 2; ++pass) w -= matmul(q, matmul_tn(q, w));
        w *= 1.0 / frobenius_norm(w);
        Matrix q1(n, 1);
        for (std::size_t i = 0; i < n; ++i) q1(i, 0) = q(i, 0);
        const double c = log_uniform(1.0, 10.0, rng) * 2.0 * lambda / std::sqrt(1.0 + epsilon);
        a = (matmul_nt(w, q1) - matmul_nt(q1, w)) *= c;
        break;
      }
      default:
        x = safe_point_from(q, random_symmetric(p, epsilon * rng.uniform(), rng));
        a = scaled_skew(n, log_uniform(1e-2, 30.0, rng), rng);
        break;
    }
    const FieldDecomposition fd = general_field(a, x, lambda);
    const double g = frobenius_norm(fd.total);
    const double eta = eta_scale * safeguard_eta(g, std::min(fd.distance, epsilon), lambda, epsilon);
    Matrix next = x;
    next.add_scaled(fd.total, -eta);
    const double violation = distance(next) - epsilon;
    worst = std::max(worst, violation);
    failures += violation > tol ? 1 : 0;
  }
  return make_report("safeguard_containment", draws, worst, tol, failures,
                     fmt::format("n={} p={} lambda={} eps={} eta_scale={}", n, p, lambda, epsilon,
                                 eta_scale));
}

PropertyReport check_field_orthogonality(std::size_t n, std::size_t p, double lambda,
                                         double epsilon, std::size_t draws, std::uint64_t seed) {
  require_dims(n, p, "check_field_orthogonality");
  Rng rng(seed, Stream::diagnostics);
  double worst = 0.0;
  std::size_t failures = 0;
  const double tol = 1e-10;
  for (std::size_t k = 0; k < draws; ++k) {
    const Matrix x = random_safe_point(n, p, epsilon * (0.01 + 0.99 * rng.uniform()), rng);
    const Matrix a = scaled_skew(n, log_uniform(1e-2, 10.0, rng), rng);
    const FieldDecomposition fd = general_field(a, x, lambda);
    const double cosine = std::abs(inner(fd.tangent_part, fd.normal_part)) /
                          (fd.tangent_norm * fd.normal_norm);
    worst = std::max(worst, cosine);
    failures += cosine > tol ? 1 : 0;
  }
  return make_report("field_orthogonality", draws, worst, tol, failures);
}

PropertyReport check_field_norm_bounds(std::size_t n, std::size_t p, double lambda,
                                       double epsilon, std::size_t draws, std::uint64_t seed) {
  require_dims(n, p, "check_field_norm_bounds");
  Rng rng(seed, Stream::diagnostics);
  double worst = -std::numeric_limits<double>::infinity();
  std::size_t failures = 0;
  const double tol = 1e-12;
  for (std::size_t k = 0; k < draws; ++k) {
    const Matrix x = random_safe_point(n, p, epsilon * rng.uniform(), rng);
    const Matrix a = scaled_skew(n, log_uniform(1e-2, 10.0, rng), rng);
    const FieldDecomposition fd = general_field(a, x, lambda);
    const NormBounds b = field_norm_bounds(fd, lambda, epsilon);
    const double f2 = frobenius_norm_sq(fd.total);
    const double violation = std::max(b.lower - f2, f2 - b.upper) / f2;
    worst = std::max(worst, violation);
    failures += violation > tol ? 1 : 0;
  }
  return make_report("field_norm_sandwich", draws, worst, tol, failures);
}

PropertyReport check_singular_values(std::size_t n, std::size_t p, double epsilon,
                                     std::size_t draws, std::uint64_t seed) {
  require_dims(n, p, "check_singular_values");
  Rng rng(seed, Stream::diagnostics);
  double worst = -std::numeric_limits<double>::infinity();
  std::size_t failures = 0;
  const double tol = 1e-14;
  const double lo = std::sqrt(1.0 - epsilon);
  const double hi = std::sqrt(1.0 + epsilon);
  for (std::size_t k = 0; k < draws; ++k) {
    const double d = k % 4 == 0 ? epsilon : epsilon * rng.uniform();
    const Matrix x = random_safe_point(n, p, d, rng);
    const SingularValueCheck s = singular_value_check(x, epsilon);
    const double violation = std::max(lo - s.sigma_min, s.sigma_max - hi);
    worst = std::max(worst, violation);
    failures += violation > tol ? 1 : 0;
  }
  return make_report("singular_value_range", draws, worst, tol, failures);
}

PropertyReport check_merit_inequalities(const Objective& obj, const LandingParams& params,
                                        std::size_t draws, std::uint64_t seed) {
  Rng rng(seed, Stream::diagnostics);
  const std::size_t n = obj.n();
  const std::size_t p = obj.p();
  require_dims(n, p, "check_merit_inequalities");
  const double eps = params.epsilon;
  auto merit = [&](const Matrix& y) {
    return merit_value(y, obj.value(y), obj.grad_full(y), params.mu);
  };
  double worst = -std::numeric_limits<double>::infinity();
  double worst_first = worst;
  double worst_second = worst;
  std::size_t failures = 0;
  const double tol = 0.0;
  for (std::size_t k = 0; k < draws; ++k) {
    const double d = eps * (0.05 + 0.95 * rng.uniform());
    Matrix x;
    switch (k % 3) {
      case 0:
        x = random_safe_point(n, p, d, rng);
        break;
      case 1:
        x = rank_one_point(random_stiefel(n, p, rng), d, 1.0, rng);
        break;
      default:
        x = rank_one_point(random_stiefel(n, p, rng), d, -1.0, rng);
        break;
    }
    const FieldDecomposition fd = landing_field(obj.grad_full(x), x, params.lambda);
    const double delta = 1e-5 * std::max(1.0, frobenius_norm(x));
    const double slope = fd_directional_derivative(merit, x, fd.total, delta);
    const double n_of_x = 0.25 * fd.distance * fd.distance;
    const double rhs1 = 0.49 * fd.tangent_norm * fd.tangent_norm + 0.99 * params.nu * n_of_x;
    const double rhs2 = 0.99 * params.rho * frobenius_norm_sq(fd.total);
    const double v1 = (rhs1 - slope) / (std::abs(slope) + rhs1 + 1e-10);
    const double v2 = (rhs2 - slope) / (std::abs(slope) + rhs2 + 1e-10);
    worst_first = std::max(worst_first, v1);
    worst_second = std::max(worst_second, v2);
    worst = std::max({worst, v1, v2});
    failures += (v1 > tol || v2 > tol) ? 1 : 0;
  }
  return make_report(
      fmt::format("merit_inequalities[{}]", obj.name()), draws, worst, tol, failures,
      fmt::format("mu={:.6g} (bound {:.6g}) worst relative gap: tangent/N bound {:.3g}, rho bound "
                  "{:.3g}",
                  params.mu, params.mu_bound, worst_first, worst_second));
}

namespace {

double mean_below(const std::vector<RunRecord>& trace, std::size_t limit, double RunRecord::*field) {
  long double acc = 0.0L;
  std::size_t count = 0;
  for (const RunRecord& r : trace) {
    if (r.iter >= limit) continue;
    acc += r.*field;
    ++count;
  }
  if (count == 0) throw ContractViolation("trace has no rows in the requested window");
  return static_cast<double>(acc / static_cast<long double>(count));
}

double ratio(double num, double den) { return den == 0.0 ? (num == 0.0 ? 0.0 : INFINITY) : num / den; }

}  // namespace

PropertyReport check_rate_halving(const std::vector<RunRecord>& shorter,
                                  const std::vector<RunRecord>& longer, std::size_t k) {
  const double g = ratio(mean_below(longer, 2 * k, &RunRecord::grad_norm_sq),
                         mean_below(shorter, k, &RunRecord::grad_norm_sq));
  const double nx = ratio(mean_below(longer, 2 * k, &RunRecord::n_of_x),
                          mean_below(shorter, k, &RunRecord::n_of_x));
  const double worst = std::max(g, nx);
  return make_report("rate_halving", 2, worst, 0.75, (g > 0.75) + (nx > 0.75),
                     fmt::format("K={} mean ratio grad_norm_sq {:.4g}, n_of_x {:.4g}", k, g, nx));
}

PropertyReport check_best_ratio(const std::vector<RunRecord>& shorter,
                                const std::vector<RunRecord>& longer, double bound) {
  return check_best_ratio(std::vector<std::vector<RunRecord>>{shorter},
                          std::vector<std::vector<RunRecord>>{longer}, bound);
}

PropertyReport check_best_ratio(const std::vector<std::vector<RunRecord>>& shorter,
                                const std::vector<std::vector<RunRecord>>& longer, double bound) {
  auto mean_best = [](const std::vector<std::vector<RunRecord>>& runs) {
    if (runs.empty()) throw ContractViolation("no traces");
    double acc = 0.0;
    for (const auto& t : runs) {
      if (t.empty()) throw ContractViolation("empty trace");
      double b = INFINITY;
      for (const RunRecord& r : t) b = std::min(b, r.grad_norm_sq);
      acc += b;
    }
    return acc / static_cast<double>(runs.size());
  };
  const double r = ratio(mean_best(longer), mean_best(shorter));
  return make_report("best_grad_ratio", shorter.size() + longer.size(), r, bound, r > bound ? 1 : 0,
                     fmt::format("best grad_norm_sq ratio {:.4g} over {} replicas", r, longer.size()));
}

}  // namespace landing
