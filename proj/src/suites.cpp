#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "landing/decompositions.hpp"
#include "landing/diagnostics.hpp"
#include "landing/errors.hpp"
#include "landing/geometry.hpp"
#include "landing/problems.hpp"
#include "landing/sampling.hpp"

namespace landing {

namespace {

std::uint64_t sub(std::uint64_t seed, std::uint64_t k) { return splitmix64(seed + 0x51u * k); }

PropertyReport recursive_containment(std::uint64_t seed, double scale) {
  const double eps = 0.5;
  const double lambda = 1.0;
  const double a_tilde = 2.0;
  const double eta = scale * safeguard_eta_star(a_tilde, eps, lambda);
  Rng rng(seed, Stream::diagnostics);
  const std::size_t chains = 10;
  const std::size_t steps = 500;
  double worst = -INFINITY;
  std::size_t failures = 0;
  for (std::size_t c = 0; c < chains; ++c) {
    Matrix x = random_safe_point(12, 3, eps, rng);
    for (std::size_t k = 0; k < steps; ++k) {
      Matrix a = random_skew(12, rng);
      a *= a_tilde / frobenius_norm(matmul(a, x));
      const FieldDecomposition fd = general_field(a, x, lambda);
      x.add_scaled(fd.total, -eta);
      const double v = distance(x) - eps;
      worst = std::max(worst, v);
      if (v > 1e-12) {
        ++failures;
        break;
      }
    }
  }
  return make_report("recursive_containment", chains * steps, worst, 1e-12, failures,
                     fmt::format("eta = {} x eta* = {:.6g}", scale, eta));
}

PropertyReport fd_normal_oracle(std::uint64_t seed) {
  Rng rng(seed, Stream::diagnostics);
  double worst = 0.0;
  const std::size_t draws = 50;
  for (std::size_t k = 0; k < draws; ++k) {
    const Matrix x = random_safe_point(9, 3, 0.5 * (0.1 + 0.9 * rng.uniform()), rng);
    const Matrix gn = normal_gradient(x);
    const double fd =
        fd_directional_derivative([](const Matrix& y) { return distance_sq(y); }, x, gn, 1e-5);
    const double exact = frobenius_norm_sq(gn);
    worst = std::max(worst, std::abs(fd - exact) / exact);
  }
  return make_report("fd_oracle_normal", draws, worst, 1e-7);
}

/// Weak, nearly isotropic convex quadratic on single columns. Along the
/// normal direction of a shrunk point the h-term contributes
/// -2 tr(X^T C X Delta^2), which only the mu N part of the merit can absorb,
/// so a merit weight well below the bound shows up here.
QuadraticObjective weak_quadratic(std::uint64_t seed) {
  Rng rng(seed, Stream::data);
  const std::size_t n = 5;
  const Matrix q = random_stiefel(n, n, rng);
  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = 0.1 * (1.0 - 0.02 * static_cast<double>(i));
  return QuadraticObjective(sym_part(matmul_nt(scale_columns(q, diag), q)), 1);
}

LandingParams scaled_params(const Objective& obj, double lambda, double eps, double mu_scale) {
  const auto c = *obj.analytic_constants(eps);
  const LandingParams base = LandingParams::make(lambda, eps, c);
  if (mu_scale == 1.0) return base;
  return LandingParams::make(lambda, eps, c, mu_scale * base.mu_bound, MuPolicy::allow_below);
}

std::vector<PropertyReport> geometry_suite(const SuiteOptions& o) {
  return {
      check_safeguard_containment(30, 5, 1.0, 0.5, 10000, sub(o.seed, 1), o.safeguard_scale),
      check_field_orthogonality(20, 4, 1.5, 0.5, 1000, sub(o.seed, 2)),
      check_field_norm_bounds(20, 4, 1.5, 0.5, 1000, sub(o.seed, 3)),
      check_singular_values(15, 4, 0.5, 1000, sub(o.seed, 4)),
      recursive_containment(sub(o.seed, 5), o.safeguard_scale),
  };
}

std::vector<PropertyReport> merit_suite(const SuiteOptions& o) {
  std::vector<PropertyReport> out;
  out.push_back(fd_normal_oracle(sub(o.seed, 1)));
  const auto inst = gen_pca_data(8, 2, 50, 0.1, sub(o.seed, 2));
  const PcaObjective pca(inst.data, 2);
  out.push_back(check_merit_inequalities(pca, scaled_params(pca, 1.0, 0.5, o.mu_scale), 300,
                                         sub(o.seed, 3)));
  const QuadraticObjective quad = weak_quadratic(sub(o.seed, 4));
  // a smaller eps keeps the bound close to the true threshold, so mu = bound / 2 is caught too
  out.push_back(check_merit_inequalities(quad, scaled_params(quad, 1.0, 0.25, o.mu_scale), 300,
                                         sub(o.seed, 5)));
  return out;
}

std::vector<PropertyReport> descent_suite(const SuiteOptions& o) {
  std::vector<PropertyReport> out;
  const std::size_t k = 300;
  const auto inst = gen_pca_data(20, 3, 200, 0.1, sub(o.seed, 1));
  const PcaObjective obj(inst.data, 3);
  const LandingParams params = LandingParams::make(3.0, 0.1, *obj.analytic_constants(0.1));
  Rng rng(sub(o.seed, 2), Stream::init);
  const Matrix x0 = random_safe_point(20, 3, 0.05, rng);
  RunOptions ro;
  ro.max_iter = 2 * k;
  ro.timing = false;
  const auto gd = run_landing_gd(obj, x0, params, StepSchedule::constant(theory_step_gd(params)), ro);

  double worst_rise = -INFINITY;
  std::size_t rises = 0;
  for (std::size_t i = 1; i < gd.trace.size(); ++i) {
    const double prev = gd.trace[i - 1].merit;
    const double rise = (gd.trace[i].merit - prev) / std::max(1.0, std::abs(prev));
    worst_rise = std::max(worst_rise, rise);
    rises += rise > 1e-12 ? 1 : 0;
  }
  out.push_back(make_report("merit_monotone_theory_step", gd.trace.size() - 1, worst_rise, 1e-12,
                            rises, fmt::format("eta = {:.6g}", theory_step_gd(params))));

  double worst_d = -INFINITY;
  std::size_t outside = 0;
  for (const RunRecord& r : gd.trace) {
    worst_d = std::max(worst_d, r.distance - params.epsilon);
    outside += r.distance > params.epsilon + 1e-12 ? 1 : 0;
  }
  out.push_back(make_report("trajectory_containment", gd.trace.size(), worst_d, 1e-12, outside));
  out.push_back(check_rate_halving(gd.trace, gd.trace, k));

  const LandingParams p1 = LandingParams::make(1.0, 0.5, *obj.analytic_constants(0.5));
  auto sgd = [&](std::size_t iters) {
    std::vector<std::vector<RunRecord>> runs;
    for (std::uint64_t rep = 0; rep < 8; ++rep) {
      RunOptions so;
      so.max_iter = iters;
      so.timing = false;
      so.seed = sub(o.seed, 3 + rep);
      runs.push_back(run_landing_sgd(obj, x0, p1, StepSchedule::horizon_scaled(2.0, iters), so).trace);
    }
    return runs;
  };
  out.push_back(check_best_ratio(sgd(k), sgd(4 * k), 0.6));
  return out;
}

std::vector<PropertyReport> oracle_suite(const SuiteOptions& o) {
  std::vector<PropertyReport> out;
  {
    const auto inst = gen_pca_data(7, 2, 15, 0.1, sub(o.seed, 1));
    const PcaObjective obj(inst.data, 2);
    Rng rng(sub(o.seed, 2), Stream::diagnostics);
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
      const Matrix x = random_safe_point(7, 2, 0.5 * rng.uniform(), rng);
      SagaState state(15, 7, 2);
      for (std::size_t i = 0; i < 15; ++i) state.replace(i, rng.gaussian(7, 2), 0);
      state.resync();
      Matrix avg(7, 2);
      for (std::size_t i = 0; i < 15; ++i) {
        const std::size_t idx[1] = {i};
        const Matrix fresh[1] = {obj.grad_sample(i, x)};
        avg.add_scaled(landing_direction(saga_gradient_estimate(state, idx, fresh), x, 1.0).field,
                       1.0 / 15.0);
      }
      const Matrix full = landing_field(obj.grad_full(x), x, 1.0).total;
      worst = std::max(worst, frobenius_norm(avg - full) / frobenius_norm(full));
    }
    out.push_back(make_report("saga_unbiased", 20, worst, 1e-12));
  }
  {
    Rng rng(sub(o.seed, 3), Stream::data);
    const Matrix m = rng.gaussian(20, 5);
    double worst = 0.0;
    for (double lam : {10.0, 100.0, 1000.0}) {
      const PenaltyOracle po = penalty_oracle(m, lam);
      Matrix g = m;
      g.add_scaled(normal_gradient(po.x_star), lam);
      worst = std::max(worst, frobenius_norm(g) / frobenius_norm(m));
    }
    out.push_back(make_report("penalty_stationarity", 3, worst, 1e-10));
  }
  {
    const auto inst = gen_pca_data(15, 3, 300, 0.1, sub(o.seed, 4));
    const PcaObjective obj(inst.data, 3);
    Rng rng(sub(o.seed, 5), Stream::init);
    RunOptions ro;
    ro.max_iter = 3000;
    ro.log_every = 3000;
    ro.timing = false;
    const auto res = run_landing_gd(obj, random_stiefel(15, 3, rng),
                                    LandingParams::make(1.0, 0.5, *obj.analytic_constants(0.5)),
                                    StepSchedule::constant(0.5), ro);
    out.push_back(make_report("pca_top_subspace", 1,
                              max_principal_angle(res.x_final, obj.top_eigenvectors()), 1e-4));
  }
  {
    const auto inst = gen_pca_data(9, 2, 40, 0.1, sub(o.seed, 6));
    const PcaObjective obj(inst.data, 2);
    Rng rng(sub(o.seed, 7), Stream::diagnostics);
    const Matrix x = random_safe_point(9, 2, 0.3, rng);
    const Matrix full = landing_field(obj.grad_full(x), x, 1.0).total;
    long double acc = 0.0L;
    for (std::size_t i = 0; i < 40; ++i) {
      acc += frobenius_norm_sq(landing_field(obj.grad_sample(i, x), x, 1.0).total - full);
    }
    const double expect = static_cast<double>(acc / 40);
    out.push_back(make_report("variance_enumeration", 40,
                              std::abs(variance_estimate(obj, x, 40) - expect) / expect, 1e-10));
  }
  return out;
}

}  // namespace

std::vector<std::string> suite_names() { return {"geometry", "merit", "descent", "oracle"}; }

std::vector<PropertyReport> run_suite(std::string_view suite, const SuiteOptions& opts) {
  if (suite == "geometry") return geometry_suite(opts);
  if (suite == "merit") return merit_suite(opts);
  if (suite == "descent") return descent_suite(opts);
  if (suite == "oracle") return oracle_suite(opts);
  throw ConfigError(fmt::format("unknown suite '{}' (expected geometry, merit, descent or oracle)",
                                suite));
}

}  // namespace landing
