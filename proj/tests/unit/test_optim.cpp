#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "landing/decompositions.hpp"
#include "landing/errors.hpp"
#include "landing/geometry.hpp"
#include "landing/merit.hpp"
#include "landing/optim.hpp"
#include "landing/problems.hpp"
#include "landing/sampling.hpp"
#include "oracles.hpp"

using landing::Matrix;
using landing::RunOptions;
using landing::StepSchedule;

namespace {

landing::LandingParams params_for(const landing::Objective& obj, double lambda, double eps) {
  return landing::LandingParams::make(lambda, eps, *obj.analytic_constants(eps));
}

RunOptions quiet(std::size_t iters, std::size_t log_every = 1) {
  RunOptions o;
  o.max_iter = iters;
  o.log_every = log_every;
  o.timing = false;
  return o;
}

void expect_same_trace(const landing::RunResult& a, const landing::RunResult& b) {
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t k = 0; k < a.trace.size(); ++k) {
    const auto& r = a.trace[k];
    const auto& s = b.trace[k];
    EXPECT_EQ(r.iter, s.iter);
    EXPECT_EQ(r.epoch, s.epoch);
    EXPECT_EQ(r.f_value, s.f_value) << "row " << k;
    EXPECT_EQ(r.grad_norm_sq, s.grad_norm_sq) << "row " << k;
    EXPECT_EQ(r.distance, s.distance) << "row " << k;
    EXPECT_EQ(r.merit, s.merit) << "row " << k;
    EXPECT_EQ(r.step_used, s.step_used) << "row " << k;
    EXPECT_EQ(r.clamped, s.clamped) << "row " << k;
  }
  EXPECT_EQ(a.x_final, b.x_final);
}

Matrix pca_start(std::size_t n, std::size_t p, std::uint64_t seed) {
  landing::Rng rng(seed, landing::Stream::init);
  return landing::random_stiefel(n, p, rng);
}

}  // namespace

TEST(StepSchedule, InvSqrtExactValues) {
  const auto s = StepSchedule::inv_sqrt(0.3);
  EXPECT_EQ(s.eta(0, 0.0), 0.3);
  EXPECT_EQ(s.eta(3, 0.0), 0.15);
  EXPECT_LT(s.eta(4, 0.0), s.eta(3, 0.0));
}

TEST(StepSchedule, HorizonScaledIsConstant) {
  const auto s = StepSchedule::horizon_scaled(0.5, 99);
  EXPECT_EQ(s.eta(0, 0.0), 0.05);
  EXPECT_EQ(s.eta(57, 3.0), 0.05);
}

TEST(StepSchedule, EpochDecay) {
  const auto s = StepSchedule::epoch_decay(1.0, 10.0, 30);
  EXPECT_EQ(s.eta(0, 0.0), 1.0);
  EXPECT_EQ(s.eta(100, 29.99), 1.0);
  EXPECT_EQ(s.eta(100, 30.0), 0.1);
  EXPECT_EQ(s.eta(100, 60.0), 0.01);
  EXPECT_THROW(StepSchedule::constant(0.0).eta(0, 0.0), landing::ContractViolation);
}

TEST(StepLanding, StationaryPointIsFixed) {
  const Matrix x = Matrix::identity(5, 2);
  const landing::LinearObjective obj(Matrix(5, 2));
  const auto params = params_for(obj, 1.0, 0.5);
  const auto out = landing::step_landing(x, Matrix(5, 2), params, 0.3);
  EXPECT_EQ(out.x_next, x);
  EXPECT_FALSE(out.clamped);
}

TEST(StepLanding, NormalGradientOnManifoldIsFixed) {
  landing::Rng rng(11);
  const Matrix x = landing::random_stiefel(7, 3, rng);
  const Matrix s = landing::random_symmetric(3, 1.0, rng);
  const Matrix g = oracle::naive_matmul(x, s);
  const landing::LinearObjective obj(g);
  const auto out = landing::step_landing(x, g, params_for(obj, 1.0, 0.5), 0.2);
  EXPECT_LT(oracle::max_diff(out.x_next, x), 1e-14);
}

TEST(StepLanding, MatchesScalarRecomputation) {
  std::mt19937_64 gen(12);
  const std::size_t n = 5, p = 2;
  const double lambda = 1.3, eps = 0.5;
  Matrix x = oracle::random_orthonormal(n, p, gen);
  x += oracle::gaussian(n, p, gen, 0.05);
  const Matrix m = oracle::gaussian(n, p, gen, 2.0);
  const landing::LinearObjective obj(m);
  const auto params = landing::LandingParams::make(lambda, eps, *obj.analytic_constants(eps));

  // elementwise field in long double
  long double gram[2][2] = {};
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < p; ++b)
      for (std::size_t k = 0; k < n; ++k) gram[a][b] += static_cast<long double>(x(k, a)) * x(k, b);
  long double dsq = 0.0L;
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < p; ++b) {
      const long double e = gram[a][b] - (a == b ? 1.0L : 0.0L);
      dsq += e * e;
    }
  std::vector<long double> field(n * p, 0.0L);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      long double acc = 0.0L;
      for (std::size_t k = 0; k < n; ++k) {
        long double gx_ik = 0.0L, gx_ki = 0.0L;
        for (std::size_t c = 0; c < p; ++c) {
          gx_ik += static_cast<long double>(m(i, c)) * x(k, c);
          gx_ki += static_cast<long double>(m(k, c)) * x(i, c);
        }
        acc += 0.5L * (gx_ik - gx_ki) * x(k, j);
      }
      for (std::size_t c = 0; c < p; ++c) {
        acc += lambda * x(i, c) * (gram[c][j] - (c == j ? 1.0L : 0.0L));
      }
      field[i * p + j] = acc;
    }
  }
  long double gsq = 0.0L;
  for (long double v : field) gsq += v * v;
  const long double d = std::sqrt(dsq);
  const long double g2 = gsq;
  const long double t = lambda * d * (1 - d);
  const long double first = (t + std::sqrt(t * t + g2 * (eps - d))) / g2;
  const long double guard = std::min<long double>(first, 1.0L / (2 * lambda));
  const double sched = 10.0;  // forces the clamp
  const auto out = landing::step_landing(x, m, params, sched);
  EXPECT_TRUE(out.clamped);
  EXPECT_NEAR(out.eta_used, static_cast<double>(guard), 1e-13 * static_cast<double>(guard));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j)
      EXPECT_NEAR(out.x_next(i, j), static_cast<double>(x(i, j) - guard * field[i * p + j]), 1e-13);
  EXPECT_LE(landing::distance(out.x_next), eps + 1e-12);

  const auto small = landing::step_landing(x, m, params, 1e-3);
  EXPECT_FALSE(small.clamped);
  EXPECT_EQ(small.eta_used, 1e-3);
}

TEST(StepLanding, RejectsPointOutsideSafeRegion) {
  landing::Rng rng(13);
  const Matrix x = 1.5 * landing::random_stiefel(6, 2, rng);
  const landing::LinearObjective obj(rng.gaussian(6, 2));
  EXPECT_THROW(landing::step_landing(x, obj.m(), params_for(obj, 1.0, 0.5), 0.1),
               landing::ContractViolation);
}

TEST(LandingGd, ConstantObjectiveFlowsToManifold) {
  landing::Rng rng(14);
  const Matrix x0 = landing::random_safe_point(8, 3, 0.45, rng);
  const landing::LinearObjective obj(Matrix(8, 3));
  const auto params = landing::LandingParams::make(1.0, 0.5, *obj.analytic_constants(0.5));
  const auto res = landing::run_landing_gd(obj, x0, params, StepSchedule::constant(0.3), quiet(200));
  for (std::size_t k = 1; k < res.trace.size(); ++k) {
    // monotone down to the rounding floor of X^T X
    EXPECT_LE(res.trace[k].n_of_x, res.trace[k - 1].n_of_x + 1e-30);
  }
  EXPECT_LT(res.trace.back().n_of_x, 1e-25);
}

TEST(LandingGd, PcaRecoversTopEigenvectors) {
  const auto inst = landing::gen_pca_data(20, 3, 400, 0.1, 15);
  const landing::PcaObjective obj(inst.data, 3);
  const auto params = params_for(obj, 1.0, 0.5);
  const auto res = landing::run_landing_gd(obj, pca_start(20, 3, 15), params,
                                           StepSchedule::constant(0.5), quiet(3000, 100));
  EXPECT_LT(res.trace.back().grad_norm_sq, 1e-10);
  EXPECT_LT(landing::max_principal_angle(res.x_final, obj.top_eigenvectors()), 1e-4);
  for (const auto& r : res.trace) EXPECT_LE(r.distance, 0.5 + 1e-12);
  EXPECT_EQ(res.trace.back().iter, 3000u);
}

TEST(LandingGd, MeritNonincreasingWithTheoryStep) {
  const auto inst = landing::gen_pca_data(10, 2, 100, 0.1, 16);
  const landing::PcaObjective obj(inst.data, 2);
  const auto params = params_for(obj, 1.0, 0.5);
  landing::Rng rng(16);
  const Matrix x0 = landing::random_safe_point(10, 2, 0.4, rng);
  const double eta = landing::theory_step_gd(params);
  const auto res = landing::run_landing_gd(obj, x0, params, StepSchedule::constant(eta), quiet(500));
  for (std::size_t k = 1; k < res.trace.size(); ++k) {
    EXPECT_LE(res.trace[k].merit, res.trace[k - 1].merit + 1e-13 * std::abs(res.trace[k - 1].merit))
        << "k=" << k;
  }
}

TEST(LandingGd, LogsEveryAndFinalRow) {
  const landing::QuadraticObjective obj(Matrix::identity(6), 2);
  const auto params = params_for(obj, 1.0, 0.5);
  const auto res = landing::run_landing_gd(obj, Matrix::identity(6, 2), params,
                                           StepSchedule::constant(0.1), quiet(25, 10));
  ASSERT_EQ(res.trace.size(), 4u);
  EXPECT_EQ(res.trace[0].iter, 0u);
  EXPECT_EQ(res.trace[0].step_used, 0.0);
  EXPECT_EQ(res.trace[2].iter, 20u);
  EXPECT_EQ(res.trace[3].iter, 25u);
  EXPECT_EQ(res.trace[3].epoch, 25.0);
  for (const auto& r : res.trace) {
    EXPECT_NEAR(r.distance * r.distance, 4 * r.n_of_x, 1e-10 * (r.n_of_x + 1e-300));
  }
}

TEST(LandingSgd, FullPassEqualsGd) {
  const auto inst = landing::gen_pca_data(12, 2, 60, 0.1, 17);
  const landing::PcaObjective obj(inst.data, 2);
  const auto params = params_for(obj, 1.0, 0.5);
  const Matrix x0 = pca_start(12, 2, 17);
  auto opts = quiet(50, 5);
  const auto gd = landing::run_landing_gd(obj, x0, params, StepSchedule::constant(0.2), opts);
  opts.sampling = landing::Sampling::full_pass;
  opts.batch_size = 60;
  const auto sgd = landing::run_landing_sgd(obj, x0, params, StepSchedule::constant(0.2), opts);
  expect_same_trace(gd, sgd);
}

TEST(LandingSgd, ReproducibleUnderSeed) {
  const auto inst = landing::gen_pca_data(12, 2, 60, 0.1, 18);
  const landing::PcaObjective obj(inst.data, 2);
  const auto params = params_for(obj, 1.0, 0.5);
  const Matrix x0 = pca_start(12, 2, 18);
  auto opts = quiet(80, 7);
  opts.batch_size = 4;
  opts.seed = 5;
  const auto a = landing::run_landing_sgd(obj, x0, params, StepSchedule::constant(0.2), opts);
  const auto b = landing::run_landing_sgd(obj, x0, params, StepSchedule::constant(0.2), opts);
  expect_same_trace(a, b);
  EXPECT_EQ(a.trace.back().epoch, 80.0 * 4 / 60);
  opts.seed = 6;
  const auto c = landing::run_landing_sgd(obj, x0, params, StepSchedule::constant(0.2), opts);
  EXPECT_NE(a.x_final, c.x_final);
  EXPECT_EQ(a.sample_grad_evals, 320u);
}

TEST(LandingSgd, ShuffledModeVisitsEachSampleOncePerEpoch) {
  const auto inst = landing::gen_pca_data(8, 2, 30, 0.1, 19);
  const landing::PcaObjective obj(inst.data, 2);
  const auto params = params_for(obj, 1.0, 0.5);
  auto opts = quiet(30, 10);
  opts.sampling = landing::Sampling::shuffled;
  opts.batch_size = 3;
  const auto res = landing::run_landing_sgd(obj, pca_start(8, 2, 19), params,
                                            StepSchedule::constant(0.1), opts);
  EXPECT_EQ(res.trace.back().epoch, 3.0);
  for (const auto& r : res.trace) EXPECT_LE(r.distance, 0.5 + 1e-12);
}

TEST(LandingSgd, VarianceMatchesEnumeration) {
  const auto inst = landing::gen_pca_data(9, 2, 40, 0.1, 20);
  const landing::PcaObjective obj(inst.data, 2);
  landing::Rng rng(20);
  const Matrix x = landing::random_safe_point(9, 2, 0.3, rng);
  const double lambda = 0.7;
  const Matrix full = landing::landing_field(obj.grad_full(x), x, lambda).total;
  long double acc = 0.0L;
  for (std::size_t i = 0; i < 40; ++i) {
    const std::size_t one[1] = {i};
    const Matrix li = landing::landing_field(obj.grad_samples(one, x), x, lambda).total;
    acc += oracle::sum_sq(li - full);
  }
  const double expect = static_cast<double>(acc / 40);
  EXPECT_NEAR(landing::variance_estimate(obj, x, 40), expect, 1e-10 * expect);
}

TEST(LandingSgd, DecreasingStepImprovesWithHorizon) {
  const auto inst = landing::gen_pca_data(10, 2, 200, 0.1, 21);
  const landing::PcaObjective obj(inst.data, 2);
  const auto params = params_for(obj, 1.0, 0.5);
  const Matrix x0 = pca_start(10, 2, 21);
  auto best = [&](std::size_t iters) {
    auto opts = quiet(iters, 1);
    opts.seed = 3;
    const auto res = landing::run_landing_sgd(obj, x0, params, StepSchedule::inv_sqrt(0.5), opts);
    double m = INFINITY;
    for (const auto& r : res.trace) m = std::min(m, r.grad_norm_sq);
    return m;
  };
  EXPECT_LT(best(2000), best(500));
}

TEST(Saga, FreshMemoryGivesFullField) {
  const auto inst = landing::gen_pca_data(8, 2, 20, 0.1, 22);
  const landing::PcaObjective obj(inst.data, 2);
  landing::Rng rng(22);
  const Matrix x = landing::random_safe_point(8, 2, 0.3, rng);
  const auto state = landing::SagaState::first_pass(obj, x);
  const Matrix full = landing::landing_field(obj.grad_full(x), x, 1.0).total;
  for (std::size_t i = 0; i < 20; ++i) {
    const std::size_t idx[1] = {i};
    const Matrix fresh[1] = {obj.grad_sample(i, x)};
    const Matrix dir = landing::landing_direction(
        landing::saga_gradient_estimate(state, idx, fresh), x, 1.0).field;
    EXPECT_LT(oracle::max_diff(dir, full), 1e-13 * (1 + landing::max_abs(full)));
  }
}

TEST(Saga, MeanUpdateIsQuarterOfChange) {
  landing::SagaState s(4, 3, 2);
  landing::Rng rng(23);
  const Matrix a = rng.gaussian(3, 2);
  s.replace(2, a, 5);
  EXPECT_EQ(s.mean(), 0.25 * a);
  EXPECT_EQ(s.last_update(2), 5u);
  const Matrix b = rng.gaussian(3, 2);
  s.replace(2, b, 6);
  EXPECT_LT(oracle::max_diff(s.mean(), 0.25 * b), 1e-15);
  EXPECT_LT(s.resync(), 1e-15);
  EXPECT_THROW(s.replace(4, a, 7), landing::ContractViolation);
}

TEST(Saga, UnbiasedByEnumeration) {
  const auto inst = landing::gen_pca_data(7, 2, 15, 0.1, 24);
  const landing::PcaObjective obj(inst.data, 2);
  landing::Rng rng(24);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix x = landing::random_safe_point(7, 2, 0.45, rng);
    landing::SagaState state(15, 7, 2);
    for (std::size_t i = 0; i < 15; ++i) state.replace(i, rng.gaussian(7, 2), 0);
    state.resync();
    Matrix avg(7, 2);
    for (std::size_t i = 0; i < 15; ++i) {
      const std::size_t idx[1] = {i};
      const Matrix fresh[1] = {obj.grad_sample(i, x)};
      avg.add_scaled(landing::landing_direction(
                         landing::saga_gradient_estimate(state, idx, fresh), x, 2.0).field,
                     1.0 / 15);
    }
    const Matrix full = landing::landing_field(obj.grad_full(x), x, 2.0).total;
    EXPECT_LT(oracle::max_diff(avg, full), 1e-12) << "rep " << rep;
  }
}

TEST(Saga, StepRejectsBadIndex) {
  const landing::QuadraticObjective obj(Matrix::identity(4), 2);
  landing::SagaState state(1, 4, 2);
  const std::size_t idx[1] = {1};
  EXPECT_THROW(landing::step_saga(Matrix::identity(4, 2), idx, obj, state,
                                  params_for(obj, 1.0, 0.5), 0.1, 0),
               landing::ContractViolation);
}

TEST(Saga, SingleSampleEqualsGd) {
  landing::Rng rng(25);
  const Matrix c = landing::random_symmetric(6, 2.0, rng);
  const landing::QuadraticObjective obj(c, 2);
  const auto params = params_for(obj, 1.0, 0.5);
  const Matrix x0 = landing::random_safe_point(6, 2, 0.3, rng);
  const auto opts = quiet(60, 1);
  const auto gd = landing::run_landing_gd(obj, x0, params, StepSchedule::constant(0.1), opts);
  for (auto init : {landing::SagaInit::first_pass, landing::SagaInit::zeros}) {
    const auto saga =
        landing::run_landing_saga(obj, x0, params, StepSchedule::constant(0.1), opts, init);
    expect_same_trace(gd, saga);
  }
}

TEST(Saga, MemoryBudgetRejectedUpFront) {
  const auto inst = landing::gen_pca_data(10, 2, 100, 0.1, 26);
  const landing::PcaObjective obj(inst.data, 2);
  auto opts = quiet(10);
  opts.memory_budget = 100 * 10 * 2 * 8 - 1;
  EXPECT_THROW(landing::run_landing_saga(obj, pca_start(10, 2, 26), params_for(obj, 1.0, 0.5),
                                         StepSchedule::constant(0.1), opts,
                                         landing::SagaInit::first_pass),
               landing::ConfigError);
}

TEST(Saga, IcaRunStaysSafeAndLands) {
  const auto inst = landing::gen_ica_data(5, 400, 27);
  const landing::IcaObjective obj(inst.data, 5);
  landing::Rng rng(27);
  const auto c = landing::smoothness_estimate(obj, 0.5, 10, rng);
  const auto params = landing::LandingParams::make(1.0, 0.5, c);
  auto opts = quiet(2000, 50);
  opts.batch_size = 10;
  const Matrix x0 = landing::random_stiefel(5, 5, rng);
  const auto res = landing::run_landing_saga(obj, x0, params, StepSchedule::constant(0.2), opts,
                                             landing::SagaInit::first_pass);
  for (const auto& r : res.trace) EXPECT_LE(r.distance, 0.5 + 1e-12);
  EXPECT_LT(res.trace.back().n_of_x, 1e-8);
  EXPECT_EQ(res.sample_grad_evals, 400u + 2000u * 10u);
  EXPECT_EQ(res.trace.back().epoch, 50.0);
}

TEST(Retraction, ZeroStepIsIdentity) {
  landing::Rng rng(28);
  const Matrix x = landing::random_stiefel(7, 3, rng);
  EXPECT_LT(oracle::max_diff(landing::qr_retraction(x, Matrix(7, 3)), x), 1e-14);
  EXPECT_LT(oracle::max_diff(landing::projection_retraction(x, Matrix(7, 3)), x), 1e-14);
}

TEST(Retraction, ScaledOrthonormalProjectsToHalf) {
  landing::Rng rng(29);
  const Matrix q = landing::random_stiefel(6, 2, rng);
  const Matrix y = 2.0 * q;
  const Matrix r = landing::projection_retraction(q, y - q);
  EXPECT_LT(oracle::max_diff(r, 0.5 * y), 1e-14);
}

TEST(Retraction, OrthonormalAndFirstOrder) {
  landing::Rng rng(30);
  const Matrix x = landing::random_stiefel(9, 3, rng);
  // tangent direction: skew A times X
  const Matrix z0 = landing::riemannian_gradient_ext(rng.gaussian(9, 3), x);
  const Matrix z = (1.0 / landing::frobenius_norm(z0)) * z0;
  double prev_qr = 0.0, prev_pr = 0.0;
  for (double t : {1e-2, 1e-3}) {
    const Matrix step = t * z;
    const Matrix rq = landing::qr_retraction(x, step);
    const Matrix rp = landing::projection_retraction(x, step);
    EXPECT_LT(oracle::orthonormality_error(rq), 1e-12);
    EXPECT_LT(oracle::orthonormality_error(rp), 1e-10);
    const double eq = landing::frobenius_norm(rq - (x + step));
    const double ep = landing::frobenius_norm(rp - (x + step));
    EXPECT_LT(eq, 2.0 * t * t);
    EXPECT_LT(ep, 2.0 * t * t);
    EXPECT_LT(landing::frobenius_norm(rq - rp), 2.0 * t * t);
    if (prev_qr > 0.0) {
      // O(t^2): a tenfold smaller t shrinks the error about a hundredfold
      EXPECT_LT(eq, prev_qr / 50);
      EXPECT_LT(ep, prev_pr / 50);
    }
    prev_qr = eq;
    prev_pr = ep;
  }
}

TEST(Riemannian, ZeroGradientFixedPoint) {
  landing::Rng rng(31);
  const Matrix x0 = landing::random_stiefel(6, 2, rng);
  const landing::LinearObjective obj(Matrix(6, 2));
  auto opts = quiet(20, 5);
  opts.sampling = landing::Sampling::full_pass;
  const auto res =
      landing::run_riemannian(obj, x0, landing::Retraction::qr, StepSchedule::constant(0.5), opts);
  EXPECT_LT(oracle::max_diff(res.x_final, x0), 1e-14);
}

TEST(Riemannian, RejectsNonOrthonormalStart) {
  const landing::LinearObjective obj(Matrix(4, 2));
  EXPECT_THROW(landing::run_riemannian(obj, 1.1 * Matrix::identity(4, 2), landing::Retraction::qr,
                                       StepSchedule::constant(0.1), quiet(3)),
               landing::ContractViolation);
}

TEST(Riemannian, LongRunStaysOrthonormal) {
  landing::Rng rng(32);
  const Matrix c = landing::random_symmetric(6, 1.0, rng);
  const landing::QuadraticObjective obj(c, 2);
  auto opts = quiet(100000, 1000);
  opts.sampling = landing::Sampling::full_pass;
  for (auto r : {landing::Retraction::qr, landing::Retraction::projection}) {
    const auto res = landing::run_riemannian(obj, landing::random_stiefel(6, 2, rng), r,
                                             StepSchedule::constant(0.05), opts);
    for (const auto& row : res.trace) EXPECT_LT(row.distance, 1e-10);
    EXPECT_LT(oracle::orthonormality_error(res.x_final), 1e-10);
  }
}

TEST(Riemannian, PcaSameFloorAsLanding) {
  const auto inst = landing::gen_pca_data(15, 3, 300, 0.1, 33);
  const landing::PcaObjective obj(inst.data, 3);
  const Matrix x0 = pca_start(15, 3, 33);
  auto opts = quiet(3000, 3000);
  opts.sampling = landing::Sampling::full_pass;
  const auto riem =
      landing::run_riemannian(obj, x0, landing::Retraction::qr, StepSchedule::constant(0.5), opts);
  const auto land = landing::run_landing_gd(obj, x0, params_for(obj, 1.0, 0.5),
                                            StepSchedule::constant(0.5), opts);
  const double opt = obj.optimal_value();
  EXPECT_NEAR(riem.trace.back().f_value, opt, 1e-10 * std::abs(opt));
  EXPECT_NEAR(land.trace.back().f_value, opt, 1e-10 * std::abs(opt));
  EXPECT_LT(riem.trace.back().grad_norm_sq, 1e-12);
  EXPECT_LT(land.trace.back().grad_norm_sq, 1e-12);
}

TEST(Riemannian, FirstStepDiffersFromLandingAtSecondOrder) {
  const auto inst = landing::gen_pca_data(10, 2, 100, 0.1, 34);
  const landing::PcaObjective obj(inst.data, 2);
  const Matrix x0 = pca_start(10, 2, 34);
  const auto params = params_for(obj, 1.0, 0.5);
  auto gap = [&](double eta) {
    auto opts = quiet(1);
    opts.sampling = landing::Sampling::full_pass;
    const auto r = landing::run_riemannian(obj, x0, landing::Retraction::qr,
                                           StepSchedule::constant(eta), opts);
    const auto l = landing::run_landing_gd(obj, x0, params, StepSchedule::constant(eta), opts);
    return landing::frobenius_norm(r.x_final - l.x_final);
  };
  const double g2 = gap(1e-2);
  const double g3 = gap(1e-3);
  EXPECT_GT(g2, 0.0);
  EXPECT_LT(g3, g2 / 50);
  EXPECT_GT(g3, g2 / 200);
}

TEST(Penalty, ZeroWeightIsPlainGradientDescent) {
  landing::Rng rng(35);
  const Matrix c = landing::random_symmetric(5, 1.0, rng);
  const landing::QuadraticObjective obj(c, 2);
  const Matrix x0 = rng.gaussian(5, 2);
  auto opts = quiet(10, 10);
  opts.sampling = landing::Sampling::full_pass;
  const auto res = landing::run_penalty_sgd(obj, x0, 0.0, StepSchedule::constant(0.1), opts);
  Matrix x = x0;
  for (int k = 0; k < 10; ++k) {
    const Matrix g = oracle::naive_matmul(c, x);
    for (std::size_t i = 0; i < x.size(); ++i) x.values()[i] -= 0.1 * g.values()[i];
  }
  EXPECT_LT(oracle::max_diff(res.x_final, x), 1e-14);
  for (const auto& r : res.trace) EXPECT_FALSE(r.clamped);
}

TEST(Penalty, LinearConvergesToPenaltyOracle) {
  landing::Rng rng(36);
  const Matrix m = rng.gaussian(6, 2);
  const landing::LinearObjective obj(m);
  const double lam = 2.0;
  const auto oracle_pt = landing::penalty_oracle(m, lam);
  auto opts = quiet(20000, 20000);
  opts.sampling = landing::Sampling::full_pass;
  const auto res = landing::run_penalty_sgd(obj, landing::random_stiefel(6, 2, rng), lam,
                                            StepSchedule::constant(0.02), opts);
  EXPECT_LT(landing::frobenius_norm(res.x_final - oracle_pt.x_star), 1e-8);
  // the penalty solution is off the manifold
  EXPECT_GT(landing::distance(res.x_final), 1e-2);
}

TEST(Penalty, LargeWeightConvergesSlower) {
  landing::Rng rng(37);
  const Matrix m = rng.gaussian(6, 2);
  const landing::LinearObjective obj(m);
  const Matrix x0 = landing::random_stiefel(6, 2, rng);
  const double mn = landing::frobenius_norm(m);
  auto progress = [&](double lam) {
    const auto oracle_pt = landing::penalty_oracle(m, lam);
    const Matrix& target = oracle_pt.x_star;
    // stable step for curvature about lam * (3 sigma*^2 - 1) + ||M||
    const double sigma =
        *std::max_element(oracle_pt.sigma_star.begin(), oracle_pt.sigma_star.end());
    const double eta = 0.5 / (lam * (3 * sigma * sigma + 1) + mn);
    auto opts = quiet(300, 300);
    opts.sampling = landing::Sampling::full_pass;
    const auto res = landing::run_penalty_sgd(obj, x0, lam, StepSchedule::constant(eta), opts);
    return landing::frobenius_norm(res.x_final - target) / landing::frobenius_norm(x0 - target);
  };
  EXPECT_GT(progress(100.0), 10 * progress(1.0));
}
