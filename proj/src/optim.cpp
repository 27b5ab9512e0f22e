#include "landing/optim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "landing/decompositions.hpp"
#include "landing/errors.hpp"
#include "landing/geometry.hpp"

namespace landing {

StepSchedule StepSchedule::constant(double eta0) {
  StepSchedule s;
  s.eta0 = eta0;
  return s;
}

StepSchedule StepSchedule::inv_sqrt(double eta0) {
  StepSchedule s;
  s.kind = Kind::inv_sqrt;
  s.eta0 = eta0;
  return s;
}

StepSchedule StepSchedule::horizon_scaled(double eta0, std::size_t horizon) {
  StepSchedule s;
  s.kind = Kind::horizon_scaled;
  s.eta0 = eta0;
  s.horizon = horizon;
  return s;
}

StepSchedule StepSchedule::epoch_decay(double eta0, double factor, std::size_t every) {
  StepSchedule s;
  s.kind = Kind::epoch_decay;
  s.eta0 = eta0;
  s.decay_factor = factor;
  s.decay_every = every;
  return s;
}

double StepSchedule::eta(std::size_t k, double epoch) const {
  if (!(eta0 > 0.0) || !std::isfinite(eta0)) {
    throw ContractViolation(fmt::format("step schedule: eta0 must be positive, got {}", eta0));
  }
  switch (kind) {
    case Kind::constant:
      return eta0;
    case Kind::inv_sqrt:
      return eta0 / std::sqrt(1.0 + static_cast<double>(k));
    case Kind::horizon_scaled:
      return eta0 / std::sqrt(1.0 + static_cast<double>(horizon));
    case Kind::epoch_decay: {
      if (decay_every == 0 || !(decay_factor >= 1.0)) {
        throw ContractViolation("step schedule: epoch_decay needs decay_every > 0 and factor >= 1");
      }
      const double drops = std::floor(epoch / static_cast<double>(decay_every));
      return drops <= 0.0 ? eta0 : eta0 / std::pow(decay_factor, drops);
    }
  }
  return eta0;
}

namespace {

using Clock = std::chrono::steady_clock;

/// Logs rows and keeps the wall clock for the optimizer only: time spent
/// evaluating the logged quantities is excluded.
class Tracer {
 public:
  Tracer(const Objective& obj, const RunOptions& opts, double lambda, double mu)
      : obj_(obj), opts_(opts), lambda_(lambda), mu_(mu), segment_start_(Clock::now()) {
    if (opts.log_every == 0) throw ContractViolation("log_every must be at least 1");
  }

  bool due(std::size_t k) const { return k % opts_.log_every == 0; }

  /// g may hold the full gradient at x already; otherwise it is computed.
  void record(std::size_t k, double epoch, const Matrix& x, const Matrix* g, double step,
              bool clamped) {
    const auto now = Clock::now();
    elapsed_ += std::chrono::duration<double>(now - segment_start_).count();
    RunRecord r;
    r.iter = k;
    r.epoch = epoch;
    r.wall_time_s = opts_.timing ? elapsed_ : 0.0;
    r.f_value = obj_.value(x);
    Matrix local;
    if (g == nullptr) {
      local = obj_.grad_full(x);
      g = &local;
    }
    const FieldDecomposition fd = landing_field(*g, x, lambda_);
    r.grad_norm_sq = fd.tangent_norm * fd.tangent_norm;
    r.field_norm_sq = frobenius_norm_sq(fd.total);
    r.distance = fd.distance;
    r.n_of_x = 0.25 * fd.distance * fd.distance;
    r.merit = merit_value(x, r.f_value, *g, mu_);
    r.step_used = step;
    r.clamped = clamped;
    if (!std::isfinite(r.f_value) || !std::isfinite(r.grad_norm_sq)) {
      throw NumericalError(fmt::format("iteration {}: non-finite objective or gradient", k));
    }
    rows_.push_back(r);
    last_logged_ = k;
    segment_start_ = Clock::now();
  }

  bool logged(std::size_t k) const { return !rows_.empty() && last_logged_ == k; }
  std::vector<RunRecord> take() { return std::move(rows_); }

 private:
  const Objective& obj_;
  const RunOptions& opts_;
  double lambda_;
  double mu_;
  Clock::time_point segment_start_;
  double elapsed_ = 0.0;
  std::size_t last_logged_ = 0;
  std::vector<RunRecord> rows_;
};

/// Sliding count of clamped steps over the last 100.
class ClampWindow {
 public:
  void push(bool clamped, std::size_t iter) {
    window_.push_back(clamped);
    count_ += clamped ? 1 : 0;
    if (window_.size() > kWidth) {
      count_ -= window_.front() ? 1 : 0;
      window_.pop_front();
    }
    if (!warned_ && window_.size() == kWidth && 2 * count_ > kWidth) {
      warned_ = true;
      spdlog::warn(
          "safeguard clamped {} of the last {} steps (at iteration {}); consider a smaller eta0",
          count_, kWidth, iter);
    }
  }
  bool warned() const { return warned_; }

 private:
  static constexpr std::size_t kWidth = 100;
  std::deque<bool> window_;
  std::size_t count_ = 0;
  bool warned_ = false;
};

template <typename F>
auto at_iteration(std::size_t k, F&& body) {
  try {
    return body();
  } catch (const ContractViolation& e) {
    throw ContractViolation(fmt::format("iteration {}: {}", k, e.what()));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw NumericalError(fmt::format("iteration {}: {}", k, e.what()));
  }
}

void require_start(const Objective& obj, const Matrix& x0) {
  if (x0.rows() != obj.n() || x0.cols() != obj.p()) {
    throw ContractViolation(fmt::format("initial point is {}x{}, objective expects {}x{}",
                                        x0.rows(), x0.cols(), obj.n(), obj.p()));
  }
  require_finite(x0, "initial point");
}

void require_safe_start(const Matrix& x0, const LandingParams& params) {
  const double d = distance(x0);
  if (d > params.epsilon + 1e-12) {
    throw ContractViolation(fmt::format(
        "initial point is outside the safe region: distance {} > epsilon {}", d, params.epsilon));
  }
}

/// Index source for minibatches, drawn from the sampling stream.
class Sampler {
 public:
  Sampler(std::size_t big_n, const RunOptions& opts)
      : big_n_(big_n), batch_(opts.batch_size), mode_(opts.sampling),
        rng_(opts.seed, Stream::sampling), idx_(opts.batch_size) {
    if (batch_ == 0) throw ContractViolation("batch_size must be at least 1");
    if (mode_ == Sampling::shuffled) {
      perm_.resize(big_n_);
      std::iota(perm_.begin(), perm_.end(), std::size_t{0});
      cursor_ = big_n_;
    }
  }

  bool full() const { return mode_ == Sampling::full_pass; }
  std::size_t per_step() const { return full() ? big_n_ : batch_; }

  std::span<const std::size_t> next() {
    if (mode_ == Sampling::with_replacement) {
      for (auto& i : idx_) i = rng_.index(big_n_);
    } else {
      for (auto& i : idx_) {
        if (cursor_ == big_n_) reshuffle();
        i = perm_[cursor_++];
      }
    }
    return idx_;
  }

  /// b distinct indices, uniform over subsets (partial Fisher-Yates).
  std::span<const std::size_t> next_distinct() {
    if (perm_.size() != big_n_) {
      perm_.resize(big_n_);
      std::iota(perm_.begin(), perm_.end(), std::size_t{0});
    }
    for (std::size_t j = 0; j < batch_; ++j) {
      std::swap(perm_[j], perm_[j + rng_.index(big_n_ - j)]);
      idx_[j] = perm_[j];
    }
    return idx_;
  }

 private:
  void reshuffle() {
    for (std::size_t j = big_n_; j > 1; --j) std::swap(perm_[j - 1], perm_[rng_.index(j)]);
    cursor_ = 0;
  }

  std::size_t big_n_;
  std::size_t batch_;
  Sampling mode_;
  Rng rng_;
  std::vector<std::size_t> idx_;
  std::vector<std::size_t> perm_;
  std::size_t cursor_ = 0;
};

double epoch_of(std::size_t k, std::size_t per_step, std::size_t big_n) {
  return static_cast<double>(k) * static_cast<double>(per_step) / static_cast<double>(big_n);
}

void finish(RunResult& out, const Objective& obj, const RunOptions& opts) {
  if (opts.estimate_variance) out.variance_estimate = variance_estimate(obj, out.x_final);
}

}  // namespace

StepOutcome step_landing(const Matrix& x, const Matrix& g, const LandingParams& params,
                         double eta_sched) {
  if (!(eta_sched > 0.0)) {
    throw ContractViolation(fmt::format("scheduled step must be positive, got {}", eta_sched));
  }
  LandingDirection dir = landing_direction(g, x, params.lambda);
  if (dir.distance > params.epsilon + 1e-12) {
    throw ContractViolation(fmt::format("iterate outside the safe region: distance {} > epsilon {}",
                                        dir.distance, params.epsilon));
  }
  StepOutcome out;
  out.field_norm = frobenius_norm(dir.field);
  out.distance = dir.distance;
  const double guard = safeguard_eta(out.field_norm, dir.distance, params.lambda, params.epsilon);
  out.clamped = guard < eta_sched;
  out.eta_used = out.clamped ? guard : eta_sched;
  out.x_next = x;
  out.x_next.add_scaled(dir.field, -out.eta_used);
  if (!all_finite(out.x_next)) throw NumericalError("landing step produced non-finite entries");
  return out;
}

RunResult run_landing_gd(const Objective& obj, const Matrix& x0, const LandingParams& params,
                         const StepSchedule& sched, RunOptions opts) {
  opts.sampling = Sampling::full_pass;
  return run_landing_sgd(obj, x0, params, sched, opts);
}

RunResult run_landing_sgd(const Objective& obj, const Matrix& x0, const LandingParams& params,
                          const StepSchedule& sched, RunOptions opts) {
  require_start(obj, x0);
  require_safe_start(x0, params);
  const std::size_t big_n = obj.sample_count();
  Sampler sampler(big_n, opts);
  Tracer tracer(obj, opts, params.lambda, params.mu);
  ClampWindow window;
  RunResult out;
  Matrix x = x0;
  double last_step = 0.0;
  bool last_clamped = false;
  for (std::size_t k = 0; k < opts.max_iter; ++k) {
    at_iteration(k, [&] {
      const double epoch = epoch_of(k, sampler.per_step(), big_n);
      Matrix g;
      if (sampler.full()) {
        g = obj.grad_full(x);
        if (tracer.due(k)) tracer.record(k, epoch, x, &g, last_step, last_clamped);
      } else {
        if (tracer.due(k)) tracer.record(k, epoch, x, nullptr, last_step, last_clamped);
        g = obj.grad_samples(sampler.next(), x);
      }
      out.sample_grad_evals += sampler.per_step();
      StepOutcome s = step_landing(x, g, params, sched.eta(k, epoch));
      x = std::move(s.x_next);
      last_step = s.eta_used;
      last_clamped = s.clamped;
      out.clamp_count += s.clamped ? 1 : 0;
      window.push(s.clamped, k);
      return 0;
    });
  }
  const std::size_t k = opts.max_iter;
  if (!tracer.logged(k)) {
    at_iteration(k, [&] {
      tracer.record(k, epoch_of(k, sampler.per_step(), big_n), x, nullptr, last_step,
                    last_clamped);
      return 0;
    });
  }
  out.trace = tracer.take();
  out.iterations = opts.max_iter;
  out.clamp_warning = window.warned();
  out.x_final = std::move(x);
  finish(out, obj, opts);
  return out;
}

SagaState::SagaState(std::size_t big_n, std::size_t n, std::size_t p)
    : memory_(big_n, Matrix(n, p)), mean_(n, p), stamps_(big_n, 0) {
  if (big_n == 0) throw ContractViolation("SAGA memory needs at least one sample");
}

SagaState SagaState::first_pass(const Objective& obj, const Matrix& x0) {
  SagaState s(obj.sample_count(), obj.n(), obj.p());
  for (std::size_t i = 0; i < s.size(); ++i) s.memory_[i] = obj.grad_sample(i, x0);
  s.resync();
  return s;
}

void SagaState::replace(std::size_t i, Matrix g, std::size_t iter) {
  if (i >= memory_.size()) {
    throw ContractViolation(fmt::format("SAGA slot {} out of range [0, {})", i, memory_.size()));
  }
  require_same_shape(g, mean_, "SAGA slot update");
  Matrix delta = g - memory_[i];
  mean_.add_scaled(delta, 1.0 / static_cast<double>(memory_.size()));
  memory_[i] = std::move(g);
  stamps_[i] = iter;
}

double SagaState::resync() {
  Matrix sum(mean_.rows(), mean_.cols());
  for (const Matrix& m : memory_) sum += m;
  sum *= 1.0 / static_cast<double>(memory_.size());
  const double scale = std::max(frobenius_norm(sum), 1e-300);
  const double drift = frobenius_norm(sum - mean_) / scale;
  mean_ = std::move(sum);
  return drift;
}

Matrix saga_gradient_estimate(const SagaState& state, std::span<const std::size_t> idx,
                              std::span<const Matrix> fresh) {
  if (idx.empty() || idx.size() != fresh.size()) {
    throw ContractViolation("SAGA estimate needs one fresh gradient per index");
  }
  const double w = 1.0 / static_cast<double>(idx.size());
  if (idx.size() == 1) {
    // g + (mean - phi) is exactly g when the slot equals the mean
    return fresh[0] + (state.mean() - state.slot(idx[0]));
  }
  Matrix g_avg(state.mean().rows(), state.mean().cols());
  Matrix phi_avg(g_avg.rows(), g_avg.cols());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    g_avg.add_scaled(fresh[j], w);
    phi_avg.add_scaled(state.slot(idx[j]), w);
  }
  return g_avg + (state.mean() - phi_avg);
}

SagaStepOutcome step_saga(const Matrix& x, std::span<const std::size_t> idx, const Objective& obj,
                          SagaState& state, const LandingParams& params, double eta_sched,
                          std::size_t iter) {
  for (std::size_t i : idx) {
    if (i >= state.size()) {
      throw ContractViolation(fmt::format("SAGA index {} out of range [0, {})", i, state.size()));
    }
  }
  SagaStepOutcome out;
  out.fresh.reserve(idx.size());
  for (std::size_t i : idx) out.fresh.push_back(obj.grad_sample(i, x));
  const Matrix g = saga_gradient_estimate(state, idx, out.fresh);
  out.step = step_landing(x, g, params, eta_sched);
  for (std::size_t j = 0; j < idx.size(); ++j) state.replace(idx[j], out.fresh[j], iter);
  return out;
}

RunResult run_landing_saga(const Objective& obj, const Matrix& x0, const LandingParams& params,
                           const StepSchedule& sched, RunOptions opts, SagaInit init) {
  require_start(obj, x0);
  require_safe_start(x0, params);
  const std::size_t big_n = obj.sample_count();
  const double bytes = static_cast<double>(big_n) * static_cast<double>(obj.n()) *
                       static_cast<double>(obj.p()) * sizeof(double);
  if (bytes > static_cast<double>(opts.memory_budget)) {
    throw ConfigError(fmt::format("SAGA memory needs {:.3g} bytes, budget is {} bytes", bytes,
                                  opts.memory_budget));
  }
  if (opts.batch_size == 0 || opts.batch_size > big_n) {
    throw ConfigError(
        fmt::format("SAGA batch_size must be in [1, {}], got {}", big_n, opts.batch_size));
  }
  opts.sampling = Sampling::with_replacement;
  Sampler sampler(big_n, opts);
  Tracer tracer(obj, opts, params.lambda, params.mu);
  ClampWindow window;
  RunResult out;

  SagaState state = init == SagaInit::first_pass ? SagaState::first_pass(obj, x0)
                                                 : SagaState(big_n, obj.n(), obj.p());
  if (init == SagaInit::first_pass) out.sample_grad_evals += big_n;
  const std::size_t resync_every = std::max<std::size_t>(1, big_n / opts.batch_size);

  Matrix x = x0;
  double last_step = 0.0;
  bool last_clamped = false;
  for (std::size_t k = 0; k < opts.max_iter; ++k) {
    at_iteration(k, [&] {
      const double epoch = epoch_of(k, opts.batch_size, big_n);
      if (tracer.due(k)) tracer.record(k, epoch, x, nullptr, last_step, last_clamped);
      SagaStepOutcome s =
          step_saga(x, sampler.next_distinct(), obj, state, params, sched.eta(k, epoch), k);
      out.sample_grad_evals += opts.batch_size;
      x = std::move(s.step.x_next);
      last_step = s.step.eta_used;
      last_clamped = s.step.clamped;
      out.clamp_count += last_clamped ? 1 : 0;
      window.push(last_clamped, k);
      if ((k + 1) % resync_every == 0) {
        const double drift = state.resync();
        if (drift > 1e-10) spdlog::debug("SAGA mean drift {:.3g} at iteration {}", drift, k);
      }
      return 0;
    });
  }
  const std::size_t k = opts.max_iter;
  if (!tracer.logged(k)) {
    at_iteration(k, [&] {
      tracer.record(k, epoch_of(k, opts.batch_size, big_n), x, nullptr, last_step, last_clamped);
      return 0;
    });
  }
  out.trace = tracer.take();
  out.iterations = opts.max_iter;
  out.clamp_warning = window.warned();
  out.x_final = std::move(x);
  finish(out, obj, opts);
  return out;
}

Matrix qr_retraction(const Matrix& x, const Matrix& z) {
  require_same_shape(x, z, "qr_retraction");
  return thin_qr(x + z).q;
}

Matrix projection_retraction(const Matrix& x, const Matrix& z) {
  require_same_shape(x, z, "projection_retraction");
  const Matrix y = x + z;
  return matmul(y, spd_inv_sqrt(matmul_tn(y, y)));
}

namespace {

/// Shared loop of the two baselines: `direction` returns the update D with
/// X_next = update(X, -eta D).
template <typename Direction, typename Update>
RunResult run_baseline(const Objective& obj, const Matrix& x0, const StepSchedule& sched,
                       const RunOptions& opts, Direction direction, Update update) {
  const std::size_t big_n = obj.sample_count();
  Sampler sampler(big_n, opts);
  Tracer tracer(obj, opts, opts.field_lambda, opts.merit_mu);
  RunResult out;
  Matrix x = x0;
  double last_step = 0.0;
  for (std::size_t k = 0; k < opts.max_iter; ++k) {
    at_iteration(k, [&] {
      const double epoch = epoch_of(k, sampler.per_step(), big_n);
      Matrix g;
      if (sampler.full()) {
        g = obj.grad_full(x);
        if (tracer.due(k)) tracer.record(k, epoch, x, &g, last_step, false);
      } else {
        if (tracer.due(k)) tracer.record(k, epoch, x, nullptr, last_step, false);
        g = obj.grad_samples(sampler.next(), x);
      }
      out.sample_grad_evals += sampler.per_step();
      const double eta = sched.eta(k, epoch);
      x = update(x, direction(g, x) *= -eta, k);
      if (!all_finite(x)) throw NumericalError("iterate became non-finite");
      last_step = eta;
      return 0;
    });
  }
  const std::size_t k = opts.max_iter;
  if (!tracer.logged(k)) {
    at_iteration(k, [&] {
      tracer.record(k, epoch_of(k, sampler.per_step(), big_n), x, nullptr, last_step, false);
      return 0;
    });
  }
  out.trace = tracer.take();
  out.iterations = opts.max_iter;
  out.x_final = std::move(x);
  finish(out, obj, opts);
  return out;
}

constexpr std::size_t kReorthEvery = 1000;

}  // namespace

RunResult run_riemannian(const Objective& obj, const Matrix& x0, Retraction retraction,
                         const StepSchedule& sched, RunOptions opts) {
  require_start(obj, x0);
  const double d = distance(x0);
  if (d > 1e-10) {
    throw ContractViolation(fmt::format("Riemannian start must be orthonormal, distance is {}", d));
  }
  auto direction = [](const Matrix& g, const Matrix& x) { return riemannian_gradient_ext(g, x); };
  auto update = [retraction](const Matrix& x, const Matrix& z, std::size_t k) {
    Matrix next = retraction == Retraction::qr ? qr_retraction(x, z) : projection_retraction(x, z);
    if ((k + 1) % kReorthEvery == 0) next = thin_qr(next).q;
    return next;
  };
  return run_baseline(obj, x0, sched, opts, direction, update);
}

RunResult run_penalty_sgd(const Objective& obj, const Matrix& x0, double lambda_pen,
                          const StepSchedule& sched, RunOptions opts) {
  require_start(obj, x0);
  if (!(lambda_pen >= 0.0)) {
    throw ContractViolation(fmt::format("penalty weight must be nonnegative, got {}", lambda_pen));
  }
  auto direction = [lambda_pen](const Matrix& g, const Matrix& x) {
    Matrix dir = g;
    if (lambda_pen > 0.0) dir.add_scaled(normal_gradient(x), lambda_pen);
    return dir;
  };
  auto update = [](const Matrix& x, const Matrix& z, std::size_t) { return x + z; };
  return run_baseline(obj, x0, sched, opts, direction, update);
}

double variance_estimate(const Objective& obj, const Matrix& x, std::size_t max_samples) {
  const std::size_t big_n = obj.sample_count();
  const std::size_t m = std::min(big_n, std::max<std::size_t>(1, max_samples));
  const Matrix g = obj.grad_full(x);
  long double acc = 0.0L;
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t i = j * big_n / m;
    const Matrix diff = obj.grad_sample(i, x) - g;
    acc += frobenius_norm_sq(riemannian_gradient_ext(diff, x));
  }
  return static_cast<double>(acc / static_cast<long double>(m));
}

}  // namespace landing
