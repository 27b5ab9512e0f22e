#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "landing/matrix.hpp"
#include "landing/merit.hpp"
#include "landing/objective.hpp"
#include "landing/rng.hpp"

namespace landing {

struct StepSchedule {
  enum class Kind { constant, inv_sqrt, horizon_scaled, epoch_decay };

  Kind kind = Kind::constant;
  double eta0 = 0.1;
  double decay_factor = 10.0;      // epoch_decay
  std::size_t decay_every = 1;     // epoch_decay, in epochs
  std::size_t horizon = 0;         // horizon_scaled: K

  static StepSchedule constant(double eta0);
  static StepSchedule inv_sqrt(double eta0);
  static StepSchedule horizon_scaled(double eta0, std::size_t horizon);
  static StepSchedule epoch_decay(double eta0, double factor, std::size_t every);

  /// Step for iteration k (0-based) at the given epoch.
  double eta(std::size_t k, double epoch) const;
};

/// One logged row. Row k describes the iterate X_k; step_used and clamped
/// describe the step that produced X_k (zero / false for k = 0).
struct RunRecord {
  std::size_t iter = 0;
  double epoch = 0.0;
  double wall_time_s = 0.0;
  double f_value = 0.0;
  double grad_norm_sq = 0.0;
  double distance = 0.0;
  double n_of_x = 0.0;
  double merit = 0.0;
  double step_used = 0.0;
  bool clamped = false;
  double field_norm_sq = 0.0;  // ||Lambda(X)||^2, kept out of the CSV schema
};

enum class Sampling {
  with_replacement,
  shuffled,   // epoch-wise permutations; not covered by the analysis
  full_pass,  // every step uses the full gradient
};

enum class SagaInit { zeros, first_pass };
enum class Retraction { qr, projection };

struct RunOptions {
  std::size_t max_iter = 100;
  std::size_t log_every = 1;
  std::uint64_t seed = 0;
  std::size_t batch_size = 1;
  Sampling sampling = Sampling::with_replacement;
  /// false writes 0 into wall_time_s so traces are byte-reproducible
  bool timing = true;
  /// merit column and field_norm_sq for baselines; landing runs take both
  /// from their LandingParams
  double merit_mu = 1.0;
  double field_lambda = 1.0;
  bool estimate_variance = false;
  /// SAGA memory limit in bytes
  std::size_t memory_budget = std::size_t{2} << 30;
};

struct RunResult {
  std::vector<RunRecord> trace;
  Matrix x_final;
  std::size_t iterations = 0;
  std::size_t clamp_count = 0;
  std::size_t sample_grad_evals = 0;
  bool clamp_warning = false;
  /// (1/N) sum_i ||Lambda_i - Lambda||^2 at the final iterate, on a subsample
  std::optional<double> variance_estimate;

  double clamp_rate() const {
    return iterations == 0 ? 0.0 : static_cast<double>(clamp_count) / static_cast<double>(iterations);
  }
};

struct StepOutcome {
  Matrix x_next;
  double eta_used = 0.0;
  bool clamped = false;
  double field_norm = 0.0;
  double distance = 0.0;  // of the input iterate
};

/// X - eta Lambda(X) with eta = min(eta_sched, safeguard step).
StepOutcome step_landing(const Matrix& x, const Matrix& g, const LandingParams& params,
                         double eta_sched);

RunResult run_landing_gd(const Objective& obj, const Matrix& x0, const LandingParams& params,
                         const StepSchedule& sched, RunOptions opts);

RunResult run_landing_sgd(const Objective& obj, const Matrix& x0, const LandingParams& params,
                          const StepSchedule& sched, RunOptions opts);

/// Per-sample gradient table with its running mean.
class SagaState {
 public:
  SagaState(std::size_t big_n, std::size_t n, std::size_t p);
  static SagaState first_pass(const Objective& obj, const Matrix& x0);

  std::size_t size() const { return memory_.size(); }
  const Matrix& slot(std::size_t i) const { return memory_.at(i); }
  const Matrix& mean() const { return mean_; }
  std::size_t last_update(std::size_t i) const { return stamps_.at(i); }

  /// Overwrites slot i and moves the mean by (new - old) / N.
  void replace(std::size_t i, Matrix g, std::size_t iter);
  /// Recomputes the mean from the table; returns the relative drift that was removed.
  double resync();

 private:
  std::vector<Matrix> memory_;
  Matrix mean_;
  std::vector<std::size_t> stamps_;
};

/// Gradient estimate avg_b(g_i) + (mean - avg_b(phi_i)) for distinct indices idx
/// with fresh gradients g_i. Unbiased over uniformly drawn idx.
Matrix saga_gradient_estimate(const SagaState& state, std::span<const std::size_t> idx,
                              std::span<const Matrix> fresh);

struct SagaStepOutcome {
  StepOutcome step;
  std::vector<Matrix> fresh;  // gradients written back into the table
};

/// One SAGA landing step; the table is updated after the direction is formed.
SagaStepOutcome step_saga(const Matrix& x, std::span<const std::size_t> idx, const Objective& obj,
                          SagaState& state, const LandingParams& params, double eta_sched,
                          std::size_t iter);

RunResult run_landing_saga(const Objective& obj, const Matrix& x0, const LandingParams& params,
                           const StepSchedule& sched, RunOptions opts, SagaInit init);

Matrix qr_retraction(const Matrix& x, const Matrix& z);
Matrix projection_retraction(const Matrix& x, const Matrix& z);

/// Riemannian GD (Sampling::full_pass) or SGD with a retraction.
RunResult run_riemannian(const Objective& obj, const Matrix& x0, Retraction retraction,
                         const StepSchedule& sched, RunOptions opts);

/// Euclidean SGD on f + lambda_pen N with no safeguard.
RunResult run_penalty_sgd(const Objective& obj, const Matrix& x0, double lambda_pen,
                          const StepSchedule& sched, RunOptions opts);

/// Empirical (1/|S|) sum_{i in S} ||Lambda_i(X) - Lambda(X)||^2 over up to
/// `max_samples` evenly spaced indices. The normal part cancels, so this is
/// the spread of the Riemannian parts.
double variance_estimate(const Objective& obj, const Matrix& x, std::size_t max_samples = 256);

}  // namespace landing
