#include "landing/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "landing/datafile.hpp"
#include "landing/errors.hpp"
#include "landing/geometry.hpp"
#include "landing/sampling.hpp"

namespace landing {

using ojson = nlohmann::ordered_json;

namespace {

bool is_landing(Algorithm a) {
  return a == Algorithm::landing_gd || a == Algorithm::landing_sgd || a == Algorithm::landing_saga;
}

bool full_gradient(Algorithm a) { return a == Algorithm::landing_gd || a == Algorithm::riemannian_gd; }

// non-finite numbers have no JSON literal; write null
ojson num(double x) { return std::isfinite(x) ? ojson(x) : ojson(nullptr); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError(fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw ConfigError(fmt::format("write to '{}' failed", path.string()));
}

}  // namespace

ProblemInstance build_problem(const RunConfig& cfg) {
  ProblemInstance inst;
  const std::uint64_t seed = cfg.effective_data_seed();
  switch (cfg.problem) {
    case ProblemKind::pca: {
      PcaInstance d = cfg.data_file.empty() ? gen_pca_data(cfg.n, cfg.p, cfg.samples, cfg.sigma, seed)
                                            : pca_from_data_file(read_data_file(cfg.data_file));
      if (cfg.p > d.data.cols())
        throw ConfigError(fmt::format("data.p = {} exceeds the data dimension {}", cfg.p, d.data.cols()));
      inst.objective = std::make_unique<PcaObjective>(std::move(d.data), cfg.p);
      break;
    }
    case ProblemKind::ica: {
      IcaInstance d = cfg.data_file.empty() ? gen_ica_data(cfg.n, cfg.samples, seed)
                                            : ica_from_data_file(read_data_file(cfg.data_file));
      const std::size_t n = d.data.cols();
      inst.mixing = std::move(d.mixing);
      inst.objective = std::make_unique<IcaObjective>(std::move(d.data), n);
      break;
    }
    case ProblemKind::linear: {
      Rng rng(seed, Stream::data);
      Matrix m = rng.gaussian(cfg.n, cfg.p);
      m *= 1.0 / std::sqrt(static_cast<double>(cfg.n));
      inst.objective = std::make_unique<LinearObjective>(std::move(m));
      break;
    }
  }
  return inst;
}

Matrix initial_point(const RunConfig& cfg, const Objective& obj) {
  Rng rng(cfg.seed, Stream::init);
  return random_stiefel(obj.n(), obj.p(), rng);
}

LandingParams build_params(const RunConfig& cfg, const Objective& obj) {
  std::optional<SmoothnessConstants> c;
  if (!cfg.estimate_constants) c = obj.analytic_constants(cfg.epsilon);
  if (!c) {
    if (!cfg.estimate_constants)
      spdlog::info("{}: no closed-form constants, estimating on the safe region", obj.name());
    Rng rng(cfg.seed, Stream::diagnostics);
    c = smoothness_estimate(obj, cfg.epsilon, 64, rng);
  }
  return LandingParams::make(cfg.lambda, cfg.epsilon, *c, cfg.mu);
}

std::size_t resolve_iterations(const RunConfig& cfg, const Objective& obj) {
  if (cfg.max_iter) return *cfg.max_iter;
  const double big_n = static_cast<double>(obj.sample_count());
  double epochs = *cfg.max_epochs;
  if (full_gradient(cfg.algorithm) || cfg.sampling == Sampling::full_pass) {
    return static_cast<std::size_t>(std::ceil(epochs));
  }
  // the initial SAGA table costs one pass
  if (cfg.algorithm == Algorithm::landing_saga && cfg.saga_init == SagaInit::first_pass) epochs -= 1.0;
  if (epochs <= 0.0) throw ConfigError("run.max_epochs leaves no budget after the SAGA initial pass");
  return std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(epochs * big_n / static_cast<double>(cfg.batch_size))));
}

StepSchedule resolve_schedule(const RunConfig& cfg, const Objective& obj, const LandingParams& params) {
  StepSchedule s = cfg.schedule;
  if (cfg.auto_step) {
    if (!is_landing(cfg.algorithm))
      throw ConfigError(fmt::format("schedule.kind = auto is only defined for landing algorithms, not {}",
                                    to_string(cfg.algorithm)));
    s = StepSchedule::constant(cfg.algorithm == Algorithm::landing_saga
                                   ? theory_step_saga(params, obj.sample_count(), params.L_smooth)
                                   : theory_step_gd(params));
  }
  if (s.kind == StepSchedule::Kind::horizon_scaled && s.horizon == 0) s.horizon = resolve_iterations(cfg, obj);
  return s;
}

namespace {

RunResult execute_with(const RunConfig& cfg, const Objective& obj, const LandingParams& params,
                       const StepSchedule& sched) {
  RunOptions o;
  o.max_iter = resolve_iterations(cfg, obj);
  o.log_every = cfg.log_every;
  o.seed = cfg.seed;
  o.batch_size = cfg.batch_size;
  o.sampling = cfg.sampling;
  o.timing = cfg.timing;
  o.merit_mu = params.mu;
  o.field_lambda = params.lambda;
  o.estimate_variance = true;
  o.memory_budget = cfg.memory_budget_mb << 20;
  const Matrix x0 = initial_point(cfg, obj);

  spdlog::debug("{} on {} (n={}, p={}, N={}): {} iterations, eta0={:.6g}", to_string(cfg.algorithm), obj.name(),
                obj.n(), obj.p(), obj.sample_count(), o.max_iter, sched.eta0);
  switch (cfg.algorithm) {
    case Algorithm::landing_gd: return run_landing_gd(obj, x0, params, sched, o);
    case Algorithm::landing_sgd: return run_landing_sgd(obj, x0, params, sched, o);
    case Algorithm::landing_saga: return run_landing_saga(obj, x0, params, sched, o, cfg.saga_init);
    case Algorithm::riemannian_gd:
      o.sampling = Sampling::full_pass;
      return run_riemannian(obj, x0, cfg.retraction, sched, o);
    case Algorithm::riemannian_sgd: return run_riemannian(obj, x0, cfg.retraction, sched, o);
    case Algorithm::penalty_sgd: return run_penalty_sgd(obj, x0, cfg.lambda_pen, sched, o);
  }
  throw ConfigError("unknown algorithm");
}

}  // namespace

RunResult execute(const RunConfig& cfg, const ProblemInstance& inst) {
  const Objective& obj = *inst.objective;
  const LandingParams params = build_params(cfg, obj);
  return execute_with(cfg, obj, params, resolve_schedule(cfg, obj, params));
}

std::string trace_csv(const std::vector<RunRecord>& trace) {
  std::string out = "iter,epoch,wall_time_s,f_value,grad_norm_sq,distance,n_of_x,merit,step_used,clamped\n";
  for (const RunRecord& r : trace) {
    fmt::format_to(std::back_inserter(out), "{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{}\n",
                   r.iter, r.epoch, r.wall_time_s, r.f_value, r.grad_norm_sq, r.distance, r.n_of_x, r.merit,
                   r.step_used, r.clamped ? 1 : 0);
  }
  return out;
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<RunRecord>& trace) {
  write_text(path, trace_csv(trace));
}

ExperimentOutcome run_experiment(const RunConfig& cfg) {
  ExperimentOutcome out;
  out.csv = cfg.output;
  out.summary = cfg.summary_path();

  ojson s;
  s["status"] = "failed";
  s["error"] = nullptr;
  s["problem"] = to_string(cfg.problem);
  s["algorithm"] = to_string(cfg.algorithm);
  s["seed"] = cfg.seed;
  ojson echo = ojson::object();
  for (const auto& [k, v] : cfg.echo) echo[k] = v;
  s["config"] = echo;
  s["trace"] = out.csv.filename().string();

  try {
    const ProblemInstance inst = build_problem(cfg);
    const Objective& obj = *inst.objective;
    const LandingParams params = build_params(cfg, obj);
    const StepSchedule sched = resolve_schedule(cfg, obj, params);
    RunResult res = execute_with(cfg, obj, params, sched);
    write_trace_csv(out.csv, res.trace);

    const RunRecord& last = res.trace.back();
    double best_grad = INFINITY;
    double best_field = INFINITY;
    for (const RunRecord& r : res.trace) {
      best_grad = std::min(best_grad, r.grad_norm_sq);
      best_field = std::min(best_field, r.field_norm_sq);
    }
    s["status"] = "ok";
    s["n"] = obj.n();
    s["p"] = obj.p();
    s["samples"] = obj.sample_count();
    s["iterations"] = res.iterations;
    s["final"] = {{"iter", last.iter},
                  {"epoch", num(last.epoch)},
                  {"f_value", num(last.f_value)},
                  {"grad_norm_sq", num(last.grad_norm_sq)},
                  {"field_norm_sq", num(last.field_norm_sq)},
                  {"distance", num(last.distance)},
                  {"n_of_x", num(last.n_of_x)},
                  {"merit", num(last.merit)}};
    s["best_grad_norm_sq"] = num(best_grad);
    s["best_field_norm_sq"] = num(best_field);
    s["clamp_rate"] = res.clamp_rate();
    s["clamp_count"] = res.clamp_count;
    s["clamp_warning"] = res.clamp_warning;
    s["sample_grad_evals"] = res.sample_grad_evals;
    s["variance_estimate_B"] = res.variance_estimate ? num(*res.variance_estimate) : ojson(nullptr);
    s["params"] = {{"lambda", params.lambda},   {"epsilon", params.epsilon}, {"mu", num(params.mu)},
                   {"mu_bound", num(params.mu_bound)}, {"eta_star", num(params.eta_star)},
                   {"eta0", num(sched.eta0)}};
    if (const auto* pca = dynamic_cast<const PcaObjective*>(&obj)) {
      // signed: off-manifold iterates can dip below the constrained optimum
      s["loss_gap"] = num(last.f_value - pca->optimal_value());
    }
    if (inst.mixing) s["amari_distance"] = num(amari_distance(matmul_tn(*inst.mixing, res.x_final)));
    out.ok = true;
    out.result = std::move(res);
  } catch (const std::exception& e) {
    out.error = e.what();
    s["error"] = out.error;
    spdlog::error("{}: {}", cfg.source.empty() ? out.csv.string() : cfg.source.string(), out.error);
  }
  try {
    write_text(out.summary, s.dump(2) + "\n");
  } catch (const std::exception& e) {
    out.ok = false;
    if (out.error.empty()) out.error = e.what();
  }
  return out;
}

GridOutcome run_grid(const std::filesystem::path& dir, std::size_t jobs) {
  if (!std::filesystem::is_directory(dir))
    throw ConfigError(fmt::format("'{}' is not a directory", dir.string()));
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".ini") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  struct Slot {
    std::optional<RunConfig> cfg;
    std::string status = "failed";
    std::string error;
  };
  std::vector<Slot> slots(files.size());
  std::map<std::filesystem::path, std::size_t> owners;
  for (std::size_t i = 0; i < files.size(); ++i) {
    try {
      slots[i].cfg = parse_config(files[i]);
    } catch (const std::exception& e) {
      slots[i].error = e.what();
      continue;
    }
    const auto key = std::filesystem::weakly_canonical(slots[i].cfg->output);
    const auto [it, fresh] = owners.emplace(key, i);
    if (!fresh) {
      slots[i].error = fmt::format("output '{}' already used by {}", slots[i].cfg->output.string(),
                                   files[it->second].filename().string());
      slots[i].cfg.reset();
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < slots.size(); i = next++) {
      if (!slots[i].cfg) continue;
      const ExperimentOutcome r = run_experiment(*slots[i].cfg);
      slots[i].status = r.ok ? "ok" : "failed";
      slots[i].error = r.error;
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, files.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  GridOutcome g;
  ojson runs = ojson::array();
  for (std::size_t i = 0; i < files.size(); ++i) {
    ojson r;
    r["config"] = files[i].filename().string();
    r["status"] = slots[i].status;
    if (slots[i].cfg) {
      r["csv"] = slots[i].cfg->output.string();
      r["summary"] = slots[i].cfg->summary_path().string();
    }
    if (!slots[i].error.empty()) r["error"] = slots[i].error;
    g.failed += slots[i].status == "ok" ? 0 : 1;
    runs.push_back(std::move(r));
  }
  g.runs = files.size();
  g.index = dir / "grid_index.json";
  ojson index;
  index["runs"] = std::move(runs);
  index["total"] = g.runs;
  index["failed"] = g.failed;
  write_text(g.index, index.dump(2) + "\n");
  return g;
}

void generate_data(const RunConfig& cfg, const std::filesystem::path& out) {
  const std::uint64_t seed = cfg.effective_data_seed();
  switch (cfg.problem) {
    case ProblemKind::pca:
      write_data_file(out, to_data_file(gen_pca_data(cfg.n, cfg.p, cfg.samples, cfg.sigma, seed)));
      return;
    case ProblemKind::ica:
      write_data_file(out, to_data_file(gen_ica_data(cfg.n, cfg.samples, seed)));
      return;
    case ProblemKind::linear:
      throw ConfigError("linear instances are drawn from the seed; there is no data file to generate");
  }
}

std::string reports_json(const std::string& suite, const std::vector<PropertyReport>& reports) {
  ojson j;
  j["suite"] = suite;
  bool ok = true;
  ojson props = ojson::array();
  for (const PropertyReport& r : reports) {
    ok = ok && r.passed;
    props.push_back({{"name", r.name},
                     {"passed", r.passed},
                     {"draws", r.draws},
                     {"worst_violation", num(r.worst_violation)},
                     {"tolerance", r.tolerance},
                     {"failures", r.failures},
                     {"note", r.note}});
  }
  j["passed"] = ok;
  j["properties"] = std::move(props);
  return j.dump(2);
}

void configure_logging() {
  const char* env = std::getenv("LANDING_LOG");
  const std::string level = env ? env : "info";
  if (level == "error")
    spdlog::set_level(spdlog::level::err);
  else if (level == "debug")
    spdlog::set_level(spdlog::level::debug);
  else {
    spdlog::set_level(spdlog::level::info);
    if (level != "info") spdlog::warn("LANDING_LOG='{}' not recognised, using info", level);
  }
}

}  // namespace landing
