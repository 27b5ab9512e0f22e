#include <cstdio>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "landing/errors.hpp"
#include "landing/harness.hpp"

namespace {

int cmd_run(const std::string& path) {
  const landing::RunConfig cfg = landing::parse_config(path);
  const landing::ExperimentOutcome out = landing::run_experiment(cfg);
  if (!out.ok) return 1;
  const landing::RunRecord& last = out.result->trace.back();
  fmt::print("{}: {} iterations, f = {:.10g}, grad_norm_sq = {:.3e}, n_of_x = {:.3e}\n  trace   {}\n  summary {}\n",
             path, out.result->iterations, last.f_value, last.grad_norm_sq, last.n_of_x, out.csv.string(),
             out.summary.string());
  return 0;
}

int cmd_grid(const std::string& dir, std::size_t jobs) {
  const landing::GridOutcome g = landing::run_grid(dir, jobs);
  fmt::print("{} runs, {} failed; index {}\n", g.runs, g.failed, g.index.string());
  return g.failed == 0 ? 0 : 1;
}

int cmd_verify(const std::string& suite, const landing::SuiteOptions& opts, bool json) {
  std::vector<std::string> suites;
  if (suite == "all")
    suites = landing::suite_names();
  else
    suites.push_back(suite);
  bool ok = true;
  for (const auto& name : suites) {
    const auto reports = landing::run_suite(name, opts);
    if (json) {
      fmt::print("{}\n", landing::reports_json(name, reports));
    } else {
      fmt::print("[{}] seed {}\n", name, opts.seed);
      for (const auto& r : reports) {
        fmt::print("  {:<36} {}  worst {:.3e}  tol {:.1e}  draws {}  failures {}{}\n", r.name,
                   r.passed ? "pass" : "FAIL", r.worst_violation, r.tolerance, r.draws, r.failures,
                   r.note.empty() ? "" : "  (" + r.note + ")");
      }
    }
    for (const auto& r : reports) ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  landing::configure_logging();
  CLI::App app{"Retraction-free optimization on the Stiefel manifold"};
  app.require_subcommand(1);

  std::string config;
  auto* run = app.add_subcommand("run", "run one configuration");
  run->add_option("config", config, "INI run configuration")->required()->check(CLI::ExistingFile);

  std::string dir;
  std::size_t jobs = 1;
  auto* grid = app.add_subcommand("grid", "run every *.ini in a directory");
  grid->add_option("dir", dir)->required()->check(CLI::ExistingDirectory);
  grid->add_option("--jobs,-j", jobs, "concurrent runs")->check(CLI::PositiveNumber);

  std::string suite;
  landing::SuiteOptions sopts;
  sopts.seed = 42;
  bool json = false;
  auto* verify = app.add_subcommand("verify", "run a property suite");
  verify->add_option("suite", suite, "geometry | merit | descent | oracle | all")->required();
  verify->add_option("--seed", sopts.seed);
  verify->add_option("--safeguard-scale", sopts.safeguard_scale, "multiply the safeguard step (negative control)");
  verify->add_option("--mu-scale", sopts.mu_scale, "multiply the merit weight bound (negative control)");
  verify->add_flag("--json", json);

  std::string gen_config;
  std::string out;
  auto* gen = app.add_subcommand("gen-data", "write the dataset a configuration describes");
  gen->add_option("config", gen_config)->required()->check(CLI::ExistingFile);
  gen->add_option("-o,--output", out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config);
    if (*grid) return cmd_grid(dir, jobs);
    if (*verify) return cmd_verify(suite, sopts, json);
    if (*gen) {
      landing::generate_data(landing::parse_config(gen_config), out);
      fmt::print("wrote {}\n", out);
      return 0;
    }
  } catch (const landing::ConfigError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
