#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "landing/config.hpp"
#include "landing/diagnostics.hpp"
#include "landing/merit.hpp"
#include "landing/objective.hpp"
#include "landing/optim.hpp"
#include "landing/problems.hpp"

namespace landing {

/// Objective plus whatever the summary needs to know about its instance.
struct ProblemInstance {
  std::unique_ptr<Objective> objective;
  std::optional<Matrix> mixing;  // ICA ground truth
};

ProblemInstance build_problem(const RunConfig& cfg);

/// Starting point from the init stream: Haar-orthonormal.
Matrix initial_point(const RunConfig& cfg, const Objective& obj);

LandingParams build_params(const RunConfig& cfg, const Objective& obj);
StepSchedule resolve_schedule(const RunConfig& cfg, const Objective& obj,
                              const LandingParams& params);
std::size_t resolve_iterations(const RunConfig& cfg, const Objective& obj);

/// Runs the configured algorithm in memory; no files are touched.
RunResult execute(const RunConfig& cfg, const ProblemInstance& inst);

struct ExperimentOutcome {
  bool ok = false;
  std::string error;
  std::filesystem::path csv;
  std::filesystem::path summary;
  std::optional<RunResult> result;
};

/// Runs one configuration and writes its CSV trace and JSON summary. Errors
/// are caught and reported through a summary with status "failed".
ExperimentOutcome run_experiment(const RunConfig& cfg);

void write_trace_csv(const std::filesystem::path& path, const std::vector<RunRecord>& trace);
std::string trace_csv(const std::vector<RunRecord>& trace);

struct GridOutcome {
  std::size_t runs = 0;
  std::size_t failed = 0;
  std::filesystem::path index;
};

/// Runs every *.ini file of `dir` on up to `jobs` threads and writes
/// grid_index.json into `dir`.
GridOutcome run_grid(const std::filesystem::path& dir, std::size_t jobs);

/// Writes a data container for the problem described by cfg.
void generate_data(const RunConfig& cfg, const std::filesystem::path& out);

/// JSON text of a set of property reports.
std::string reports_json(const std::string& suite, const std::vector<PropertyReport>& reports);

/// LANDING_LOG = error | info | debug (default info).
void configure_logging();

}  // namespace landing
