#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "landing/optim.hpp"

namespace landing {

enum class ProblemKind { pca, ica, linear };
enum class Algorithm {
  landing_gd,
  landing_sgd,
  landing_saga,
  riemannian_gd,
  riemannian_sgd,
  penalty_sgd,
};

std::string to_string(ProblemKind k);
std::string to_string(Algorithm a);

/// A fully validated run description.
///
/// Top-level keys: problem, algorithm, seed, output. Sections [data],
/// [landing], [schedule] and [run] hold the rest; see README for the list.
struct RunConfig {
  ProblemKind problem = ProblemKind::pca;
  Algorithm algorithm = Algorithm::landing_gd;
  std::uint64_t seed = 0;
  std::filesystem::path output;  // CSV path; the summary goes next to it as .json

  // [data]
  std::size_t n = 0;
  std::size_t p = 0;
  std::size_t samples = 0;
  double sigma = 0.1;
  std::optional<std::uint64_t> data_seed;
  std::filesystem::path data_file;

  // [landing]
  double lambda = 1.0;
  double epsilon = 0.5;
  std::optional<double> mu;  // empty: the lower bound
  bool estimate_constants = false;

  // [schedule]
  bool auto_step = false;
  StepSchedule schedule;

  // [run]
  std::optional<std::size_t> max_iter;
  std::optional<double> max_epochs;
  std::size_t batch_size = 1;
  std::size_t log_every = 1;
  Sampling sampling = Sampling::with_replacement;
  bool timing = true;
  SagaInit saga_init = SagaInit::first_pass;
  Retraction retraction = Retraction::qr;
  double lambda_pen = 1.0;
  std::size_t memory_budget_mb = 2048;

  /// Key/value pairs as written, for the summary's config echo.
  std::vector<std::pair<std::string, std::string>> echo;
  std::filesystem::path source;

  std::uint64_t effective_data_seed() const { return data_seed.value_or(seed); }
  std::filesystem::path summary_path() const;
};

/// Reads and validates an INI-style file. Unknown keys and malformed lines
/// are ConfigErrors carrying the line number; relative paths are resolved
/// against the file's directory.
RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir,
                            const std::string& origin = "<config>");

}  // namespace landing
