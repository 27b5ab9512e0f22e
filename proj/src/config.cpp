#include "landing/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "landing/errors.hpp"

namespace landing {

std::string to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::pca: return "pca";
    case ProblemKind::ica: return "ica";
    case ProblemKind::linear: return "linear";
  }
  return "?";
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::landing_gd: return "landing_gd";
    case Algorithm::landing_sgd: return "landing_sgd";
    case Algorithm::landing_saga: return "landing_saga";
    case Algorithm::riemannian_gd: return "riemannian_gd";
    case Algorithm::riemannian_sgd: return "riemannian_sgd";
    case Algorithm::penalty_sgd: return "penalty_sgd";
  }
  return "?";
}

std::filesystem::path RunConfig::summary_path() const {
  std::filesystem::path s = output;
  s.replace_extension(".json");
  return s;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct Ctx {
  std::string origin;
  std::size_t line = 0;
  std::string key;

  [[noreturn]] void fail(const std::string& why) const {
    throw ConfigError(fmt::format("{}:{}: {}: {}", origin, line, key, why));
  }
};

template <class T>
T parse_int(const std::string& v, const Ctx& c) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    c.fail(fmt::format("expected a non-negative integer, got '{}'", v));
  return out;
}

double parse_real(const std::string& v, const Ctx& c) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    c.fail(fmt::format("expected a finite number, got '{}'", v));
  return out;
}

double parse_positive(const std::string& v, const Ctx& c) {
  const double x = parse_real(v, c);
  if (!(x > 0.0)) c.fail("must be positive");
  return x;
}

std::size_t parse_count(const std::string& v, const Ctx& c) {
  const auto x = parse_int<std::size_t>(v, c);
  if (x == 0) c.fail("must be at least 1");
  return x;
}

bool parse_bool(const std::string& v, const Ctx& c) {
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  c.fail(fmt::format("expected on/off, got '{}'", v));
}

template <class E>
E parse_enum(const std::string& v, const Ctx& c, std::initializer_list<std::pair<const char*, E>> opts) {
  std::string names;
  for (const auto& [name, value] : opts) {
    if (v == name) return value;
    names += names.empty() ? name : std::string(", ") + name;
  }
  c.fail(fmt::format("unknown value '{}' (expected one of {})", v, names));
}

using Setter = std::function<void(RunConfig&, const std::string&, const Ctx&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"problem",
       [](RunConfig& r, const std::string& v, const Ctx& c) {
         r.problem = parse_enum<ProblemKind>(
             v, c, {{"pca", ProblemKind::pca}, {"ica", ProblemKind::ica}, {"linear", ProblemKind::linear}});
       }},
      {"algorithm",
       [](RunConfig& r, const std::string& v, const Ctx& c) {
         r.algorithm = parse_enum<Algorithm>(v, c,
                                             {{"landing_gd", Algorithm::landing_gd},
                                              {"landing_sgd", Algorithm::landing_sgd},
                                              {"landing_saga", Algorithm::landing_saga},
                                              {"riemannian_gd", Algorithm::riemannian_gd},
                                              {"riemannian_sgd", Algorithm::riemannian_sgd},
                                              {"penalty_sgd", Algorithm::penalty_sgd}});
       }},
      {"seed", [](RunConfig& r, const std::string& v, const Ctx& c) { r.seed = parse_int<std::uint64_t>(v, c); }},
      {"output", [](RunConfig& r, const std::string& v, const Ctx&) { r.output = v; }},

      {"data.n", [](RunConfig& r, const std::string& v, const Ctx& c) { r.n = parse_count(v, c); }},
      {"data.p", [](RunConfig& r, const std::string& v, const Ctx& c) { r.p = parse_count(v, c); }},
      {"data.samples", [](RunConfig& r, const std::string& v, const Ctx& c) { r.samples = parse_count(v, c); }},
      {"data.sigma",
       [](RunConfig& r, const std::string& v, const Ctx& c) {
         r.sigma = parse_real(v, c);
         if (r.sigma < 0.0) c.fail("must be non-negative");
       }},
      {"data.data_seed",
       [](RunConfig& r, const std::string& v, const Ctx& c) { r.data_seed = parse_int<std::uint64_t>(v, c); }},
      {"data.file", [](RunConfig& r, const std::string& v, const Ctx&) { r.data_file = v; }},

      {"landing.lambda", [](RunConfig& r, const std::string& v, const Ctx& c) { r.lambda = parse_positive(v, c); }},
      {"landing.epsilon",
       [](RunConfig& r, const std::string& v, const Ctx& c) {
         r.epsilon = parse_real(v, c);
         if (!(r.epsilon > 0.0 && r.epsilon < 0.75))
           c.fail(fmt::format("{} is outside (0, 0.75); the safe-region radius must satisfy "
                              "0 < epsilon < 3/4",
                              v));
       }},
      {"landing.mu",
       [](RunConfig& r, const std::string& v, const Ctx& c) {
         if (v == "auto")
           r.mu.reset();
         else
           r.mu = parse_positive(v, c);
       }},
      {"landing.constants",
       [](RunConfig& r, const std::string& v, const Ctx& c) {
         r.estimate_constants = parse_enum<bool>(v, c, {{"analytic", false}, {"estimate", true}});
       }},

      {"schedule.kind",
       [](RunConfig& r, const std::string& v, const Ctx& c) {
         using K = StepSchedule::Kind;
         if (v == "auto") {
           r.auto_step = true;
           r.schedule.kind = K::constant;
           return;
         }
         r.auto_step = false;
         r.schedule.kind = parse_enum<K>(v, c,
                                         {{"constant", K::constant},
                                          {"inv_sqrt", K::inv_sqrt},
                                          {"horizon_scaled", K::horizon_scaled},
                                          {"epoch_decay", K::epoch_decay}});
       }},
      {"schedule.eta0", [](RunConfig& r, const std::string& v, const Ctx& c) { r.schedule.eta0 = parse_positive(v, c); }},
      {"schedule.decay_factor",
       [](RunConfig& r, const std::string& v, const Ctx& c) {
         r.schedule.decay_factor = parse_real(v, c);
         if (!(r.schedule.decay_factor >= 1.0)) c.fail("must be at least 1");
       }},
      {"schedule.decay_every",
       [](RunConfig& r, const std::string& v, const Ctx& c) { r.schedule.decay_every = parse_count(v, c); }},
      {"schedule.horizon",
       [](RunConfig& r, const std::string& v, const Ctx& c) { r.schedule.horizon = parse_count(v, c); }},

      {"run.max_iter", [](RunConfig& r, const std::string& v, const Ctx& c) { r.max_iter = parse_count(v, c); }},
      {"run.max_epochs", [](RunConfig& r, const std::string& v, const Ctx& c) { r.max_epochs = parse_positive(v, c); }},
      {"run.log_every", [](RunConfig& r, const std::string& v, const Ctx& c) { r.log_every = parse_count(v, c); }},
      {"run.batch_size", [](RunConfig& r, const std::string& v, const Ctx& c) { r.batch_size = parse_count(v, c); }},
      {"run.sampling",
       [](RunConfig& r, const std::string& v, const Ctx& c) {
         r.sampling = parse_enum<Sampling>(v, c,
                                           {{"with_replacement", Sampling::with_replacement},
                                            {"shuffled", Sampling::shuffled},
                                            {"full_pass", Sampling::full_pass}});
       }},
      {"run.timing", [](RunConfig& r, const std::string& v, const Ctx& c) { r.timing = parse_bool(v, c); }},
      {"run.saga_init",
       [](RunConfig& r, const std::string& v, const Ctx& c) {
         r.saga_init = parse_enum<SagaInit>(v, c, {{"zeros", SagaInit::zeros}, {"first_pass", SagaInit::first_pass}});
       }},
      {"run.retraction",
       [](RunConfig& r, const std::string& v, const Ctx& c) {
         r.retraction = parse_enum<Retraction>(v, c, {{"qr", Retraction::qr}, {"projection", Retraction::projection}});
       }},
      {"run.lambda_pen",
       [](RunConfig& r, const std::string& v, const Ctx& c) {
         r.lambda_pen = parse_real(v, c);
         if (r.lambda_pen < 0.0) c.fail("must be non-negative");
       }},
      {"run.memory_budget_mb",
       [](RunConfig& r, const std::string& v, const Ctx& c) { r.memory_budget_mb = parse_count(v, c); }},
  };
  return table;
}

void apply_problem_defaults(RunConfig& r, const std::set<std::string>& seen) {
  auto missing = [&](const char* k) { return seen.count(k) == 0; };
  switch (r.problem) {
    case ProblemKind::pca:
      if (missing("data.n")) r.n = 20;
      if (missing("data.p")) r.p = 3;
      if (missing("data.samples")) r.samples = 1000;
      break;
    case ProblemKind::ica:
      if (missing("data.n")) r.n = 10;
      if (missing("data.p")) r.p = r.n;
      if (missing("data.samples")) r.samples = 10000;
      break;
    case ProblemKind::linear:
      if (missing("data.n")) r.n = 20;
      if (missing("data.p")) r.p = 5;
      r.samples = 1;
      break;
  }
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir,
                            const std::string& origin) {
  RunConfig r;
  std::set<std::string> seen;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  Ctx ctx{origin, 0, {}};
  while (std::getline(in, raw)) {
    ++ctx.line;
    ctx.key.clear();
    const auto hash = raw.find_first_of("#;");
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        ctx.key = line;
        ctx.fail("unterminated section header");
      }
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      ctx.key = "[" + section + "]";
      if (section != "data" && section != "landing" && section != "schedule" && section != "run")
        ctx.fail("unknown section");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      ctx.key = line;
      ctx.fail("expected key = value");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const std::string full = section.empty() ? key : section + "." + key;
    ctx.key = full;
    const auto it = setters().find(full);
    if (it == setters().end()) ctx.fail("unknown key");
    if (!seen.insert(full).second) ctx.fail("duplicate key");
    if (value.empty()) ctx.fail("empty value");
    it->second(r, value, ctx);
    r.echo.emplace_back(full, value);
  }

  if (!seen.count("problem"))
    throw ConfigError(fmt::format("{}: missing required key 'problem'", origin));
  if (seen.count("run.max_iter") && seen.count("run.max_epochs"))
    throw ConfigError(fmt::format("{}: run.max_iter and run.max_epochs are mutually exclusive", origin));
  if (!seen.count("run.max_iter") && !seen.count("run.max_epochs"))
    throw ConfigError(fmt::format("{}: one of run.max_iter or run.max_epochs is required", origin));

  apply_problem_defaults(r, seen);
  if (r.p > r.n)
    throw ConfigError(fmt::format("{}: data.p = {} exceeds data.n = {}", origin, r.p, r.n));
  if (r.problem == ProblemKind::ica && r.p != r.n)
    throw ConfigError(fmt::format("{}: ica needs data.p = data.n (square unmixing)", origin));
  if (r.problem != ProblemKind::linear && r.batch_size > r.samples)
    throw ConfigError(
        fmt::format("{}: run.batch_size = {} exceeds data.samples = {}", origin, r.batch_size, r.samples));
  if (r.problem == ProblemKind::linear && !r.data_file.empty())
    throw ConfigError(fmt::format("{}: data.file is not supported for linear", origin));

  if (r.output.empty()) {
    r.output = origin.empty() || origin.front() == '<' ? std::filesystem::path("run")
                                                       : std::filesystem::path(origin).filename();
    r.output.replace_extension(".csv");
  }
  if (r.output.is_relative()) r.output = base_dir / r.output;
  if (!r.data_file.empty() && r.data_file.is_relative()) r.data_file = base_dir / r.data_file;
  return r;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config '{}'", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  RunConfig r = parse_config_text(buf.str(), path.parent_path(), path.string());
  r.source = path;
  return r;
}

}  // namespace landing
