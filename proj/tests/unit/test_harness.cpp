#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "landing/errors.hpp"
#include "landing/harness.hpp"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("landing_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void put(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

nlohmann::json summary(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

std::string error_of(const std::string& text) {
  try {
    landing::parse_config_text(text, ".");
  } catch (const landing::ConfigError& e) {
    return e.what();
  }
  return {};
}

const char* kTinyPca = R"(problem = pca
algorithm = landing_gd
seed = 5
[data]
n = 8
p = 2
samples = 60
[schedule]
kind = constant
eta0 = 0.5
[run]
max_iter = 1500
log_every = 100
timing = off
)";

}  // namespace

TEST(Config, MinimalGetsDefaults) {
  const auto c = landing::parse_config_text("problem = pca\n[run]\nmax_iter = 10\n", "/tmp/x");
  EXPECT_EQ(c.lambda, 1.0);
  EXPECT_EQ(c.epsilon, 0.5);
  EXPECT_FALSE(c.mu.has_value());
  EXPECT_EQ(c.algorithm, landing::Algorithm::landing_gd);
  EXPECT_EQ(c.batch_size, 1u);
  EXPECT_EQ(c.output, fs::path("/tmp/x/run.csv"));
  EXPECT_EQ(c.summary_path(), fs::path("/tmp/x/run.json"));
}

TEST(Config, MissingProblemNamed) {
  EXPECT_NE(error_of("[run]\nmax_iter = 3\n").find("problem"), std::string::npos);
}

TEST(Config, EpsilonAboveThreeQuartersRejected) {
  const std::string e = error_of("problem = pca\n[landing]\nepsilon = 0.9\n[run]\nmax_iter = 3\n");
  EXPECT_NE(e.find("3/4"), std::string::npos) << e;
  EXPECT_NE(e.find(":3:"), std::string::npos) << e;
}

TEST(Config, UnknownKeyCarriesLine) {
  const std::string e = error_of("problem = pca\n\n[run]\nmax_iter = 3\nmax_iters = 4\n");
  EXPECT_NE(e.find(":5:"), std::string::npos) << e;
  EXPECT_NE(e.find("run.max_iters"), std::string::npos) << e;
}

TEST(Config, Validation) {
  EXPECT_NE(error_of("problem = pca\n[run]\nmax_iter = 3\nmax_epochs = 2\n"), "");
  EXPECT_NE(error_of("problem = pca\n"), "");
  EXPECT_NE(error_of("problem = svd\n[run]\nmax_iter = 3\n"), "");
  EXPECT_NE(error_of("problem = pca\n[run]\nmax_iter = 3\n[bogus]\n"), "");
  EXPECT_NE(error_of("problem = pca\n[run]\nmax_iter = 3\nmax_iter = 4\n"), "");
  EXPECT_NE(error_of("problem = pca\n[run]\nmax_iter = -3\n"), "");
  EXPECT_NE(error_of("problem = pca\n[data]\nn = 3\np = 4\n[run]\nmax_iter = 3\n"), "");
  EXPECT_NE(error_of("problem = pca\n[run]\nmax_iter = 3\nsampling = random\n"), "");
  EXPECT_EQ(error_of("problem = ica  # comment\n[run]\nmax_epochs = 2.5\n"), "");
}

TEST(Config, EpochBudget) {
  auto c = landing::parse_config_text(
      "problem = pca\nalgorithm = landing_saga\n[data]\nsamples = 100\n[run]\nmax_epochs = 3\nbatch_size = 10\n", ".");
  const auto inst = landing::build_problem(c);
  EXPECT_EQ(landing::resolve_iterations(c, *inst.objective), 20u);
  c.saga_init = landing::SagaInit::zeros;
  EXPECT_EQ(landing::resolve_iterations(c, *inst.objective), 30u);
  c.algorithm = landing::Algorithm::landing_gd;
  EXPECT_EQ(landing::resolve_iterations(c, *inst.objective), 3u);
}

TEST(Experiment, ByteIdenticalReruns) {
  const fs::path d = scratch("rerun");
  for (const char* algo : {"landing_gd", "landing_sgd", "landing_saga", "riemannian_sgd", "penalty_sgd"}) {
    std::string text = kTinyPca;
    text.replace(text.find("landing_gd"), 10, algo);
    text.replace(text.find("eta0 = 0.5"), 10, "eta0 = 0.05");
    put(d / "a.ini", text);
    const auto cfg = landing::parse_config(d / "a.ini");
    ASSERT_TRUE(landing::run_experiment(cfg).ok) << algo;
    const std::string first = slurp(cfg.output);
    ASSERT_TRUE(landing::run_experiment(cfg).ok);
    EXPECT_EQ(first, slurp(cfg.output)) << algo;
  }
}

TEST(Experiment, TinyPcaLandsOnManifold) {
  const fs::path d = scratch("tiny");
  put(d / "tiny.ini", kTinyPca);
  const auto cfg = landing::parse_config(d / "tiny.ini");
  const auto out = landing::run_experiment(cfg);
  ASSERT_TRUE(out.ok) << out.error;
  EXPECT_EQ(out.csv, d / "tiny.csv");

  std::ifstream in(out.csv);
  std::string header, line, last;
  std::getline(in, header);
  EXPECT_EQ(header, "iter,epoch,wall_time_s,f_value,grad_norm_sq,distance,n_of_x,merit,step_used,clamped");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    last = line;
    ++rows;
  }
  EXPECT_EQ(rows, 16u);
  std::vector<std::string> cells;
  std::stringstream ss(last);
  for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
  ASSERT_EQ(cells.size(), 10u);
  EXPECT_EQ(cells[0], "1500");
  EXPECT_LT(std::stod(cells[6]), 1e-12);

  const auto s = summary(out.summary);
  EXPECT_EQ(s["status"], "ok");
  EXPECT_EQ(s["config"]["data.n"], "8");
  EXPECT_LT(s["final"]["n_of_x"].get<double>(), 1e-12);
  EXPECT_TRUE(s["variance_estimate_B"].is_number());
  EXPECT_LT(std::abs(s["loss_gap"].get<double>()), 1e-8);
}

TEST(Experiment, PenaltyStaysFarFromManifold) {
  const fs::path d = scratch("penalty");
  const std::string base = R"(problem = linear
seed = 3
[data]
n = 20
p = 5
[run]
max_iter = 4000
log_every = 4000
lambda_pen = 100
timing = off
)";
  put(d / "penalty.ini", "algorithm = penalty_sgd\n" + base + "[schedule]\neta0 = 0.002\n");
  put(d / "landing.ini", "algorithm = landing_gd\n" + base + "[schedule]\neta0 = 0.2\n");
  ASSERT_TRUE(landing::run_experiment(landing::parse_config(d / "penalty.ini")).ok);
  ASSERT_TRUE(landing::run_experiment(landing::parse_config(d / "landing.ini")).ok);
  const double pen = summary(d / "penalty.json")["final"]["distance"];
  const double land = summary(d / "landing.json")["final"]["distance"];
  EXPECT_GT(pen, 1e-3);
  EXPECT_GT(pen, 1e6 * land) << pen << " vs " << land;
}

TEST(Experiment, FailureWritesSummary) {
  const fs::path d = scratch("fail");
  put(d / "bad.ini", "problem = pca\nalgorithm = landing_saga\n[data]\nn = 100\nsamples = 2000\n[run]\n"
                     "max_iter = 5\nmemory_budget_mb = 1\n");
  const auto out = landing::run_experiment(landing::parse_config(d / "bad.ini"));
  EXPECT_FALSE(out.ok);
  const auto s = summary(d / "bad.json");
  EXPECT_EQ(s["status"], "failed");
  EXPECT_NE(s["error"].get<std::string>().find("memory"), std::string::npos);
}

TEST(Experiment, IcaReportsAmari) {
  const fs::path d = scratch("ica");
  put(d / "ica.ini", "problem = ica\nalgorithm = landing_sgd\n[data]\nn = 4\nsamples = 500\n"
                     "[schedule]\neta0 = 0.05\n[run]\nmax_epochs = 2\nlog_every = 100\ntiming = off\n");
  const auto out = landing::run_experiment(landing::parse_config(d / "ica.ini"));
  ASSERT_TRUE(out.ok) << out.error;
  const auto s = summary(out.summary);
  EXPECT_TRUE(s["amari_distance"].is_number());
  EXPECT_EQ(s["iterations"], 1000);
}

TEST(Experiment, GeneratedDataRoundTrips) {
  const fs::path d = scratch("gen");
  const auto spec = landing::parse_config_text("problem = pca\nseed = 9\n[data]\nn = 6\np = 2\nsamples = 40\n"
                                               "[run]\nmax_iter = 200\ntiming = off\n",
                                               d);
  landing::generate_data(spec, d / "pca.bin");
  auto from_file = spec;
  from_file.data_file = d / "pca.bin";
  from_file.output = d / "file.csv";
  auto direct = spec;
  direct.output = d / "direct.csv";
  ASSERT_TRUE(landing::run_experiment(from_file).ok);
  ASSERT_TRUE(landing::run_experiment(direct).ok);
  EXPECT_EQ(slurp(d / "file.csv"), slurp(d / "direct.csv"));
}

namespace {

fs::path seed_grid(const std::string& name) {
  const fs::path d = scratch(name);
  for (int seed : {1, 2, 3}) {
    put(d / fmt::format("s{}.ini", seed),
        fmt::format("problem = pca\nalgorithm = landing_sgd\nseed = {}\n[data]\nn = 10\np = 2\nsamples = 100\n"
                    "data_seed = 77\n[schedule]\neta0 = 0.1\n[run]\nmax_iter = 300\nlog_every = 10\ntiming = off\n",
                    seed));
  }
  return d;
}

}  // namespace

TEST(Grid, JobsDoNotChangeTraces) {
  const fs::path one = seed_grid("grid1");
  const fs::path four = seed_grid("grid4");
  EXPECT_EQ(landing::run_grid(one, 1).failed, 0u);
  EXPECT_EQ(landing::run_grid(four, 4).failed, 0u);
  for (int seed : {1, 2, 3}) {
    const std::string f = fmt::format("s{}.csv", seed);
    EXPECT_EQ(slurp(one / f), slurp(four / f)) << f;
  }
}

TEST(Grid, SeedsGiveDistinctTracesSameConfig) {
  const fs::path d = seed_grid("seeds");
  const auto g = landing::run_grid(d, 2);
  EXPECT_EQ(g.runs, 3u);
  EXPECT_NE(slurp(d / "s1.csv"), slurp(d / "s2.csv"));
  EXPECT_NE(slurp(d / "s2.csv"), slurp(d / "s3.csv"));
  auto e1 = summary(d / "s1.json")["config"];
  auto e2 = summary(d / "s2.json")["config"];
  EXPECT_NE(e1["seed"], e2["seed"]);
  e1.erase("seed");
  e2.erase("seed");
  EXPECT_EQ(e1, e2);
  const auto index = summary(g.index);
  EXPECT_EQ(index["runs"].size(), 3u);
  EXPECT_EQ(index["runs"][0]["status"], "ok");
}

TEST(Grid, EmptyDirectory) {
  const fs::path d = scratch("empty");
  const auto g = landing::run_grid(d, 4);
  EXPECT_EQ(g.runs, 0u);
  EXPECT_EQ(g.failed, 0u);
  EXPECT_TRUE(summary(g.index)["runs"].empty());
}

TEST(Grid, FailuresIsolated) {
  const fs::path d = seed_grid("isolated");
  put(d / "broken.ini", "problem = pca\n[run]\nmax_iter = 2\nwhat = 1\n");
  put(d / "clash.ini", "problem = pca\noutput = s1.csv\n[run]\nmax_iter = 2\n");
  const auto g = landing::run_grid(d, 3);
  EXPECT_EQ(g.runs, 5u);
  EXPECT_EQ(g.failed, 2u);
  EXPECT_TRUE(fs::exists(d / "s3.csv"));
}
