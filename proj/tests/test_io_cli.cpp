#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "sscls/cli.hpp"
#include "sscls/io.hpp"

using namespace sscls;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("sscls_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  /// Runs the CLI binary; returns its exit status and captures stderr.
  int cli(const std::string& args, std::string* err = nullptr) const {
    const std::string err_file = path("stderr.txt");
    const std::string cmd = std::string(SSCLS_CLI_PATH) + " " + args + " > " + path("stdout.txt") +
                            " 2> " + err_file;
    const int status = std::system(cmd.c_str());
    if (err != nullptr) *err = io::read_text(err_file);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path dir_;
};

using Io = TempDir;
using Cli = TempDir;

}  // namespace

TEST_F(Io, ScenarioJsonRoundTrip) {
  for (const char* name : {"compartmental-ti", "compartmental-ti-input", "compartmental-tv", "forest-nitrogen"}) {
    const ScenarioSpec a = scenario_by_name(name);
    io::write_text(path("s.json"), io::scenario_to_json(a).dump());
    const ScenarioSpec b = io::load_scenario(path("s.json"));
    EXPECT_EQ(b.name, a.name);
    ASSERT_EQ(b.modes.size(), a.modes.size());
    for (std::size_t i = 0; i < a.modes.size(); ++i) EXPECT_EQ(b.modes[i], a.modes[i]);
    EXPECT_EQ(b.B.rows(), a.B.rows());
    EXPECT_EQ(b.B, a.B);
    EXPECT_EQ(b.G, a.G);
    EXPECT_EQ(b.constraint.S, a.constraint.S);
    EXPECT_EQ(b.constraint.s, a.constraint.s);
    EXPECT_EQ(b.uncertain_constraint.has_value(), a.uncertain_constraint.has_value());
    EXPECT_EQ(b.x0_id, a.x0_id);
    EXPECT_EQ(b.x0_val, a.x0_val);
    EXPECT_EQ(b.samples, a.samples);
    EXPECT_EQ(b.validation_samples, a.validation_samples);
    EXPECT_EQ(b.lambda, a.lambda);
    EXPECT_EQ(b.mu, a.mu);
    EXPECT_EQ(b.theta0_sigma, a.theta0_sigma);
    EXPECT_EQ(b.P0_scale, a.P0_scale);
    EXPECT_EQ(b.seed, a.seed);
    EXPECT_EQ(b.input.sigma, a.input.sigma);
  }
}

TEST_F(Io, MinimalScenarioJson) {
  io::write_text(path("s.json"), R"({"name": "two", "A": [[0.9, 0.1], [0.1, 0.9]],
    "G": [[1], [-1]], "S": [[1, 1]], "s": [2], "sigma_w": 0.1, "sigma_v": 0.01,
    "x0_id": [1, 1], "x0_val": [2, 0], "N": 50, "seed": 7})");
  const ScenarioSpec sc = io::load_scenario(path("s.json"));
  EXPECT_EQ(sc.states(), 2);
  EXPECT_EQ(sc.inputs(), 0);
  EXPECT_EQ(sc.validation_samples, 50);
  EXPECT_TRUE(check_compatibility(sc.model(), sc.constraint).compatible);

  io::write_text(path("p.json"), R"({"preset": "compartmental-ti", "N": 200, "sigma_v": 0.2})");
  const ScenarioSpec p = io::load_scenario(path("p.json"));
  EXPECT_EQ(p.samples, 200);
  EXPECT_EQ(p.validation_samples, 1000);
  EXPECT_EQ(p.sigma_v, 0.2);
  EXPECT_EQ(p.modes[0], compartmental_mode(1));
}

TEST_F(Io, MalformedScenarioJson) {
  io::write_text(path("bad.json"), R"({"A": [[1, 2], [3]]})");
  EXPECT_THROW(io::load_scenario(path("bad.json")), Error);
  io::write_text(path("bad2.json"), "{not json");
  try {
    io::load_scenario(path("bad2.json"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Parse);
  }
}

TEST_F(Io, TrajectoryCsvIsBitExact) {
  const ScenarioSpec sc = scenario_forest();
  const Trajectory t = simulate_identification(sc, 9, 50);
  const std::string csv = io::trajectory_to_csv(t);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "k,x_1,x_2,x_3,x_4,x_5,y_1,y_2,y_3,y_4,y_5,u_1,mode");
  const Trajectory back = io::trajectory_from_csv(csv);
  EXPECT_EQ(back.x, t.x);
  EXPECT_EQ(back.y, t.y);
  EXPECT_EQ(back.u, t.u);
  EXPECT_EQ(back.schedule, t.schedule);

  const Trajectory tv = simulate_identification(scenario_compartmental_tv(), 2);
  const Trajectory tv_back = io::trajectory_from_csv(io::trajectory_to_csv(tv));
  EXPECT_EQ(tv_back.schedule, tv.schedule);
  EXPECT_THROW(io::trajectory_from_csv("k,x_1,mode\n0,1,0\n"), Error);
}

TEST_F(Io, SummaryCsvHeader) {
  RmseSummary s;
  MethodSummary e;
  e.label = "cls";
  e.rmse_mean = Vector::Constant(2, 0.5);
  e.rmse_std = Vector::Zero(2);
  s.entries.push_back(e);
  const std::string csv = io::summary_to_csv(s);
  EXPECT_EQ(csv, "method,state,rmse_mean,rmse_std,constraint_violation_max,failures\n"
                 "cls,1,0.5,0,0,0\ncls,2,0.5,0,0,0\n");
}

// ---------------------------------------------------------------------------

TEST_F(Cli, MonteCarloWritesSummary) {
  ASSERT_EQ(cli("montecarlo --scenario compartmental-ti --runs 1 --methods ls,cls --base-seed 3 --out " +
                path("mc")),
            0);
  const std::string csv = io::read_text(path("mc/summary.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "method,state,rmse_mean,rmse_std,constraint_violation_max,failures");
  EXPECT_NE(csv.find("\ncls,3,"), std::string::npos);
  EXPECT_TRUE(fs::exists(path("mc/histograms.csv")));
  EXPECT_TRUE(fs::exists(path("mc/runs.csv")));
}

TEST_F(Cli, IdentifyWritesThreeByThreeEstimate) {
  ASSERT_EQ(cli("simulate --scenario compartmental-ti --seed 4 --out " + path("sim")), 0);
  ASSERT_EQ(cli("identify --method cls --data " + path("sim") + " --out " + path("cls.json")), 0);
  const io::json j = io::read_json(path("cls.json"));
  EXPECT_EQ(j.at("method"), "cls");
  ASSERT_EQ(j.at("A_hat").size(), 3u);
  for (const auto& r : j.at("A_hat")) EXPECT_EQ(r.size(), 3u);
  EXPECT_TRUE(j.at("B_hat").is_null());
  EXPECT_EQ(j.at("theta").size(), 9u);
  EXPECT_LE(j.at("constraint_residual").get<double>(), 1e-10);
}

TEST_F(Cli, PipelineMatchesInProcessBitForBit) {
  const ScenarioSpec sc = scenario_compartmental_tv();
  io::write_text(path("tv.json"), io::scenario_to_json(sc).dump());
  ASSERT_EQ(cli("simulate --scenario " + path("tv.json") + " --seed 11 --out " + path("sim")), 0);
  ASSERT_EQ(cli("identify --method rwcls --lambda 0.95 --data " + path("sim") + " --out " + path("e.json")), 0);
  ASSERT_EQ(cli("validate --estimate " + path("e.json") + " --scenario " + path("tv.json") + " --out " +
                path("v.csv")),
            0);

  const Trajectory tr = simulate_identification(sc, 11);
  const Identification id = identify(parse_method_spec("rwcls:0.95", sc), sc, tr, 11);
  const ValidationSet val = make_validation_set(sc);
  std::vector<std::pair<int, Vector>> expected;
  for (std::size_t w = 0; w < id.per_window.size(); ++w)
    expected.emplace_back(id.windows[w].model_id,
                          validate_estimate(id.per_window[w], sc, val, id.windows[w].model_id).rmse);
  EXPECT_EQ(io::read_text(path("v.csv")), io::rmse_to_csv(expected));

  const auto estimates = io::estimates_from_json(io::read_json(path("e.json")), 3, 0);
  ASSERT_EQ(estimates.size(), 3u);
  for (std::size_t w = 0; w < 3; ++w) EXPECT_EQ(estimates[w].second.theta, id.per_window[w].theta);
}

TEST_F(Cli, IdentifyFromCsvWithScenario) {
  ASSERT_EQ(cli("simulate --scenario forest-nitrogen --out " + path("sim")), 0);
  ASSERT_EQ(cli("identify --method rcls-relaxed --mu 1e6 --data " + path("sim/identification.csv") +
                " --scenario forest-nitrogen --out " + path("r.json")),
            0);
  const io::json j = io::read_json(path("r.json"));
  EXPECT_EQ(j.at("method"), "rcls-relaxed:1e+06");
  EXPECT_EQ(j.at("B_hat").size(), 5u);
}

TEST_F(Cli, BiasWritesReport) {
  ASSERT_EQ(cli("bias --scenario compartmental-ti --runs 20 --samples 500 --out " + path("b.csv")), 0);
  const std::string csv = io::read_text(path("b.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "component,true,mean,bias,std_error,flagged");
}

TEST_F(Cli, UsageErrorsExitWithTwo) {
  std::string err;
  EXPECT_EQ(cli("simulate --scenario compartmental-ti --out " + path("x") + " --bogus 1", &err), 2);
  EXPECT_EQ(io::json::parse(err).at("error"), "usage");
  EXPECT_EQ(cli("identify --method cls --data " + path("missing") + " --out " + path("o.json"), &err), 2);
  EXPECT_NE(err.find("no such file"), std::string::npos);
  EXPECT_EQ(cli("montecarlo --scenario nowhere.json --runs 1 --methods ls --out " + path("m"), &err), 2);
  EXPECT_EQ(cli("", &err), 2);
}

TEST_F(Cli, ComputationErrorsExitWithOne) {
  std::string err;
  io::write_text(path("short.json"), R"({"preset": "compartmental-ti", "N": 2})");
  EXPECT_EQ(cli("montecarlo --scenario " + path("short.json") + " --runs 1 --methods ls --out " + path("m"), &err), 1);
  const io::json line = io::json::parse(err);
  EXPECT_TRUE(line.contains("error"));
  EXPECT_TRUE(line.contains("message"));
  EXPECT_EQ(cli("montecarlo --scenario compartmental-ti --runs 1 --methods kalman --out " + path("m"), &err), 1);
  EXPECT_EQ(io::json::parse(err).at("error"), "invalid_argument");
}
