#include <gtest/gtest.h>

#include "sscls/harness.hpp"
#include "sscls/scenarios.hpp"

using namespace sscls;

TEST(Rmse, Examples) {
  Matrix x(1, 3), xh(1, 3);
  x << 1, 2, 3;
  xh << 1, 1, 5;
  EXPECT_NEAR(rmse(x, xh)(0), std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_EQ(rmse(x, x)(0), 0.0);
  Matrix two(2, 4);
  two << 1, 2, 3, 4, 5, 6, 7, 8;
  Matrix shifted = two;
  shifted.row(1).array() += 0.25;
  EXPECT_EQ(rmse(two, shifted), (Vector(2) << 0.0, 0.25).finished());
  EXPECT_THROW(rmse(x, Matrix::Zero(1, 2)), Error);
}

TEST(FreeRun, TrueModelHasZeroError) {
  const ScenarioSpec sc = scenario_forest();
  const ValidationSet val = make_validation_set(sc);
  MethodSpec truth;
  truth.label = "true";
  const Trajectory tr = simulate_identification(sc, 1);
  const Identification id = identify(truth, sc, tr, 1);
  const Validation v = validate_estimate(id.per_window[0], sc, val, 0);
  EXPECT_EQ(v.rmse, Vector::Zero(5));
  EXPECT_LE(v.free_run_violation, 1e-9);
}

TEST(FreeRun, ClsKeepsMassLsDrifts) {
  const ScenarioSpec sc = scenario_compartmental_ti();
  const Trajectory tr = simulate_identification(sc, 2);
  const ValidationSet val = make_validation_set(sc);
  const auto cls = identify(parse_method_spec("cls", sc), sc, tr, 2);
  const auto ls = identify(parse_method_spec("ls", sc), sc, tr, 2);
  EXPECT_LE(validate_estimate(cls.per_window[0], sc, val, 0).free_run_violation, 1e-8);
  EXPECT_GT(validate_estimate(ls.per_window[0], sc, val, 0).free_run_violation, 1e-3);
}

TEST(FreeRun, UsesInputs) {
  const Matrix A = Matrix::Identity(1, 1);
  const Matrix B = Matrix::Ones(1, 1);
  const Matrix u = Matrix::Constant(1, 3, 2.0);
  const Matrix x = free_run(A, B, Vector::Zero(1), u, 3);
  EXPECT_EQ(x, (Matrix(1, 4) << 0, 2, 4, 6).finished());
  EXPECT_THROW(free_run(A, B, Vector::Zero(1), u, 4), Error);
}

TEST(MethodSpecParsing, LabelsAndDefaults) {
  const ScenarioSpec ti = scenario_compartmental_ti();
  EXPECT_EQ(parse_method_spec("ls", ti).label, "ls");
  const MethodSpec r = parse_method_spec("rcls-relaxed", ti);
  EXPECT_EQ(r.mu, 5e3);
  EXPECT_TRUE(r.uncertain_constraint);
  EXPECT_EQ(r.label, "rcls-relaxed:5000");
  const MethodSpec nominal = parse_method_spec("rcls-relaxed:1e10@nominal", ti);
  EXPECT_FALSE(nominal.uncertain_constraint);
  EXPECT_EQ(nominal.label, "rcls-relaxed:1e+10@nominal");
  const ScenarioSpec tv = scenario_compartmental_tv();
  EXPECT_EQ(parse_method_spec("rwcls", tv).lambda, 0.95);
  EXPECT_EQ(parse_method_spec("rwls:0.9", tv).label, "rwls:0.9");
  EXPECT_TRUE(parse_method_spec("true", tv).is_reference());
  EXPECT_THROW(parse_method_spec("rwls:0.3", tv), Error);
  EXPECT_THROW(parse_method_spec("cls:3", tv), Error);
  EXPECT_THROW(parse_method_spec("rcls-relaxed", tv), Error);
  EXPECT_THROW(parse_method_spec("foo", tv), Error);
}

TEST(Identify, RecursiveSnapshotsAtWindowEnds) {
  const ScenarioSpec sc = scenario_compartmental_tv();
  const Trajectory tr = simulate_identification(sc, 3);
  const MethodSpec spec = parse_method_spec("rwls", sc);
  const Identification id = identify(spec, sc, tr, 3);
  ASSERT_EQ(id.per_window.size(), 3u);
  EXPECT_EQ(id.windows[1].start, 200);
  EXPECT_EQ(id.windows[1].end, 400);
  // Replaying the record up to step 400 reproduces the second snapshot.
  const RegressionData reg = build_regression(tr, 0, 400);
  const RecursiveState st =
      run_recursive(rls_init(sc.initial_theta(3), sc.initial_covariance()), reg, 0.95);
  EXPECT_EQ(id.per_window[1].theta, st.theta);
}

TEST(Identify, BatchMethodsFitEachWindow) {
  const ScenarioSpec sc = scenario_compartmental_tv();
  const Trajectory tr = simulate_identification(sc, 4);
  const Identification id = identify(parse_method_spec("cls", sc), sc, tr, 4);
  ASSERT_EQ(id.per_window.size(), 3u);
  const ParamEstimate direct = cls_batch(build_regression(tr, 400, 200), sc.vectorized());
  EXPECT_EQ(id.per_window[2].theta, direct.theta);
}

namespace {

MonteCarloConfig small_config(const ScenarioSpec& sc, std::vector<std::string> methods, int runs) {
  MonteCarloConfig cfg;
  cfg.scenario = sc;
  cfg.runs = runs;
  cfg.samples = 200;
  cfg.validation_samples = 200;
  for (const auto& m : methods) cfg.methods.push_back(parse_method_spec(m, sc));
  return cfg;
}

}  // namespace

TEST(MonteCarlo, DeterministicForSameSeed) {
  const ScenarioSpec sc = scenario_compartmental_ti();
  const auto a = monte_carlo(small_config(sc, {"ls", "cls"}, 1));
  const auto b = monte_carlo(small_config(sc, {"ls", "cls"}, 1));
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    EXPECT_EQ(a.entries[i].rmse_mean, b.entries[i].rmse_mean);
    EXPECT_EQ(a.entries[i].rmse_std, Vector::Zero(3));
  }
}

TEST(MonteCarlo, IndependentOfMethodOrderAndThreads) {
  const ScenarioSpec sc = scenario_compartmental_ti();
  auto cfg1 = small_config(sc, {"ls", "cls", "rcls"}, 70);
  auto cfg2 = small_config(sc, {"rcls", "ls", "cls"}, 70);
  cfg1.threads = 1;
  cfg2.threads = 3;
  const auto a = monte_carlo(cfg1);
  const auto b = monte_carlo(cfg2);
  for (const char* m : {"ls", "cls", "rcls"}) {
    EXPECT_EQ(a.at(m).rmse_runs, b.at(m).rmse_runs) << m;
    EXPECT_EQ(a.at(m).rmse_mean, b.at(m).rmse_mean) << m;
    EXPECT_EQ(a.at(m).trajectory_variance, b.at(m).trajectory_variance) << m;
  }
}

TEST(MonteCarlo, ClsBeatsLsAndRespectsConstraint) {
  const ScenarioSpec sc = scenario_compartmental_ti();
  const auto s = monte_carlo(small_config(sc, {"ls", "cls", "rcls", "true"}, 30));
  EXPECT_EQ(s.total_failures(), 0);
  EXPECT_TRUE((s.at("cls").rmse_mean.array() < s.at("ls").rmse_mean.array()).all());
  const double bound = 1e-8 * (1.0 + sc.vectorized().d.norm());
  EXPECT_LE(s.at("cls").constraint_violation_max, bound);
  EXPECT_LE(s.at("rcls").constraint_violation_max, bound);
  EXPECT_GT(s.at("ls").constraint_violation_max, bound);
  // Noise-free validation: the true model reproduces it exactly.
  EXPECT_LE(s.at("true").rmse_mean.maxCoeff(), 1e-12);
}

TEST(MonteCarlo, PopulationStandardDeviation) {
  const ScenarioSpec sc = scenario_compartmental_ti();
  const auto s = monte_carlo(small_config(sc, {"ls"}, 5));
  const auto& e = s.at("ls");
  for (Index j = 0; j < 3; ++j) {
    const Eigen::ArrayXd col = e.rmse_runs.col(j).array();
    EXPECT_NEAR(e.rmse_mean(j), col.mean(), 1e-15);
    EXPECT_NEAR(e.rmse_std(j), std::sqrt((col - col.mean()).square().mean()), 1e-15);
  }
}

TEST(MonteCarlo, FailuresAreCountedNotThrown) {
  // Two samples cannot identify nine parameters.
  auto cfg = small_config(scenario_compartmental_ti(), {"ls", "true"}, 3);
  cfg.samples = 2;
  const auto s = monte_carlo(cfg);
  EXPECT_EQ(s.at("ls").failures, 3);
  EXPECT_NE(s.at("ls").first_failure.find("rank"), std::string::npos);
  EXPECT_EQ(s.at("true").failures, 0);
  EXPECT_TRUE(std::isnan(s.at("ls").rmse_mean(0)));
}

TEST(MonteCarlo, SwitchingStudyIsPerMode) {
  const ScenarioSpec sc = scenario_compartmental_tv();
  auto cfg = small_config(sc, {"rwls", "rwcls"}, 10);
  cfg.samples = 0;
  const auto s = monte_carlo_tv(cfg);
  ASSERT_EQ(s.entries.size(), 6u);
  for (int mode = 0; mode < 3; ++mode) {
    EXPECT_LE(s.at("rwcls:0.95", mode).constraint_violation_max, 1e-8);
    EXPECT_TRUE((s.at("rwcls:0.95", mode).rmse_mean.array() < s.at("rwls:0.95", mode).rmse_mean.array()).all());
  }
  EXPECT_THROW(monte_carlo_tv(small_config(scenario_compartmental_ti(), {"ls"}, 1)), Error);
}

TEST(MonteCarlo, RelaxedClsNeedsUncertainConstraintOrNominal) {
  const ScenarioSpec sc = scenario_compartmental_ti();
  const auto s = monte_carlo(small_config(sc, {"cls", "rcls-relaxed:1e10@nominal"}, 3));
  EXPECT_LE((s.at("cls").rmse_mean - s.at("rcls-relaxed:1e+10@nominal").rmse_mean).norm(), 1e-5);
}

TEST(Histograms, PooledRangeAndCounts) {
  const ScenarioSpec sc = scenario_forest();
  MonteCarloConfig cfg;
  cfg.scenario = sc;
  cfg.runs = 40;
  cfg.methods = {parse_method_spec("ls", sc), parse_method_spec("cls", sc)};
  const auto s = monte_carlo(cfg);
  const auto hs = rmse_histograms(s, {"ls", "cls"}, 30);
  ASSERT_EQ(hs.size(), 10u);
  for (const auto& h : hs) {
    EXPECT_EQ(h.edges.size(), 31u);
    int total = 0;
    for (int c : h.counts) total += c;
    EXPECT_EQ(total, 40);
  }
  // LS and CLS of one state share bin edges.
  EXPECT_EQ(hs[0].edges, hs[1].edges);
  const double lo = std::min(s.at("ls").rmse_runs.col(0).minCoeff(), s.at("cls").rmse_runs.col(0).minCoeff());
  EXPECT_EQ(hs[0].edges.front(), lo);
}

TEST(Bias, NoiseLevelOrderingAndDetection) {
  ScenarioSpec sc = scenario_compartmental_ti();
  const BiasReport low = bias_study(sc, 100, 1, 2000);
  sc.sigma_v *= 2.0;
  const BiasReport high = bias_study(sc, 100, 1, 2000);
  EXPECT_GE(low.flagged_count(), 1);
  EXPECT_GE(high.max_abs_bias(), low.max_abs_bias());
  EXPECT_EQ(low.truth, vec(sc.modes[0]));
}

TEST(Bias, ExactMeasurementsLongRecordFlagsNothing) {
  ScenarioSpec sc = scenario_compartmental_ti();
  sc.sigma_v = 0.0;
  const BiasReport r = bias_study(sc, 100, 1, 50000);
  EXPECT_EQ(r.flagged_count(), 0) << r.bias.transpose();
}

TEST(Bias, RejectsTooFewRuns) {
  EXPECT_THROW(bias_study(scenario_compartmental_ti(), 1), Error);
  EXPECT_THROW(bias_study(scenario_compartmental_tv(), 10), Error);
}
