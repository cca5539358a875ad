#pragma once

// Command-line front end. Exit status is 0 on success, 2 for usage errors
// (unknown flags, unreadable inputs) and 1 when the computation fails. Every
// failure prints a single JSON line {"error": code, "message": text} on
// stderr.

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sscls/error.hpp"
#include "sscls/harness.hpp"
#include "sscls/io.hpp"
#include "sscls/scenarios.hpp"

namespace sscls::cli {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void report_error(std::ostream& err, const std::string& code, const std::string& message) {
  err << io::json{{"error", code}, {"message", message}}.dump() << '\n';
}

/// A scenario argument is a JSON file, or the name of a built-in preset.
inline ScenarioSpec resolve_scenario(const std::string& arg) {
  if (fs::is_regular_file(arg)) return io::load_scenario(arg);
  try {
    return scenario_by_name(arg);
  } catch (const Error&) {
    throw UsageError("scenario '" + arg + "' is neither a readable file nor a preset name");
  }
}

inline void require_input(const fs::path& path) {
  if (!fs::exists(path)) throw UsageError("no such file: '" + path.string() + "'");
}

struct Record {
  ScenarioSpec scenario;
  Trajectory trajectory;
  std::uint64_t seed = 0;
};

/// `data` is either a directory written by `simulate` or a trajectory CSV,
/// in which case the scenario must be given separately.
inline Record load_record(const fs::path& data, const std::string& scenario_arg) {
  require_input(data);
  Record rec;
  fs::path csv = data;
  if (fs::is_directory(data)) {
    csv = data / "identification.csv";
    require_input(csv);
    if (scenario_arg.empty()) {
      require_input(data / "scenario.json");
      rec.scenario = io::load_scenario(data / "scenario.json");
    }
    rec.seed = rec.scenario.seed;
    if (fs::exists(data / "run.json"))
      rec.seed = io::read_json(data / "run.json").value("seed", rec.scenario.seed);
  } else if (scenario_arg.empty()) {
    throw UsageError("--scenario is required when --data is a CSV file");
  }
  if (!scenario_arg.empty()) {
    rec.scenario = resolve_scenario(scenario_arg);
    if (!fs::is_directory(data)) rec.seed = rec.scenario.seed;
  }
  rec.trajectory = io::load_trajectory(csv);
  return rec;
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands

struct SimulateArgs {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string out;
};

inline void cmd_simulate(const SimulateArgs& a, std::ostream& log) {
  const ScenarioSpec sc = resolve_scenario(a.scenario);
  const std::uint64_t seed = a.seed.value_or(sc.seed);
  const Trajectory id = simulate_identification(sc, seed);
  const ValidationSet val = make_validation_set(sc);

  Trajectory vt;
  vt.x = val.truth.front();
  vt.y = vt.x;
  vt.u = val.inputs;
  vt.schedule = {ModeWindow{0, 0}};

  const fs::path out = a.out;
  io::write_text(out / "identification.csv", io::trajectory_to_csv(id));
  io::write_text(out / "validation.csv", io::trajectory_to_csv(vt));
  io::write_text(out / "scenario.json", io::scenario_to_json(sc).dump(2) + "\n");
  io::write_text(out / "run.json", io::json{{"seed", seed}}.dump(2) + "\n");
  log << "wrote " << id.steps() << " identification steps to " << out.string() << '\n';
}

struct IdentifyArgs {
  std::string method;
  std::string data;
  std::string scenario;
  std::optional<double> mu;
  std::optional<double> lambda;
  std::string out;
};

inline void cmd_identify(const IdentifyArgs& a, std::ostream& log) {
  const Record rec = load_record(a.data, a.scenario);
  std::string method = a.method;
  if (a.mu && a.lambda) throw UsageError("--mu and --lambda are mutually exclusive");
  if (a.mu) {
    if (parse_method(method) != Method::RelaxedCLS)
      throw UsageError("--mu applies to rcls-relaxed only");
    method += ":" + io::format_double(*a.mu);
  }
  if (a.lambda) {
    const Method m = parse_method(method);
    if (m != Method::RWLS && m != Method::RWCLS)
      throw UsageError("--lambda applies to rwls and rwcls only");
    method += ":" + io::format_double(*a.lambda);
  }
  const MethodSpec spec = parse_method_spec(method, rec.scenario);
  const Identification id = identify(spec, rec.scenario, rec.trajectory, rec.seed);
  io::write_text(a.out, io::identification_to_json(spec, id).dump(2) + "\n");
  log << spec.label << ": constraint residual " << id.constraint_violation_max << '\n';
}

struct ValidateArgs {
  std::string estimate;
  std::string scenario;
  std::string out;
};

inline void cmd_validate(const ValidateArgs& a, std::ostream& log) {
  require_input(a.estimate);
  const ScenarioSpec sc = resolve_scenario(a.scenario);
  const auto estimates = io::estimates_from_json(io::read_json(a.estimate), sc.states(), sc.inputs());
  const ValidationSet val = make_validation_set(sc);
  std::vector<std::pair<int, Vector>> per_mode;
  for (const auto& [mode, est] : estimates) {
    const Validation v = validate_estimate(est, sc, val, mode);
    per_mode.emplace_back(mode, v.rmse);
    log << "mode " << mode + 1 << ": rmse " << v.rmse.transpose() << '\n';
  }
  io::write_text(a.out, io::rmse_to_csv(per_mode));
}

struct MonteCarloArgs {
  std::string scenario;
  int runs = 1000;
  std::string methods;
  std::uint64_t base_seed = 1;
  Index samples = 0;
  Index validation_samples = 0;
  unsigned threads = 0;
  std::string pooled;
  std::string out;
};

inline void cmd_montecarlo(const MonteCarloArgs& a, std::ostream& log) {
  MonteCarloConfig config;
  config.scenario = resolve_scenario(a.scenario);
  config.runs = a.runs;
  config.base_seed = a.base_seed;
  config.samples = a.samples;
  config.validation_samples = a.validation_samples;
  config.threads = a.threads;
  for (const auto& m : split_list(a.methods))
    config.methods.push_back(parse_method_spec(m, config.scenario));
  if (config.methods.empty()) throw UsageError("--methods lists no method");

  const RmseSummary summary = monte_carlo(config);
  std::vector<std::string> pool;
  for (const auto& p : split_list(a.pooled)) pool.push_back(parse_method_spec(p, config.scenario).label);

  const fs::path out = a.out;
  io::write_text(out / "summary.csv", io::summary_to_csv(summary));
  io::write_text(out / "runs.csv", io::runs_to_csv(summary));
  io::write_text(out / "histograms.csv", io::histograms_to_csv(rmse_histograms(summary, pool)));
  for (const auto& e : summary.entries) {
    log << io::entry_label(e) << ": mean " << e.rmse_mean.transpose() << ", failures "
        << e.failures << '\n';
    if (e.failures > 0) log << "  first failure: " << e.first_failure << '\n';
  }
  if (summary.total_failures() > 0)
    throw Error(ErrorCode::Singular, std::to_string(summary.total_failures()) +
                                         " estimator failures; see summary.csv");
}

struct BiasArgs {
  std::string scenario;
  int runs = 500;
  std::uint64_t base_seed = 1;
  Index samples = 0;
  std::optional<double> sigma_v;
  unsigned threads = 0;
  std::string out;
};

inline void cmd_bias(const BiasArgs& a, std::ostream& log) {
  ScenarioSpec sc = resolve_scenario(a.scenario);
  if (a.sigma_v) sc.sigma_v = *a.sigma_v;
  const BiasReport r = bias_study(sc, a.runs, a.base_seed, a.samples, a.threads);
  io::write_text(a.out, io::bias_to_csv(r));
  log << r.flagged_count() << " of " << r.bias.size() << " components flagged, max |bias| "
      << r.max_abs_bias() << '\n';
}

// ---------------------------------------------------------------------------

inline int run(int argc, char** argv, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"State-constrained least-squares identification of linear state-space models"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Simulate identification and validation records");
  s->add_option("--scenario", sim.scenario, "Scenario JSON file or preset name")->required();
  s->add_option("--seed", sim.seed, "Realization seed (default: the scenario seed)");
  s->add_option("--out", sim.out, "Output directory")->required();

  IdentifyArgs ida;
  auto* i = app.add_subcommand("identify", "Estimate (A, B) from a simulated record");
  i->add_option("--method", ida.method, "ls | cls | rcls-relaxed | rcls | rwls | rwcls")->required();
  i->add_option("--data", ida.data, "Directory from simulate, or a trajectory CSV")->required();
  i->add_option("--scenario", ida.scenario, "Scenario (required for a bare CSV)");
  i->add_option("--mu", ida.mu, "Relaxation weight for rcls-relaxed");
  i->add_option("--lambda", ida.lambda, "Forgetting factor for rwls/rwcls");
  i->add_option("--out", ida.out, "Estimate JSON path")->required();

  ValidateArgs va;
  auto* v = app.add_subcommand("validate", "Free-run RMSE of an estimate on the validation record");
  v->add_option("--estimate", va.estimate, "Estimate JSON")->required();
  v->add_option("--scenario", va.scenario, "Scenario JSON file or preset name")->required();
  v->add_option("--out", va.out, "RMSE CSV path")->required();

  MonteCarloArgs mc;
  auto* m = app.add_subcommand("montecarlo", "Monte Carlo RMSE study");
  m->add_option("--scenario", mc.scenario, "Scenario JSON file or preset name")->required();
  m->add_option("--runs", mc.runs, "Realizations")->check(CLI::PositiveNumber);
  m->add_option("--methods", mc.methods, "Comma-separated methods, e.g. ls,cls,rcls-relaxed:5e3")
      ->required();
  m->add_option("--base-seed", mc.base_seed, "Run i uses seed base-seed + i");
  m->add_option("--samples", mc.samples, "Identification length per mode");
  m->add_option("--validation-samples", mc.validation_samples, "Validation length");
  m->add_option("--threads", mc.threads, "Worker threads (0 = all cores)");
  m->add_option("--histogram-methods", mc.pooled, "Methods pooled for the histogram range");
  m->add_option("--out", mc.out, "Output directory")->required();

  BiasArgs ba;
  auto* b = app.add_subcommand("bias", "Empirical bias of plain least squares");
  b->add_option("--scenario", ba.scenario, "Scenario JSON file or preset name")->required();
  b->add_option("--runs", ba.runs, "Realizations")->check(CLI::Range(2, 1 << 30));
  b->add_option("--base-seed", ba.base_seed, "Run i uses seed base-seed + i");
  b->add_option("--samples", ba.samples, "Identification length");
  b->add_option("--sigma-v", ba.sigma_v, "Override the measurement noise level");
  b->add_option("--threads", ba.threads, "Worker threads (0 = all cores)");
  b->add_option("--out", ba.out, "Bias CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, log, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, log, err);
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", e.what());
    return 2;
  }

  try {
    if (s->parsed()) cmd_simulate(sim, log);
    else if (i->parsed()) cmd_identify(ida, log);
    else if (v->parsed()) cmd_validate(va, log);
    else if (m->parsed()) cmd_montecarlo(mc, log);
    else if (b->parsed()) cmd_bias(ba, log);
    return 0;
  } catch (const UsageError& e) {
    report_error(err, "usage", e.what());
    return 2;
  } catch (const Error& e) {
    report_error(err, std::string(to_string(e.code())), e.what());
    return e.code() == ErrorCode::Io ? 2 : 1;
  } catch (const std::exception& e) {
    report_error(err, "internal", e.what());
    return 1;
  }
}

}  // namespace sscls::cli
