#pragma once

// Simulate -> identify -> validate pipelines and the Monte Carlo studies
// built on them.
//
// Validation is a free run of the identified model from the scenario's
// validation initial condition, compared against the noise-free trajectory
// of the true model driven by the same input. Realization i of a study uses
// seed base_seed + i for every random draw of its identification record, so
// results do not depend on which methods are compared or on thread count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sscls/constraint_map.hpp"
#include "sscls/error.hpp"
#include "sscls/estimators.hpp"
#include "sscls/linalg.hpp"
#include "sscls/scenarios.hpp"
#include "sscls/simulator.hpp"

namespace sscls {

// ---------------------------------------------------------------------------
// Validation primitives

/// x_{k+1} = A x_k + B u_k from x0, no noise. Returns n x (steps + 1).
inline Matrix free_run(const Matrix& A, const Matrix& B, const Vector& x0, const Matrix& u,
                       Index steps) {
  detail::require_dims(A.rows() == A.cols() && x0.size() == A.rows(),
                       "free_run: A and x0 do not agree");
  detail::require_dims(B.rows() == A.rows(), "free_run: B must have n rows");
  detail::require_dims(B.cols() == 0 || (u.rows() == B.cols() && u.cols() >= steps),
                       "free_run: input sequence too short or wrong width");
  Matrix x(A.rows(), steps + 1);
  x.col(0) = x0;
  for (Index k = 0; k < steps; ++k) {
    x.col(k + 1) = A * x.col(k);
    if (B.cols() > 0) x.col(k + 1) += B * u.col(k);
  }
  return x;
}

inline Matrix free_run(const ParamEstimate& est, const Vector& x0, const Matrix& u, Index steps) {
  return free_run(est.A_hat, est.B_hat, x0, u, steps);
}

/// Per-state root-mean-square error over the columns of two n x N sequences.
inline Vector rmse(const Matrix& truth, const Matrix& estimate) {
  detail::require_dims(truth.rows() == estimate.rows() && truth.cols() == estimate.cols(),
                       "rmse: sequences differ in shape (" + std::to_string(truth.rows()) + "x" +
                           std::to_string(truth.cols()) + " vs " +
                           std::to_string(estimate.rows()) + "x" +
                           std::to_string(estimate.cols()) + ")");
  detail::require(truth.cols() > 0, ErrorCode::InvalidArgument, "rmse: empty sequences");
  return ((truth - estimate).array().square().rowwise().sum() /
          static_cast<double>(truth.cols()))
      .sqrt();
}

/// RMSE of two free runs over k = 1..N (the shared x0 is excluded).
inline Vector free_run_rmse(const Matrix& truth, const Matrix& estimate) {
  detail::require_dims(truth.cols() == estimate.cols() && truth.cols() >= 2,
                       "free_run_rmse: runs must have equal length >= 2");
  return rmse(truth.rightCols(truth.cols() - 1), estimate.rightCols(estimate.cols() - 1));
}

// ---------------------------------------------------------------------------
// Method selection

struct MethodSpec {
  std::optional<Method> method;  ///< empty: the true model, used as a reference
  double mu = 0.0;
  double lambda = 1.0;
  bool uncertain_constraint = false;
  std::string label;

  bool is_reference() const { return !method.has_value(); }
  bool enforces_constraint() const { return method && sscls::enforces_constraint(*method); }
};

namespace detail {

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline double parse_number(const std::string& text, const std::string& context) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "bad number '" + text + "' in " + context);
  }
}

}  // namespace detail

/// Parses "ls", "cls", "rcls", "rcls-relaxed[:MU]", "rwls[:LAMBDA]",
/// "rwcls[:LAMBDA]" or "true". A trailing "@nominal" makes the relaxed
/// estimator use the nominal constraint instead of the scenario's uncertain
/// one. Missing parameters default to the scenario's first mu and its lambda.
inline MethodSpec parse_method_spec(const std::string& text, const ScenarioSpec& scenario) {
  std::string body = text;
  bool force_nominal = false;
  if (const auto at = body.find('@'); at != std::string::npos) {
    detail::require(body.substr(at + 1) == "nominal", ErrorCode::InvalidArgument,
                    "unknown method suffix in '" + text + "'");
    force_nominal = true;
    body = body.substr(0, at);
  }
  std::string name = body;
  std::optional<double> value;
  if (const auto colon = body.find(':'); colon != std::string::npos) {
    name = body.substr(0, colon);
    value = detail::parse_number(body.substr(colon + 1), "method '" + text + "'");
  }

  MethodSpec spec;
  if (name == "true") {
    spec.label = "true";
    return spec;
  }
  spec.method = parse_method(name);
  switch (*spec.method) {
    case Method::RelaxedCLS:
      if (value) {
        spec.mu = *value;
      } else {
        detail::require(!scenario.mu.empty(), ErrorCode::InvalidArgument,
                        "rcls-relaxed needs a weight: use rcls-relaxed:MU");
        spec.mu = scenario.mu.front();
      }
      detail::require(spec.mu >= 0.0, ErrorCode::InvalidArgument, "mu must be nonnegative");
      spec.uncertain_constraint = scenario.uncertain_constraint.has_value() && !force_nominal;
      spec.label = "rcls-relaxed:" + detail::format_number(spec.mu) +
                   (force_nominal && scenario.uncertain_constraint ? "@nominal" : "");
      break;
    case Method::RWLS:
    case Method::RWCLS:
      spec.lambda = value.value_or(scenario.lambda);
      detail::require(spec.lambda >= kMinForgettingFactor && spec.lambda <= 1.0,
                      ErrorCode::InvalidArgument, "lambda must lie in [0.5, 1]");
      spec.label = std::string(selector(*spec.method)) + ":" + detail::format_number(spec.lambda);
      break;
    default:
      detail::require(!value.has_value(), ErrorCode::InvalidArgument,
                      "method '" + name + "' takes no parameter");
      spec.label = std::string(selector(*spec.method));
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Identification of one record

/// Consecutive mode windows of a trajectory: [start, end) with its model.
struct Window {
  Index start = 0;
  Index end = 0;
  int model_id = 0;
};

inline std::vector<Window> windows_of(const Trajectory& traj) {
  std::vector<Window> out;
  if (traj.schedule.empty()) return {Window{0, traj.steps(), 0}};
  for (std::size_t i = 0; i < traj.schedule.size(); ++i) {
    const Index end =
        i + 1 < traj.schedule.size() ? traj.schedule[i + 1].start : traj.steps();
    out.push_back(Window{traj.schedule[i].start, std::min(end, traj.steps()),
                         traj.schedule[i].model_id});
  }
  return out;
}

struct Identification {
  std::vector<ParamEstimate> per_window;  ///< estimate held at the end of each window
  std::vector<Window> windows;
  /// Largest ||D theta - d|| seen: over every update for recursive
  /// constrained methods, over the reported estimates otherwise.
  double constraint_violation_max = 0.0;
};

inline Vector true_theta(const ScenarioSpec& sc, int model_id) {
  const Index n = sc.states();
  Vector theta(sc.params());
  theta.head(n * n) = vec(sc.modes.at(static_cast<std::size_t>(model_id)));
  theta.tail(n * sc.inputs()) = vec(sc.B);
  return theta;
}

/// Identifies the model(s) behind `traj` with one method. Batch methods fit
/// each mode window separately; recursive methods run over the whole record
/// and are sampled at each window's last update. `run_seed` draws the random
/// initial guess when the scenario asks for one.
inline Identification identify(const MethodSpec& spec, const ScenarioSpec& sc,
                               const Trajectory& traj, std::uint64_t run_seed) {
  const Index n = sc.states();
  const Index p = sc.inputs();
  detail::require_dims(traj.states() == n && traj.inputs() == p,
                       "identify: trajectory does not match the scenario dimensions");
  const VectorizedConstraint nominal = sc.vectorized();
  Identification out;
  out.windows = windows_of(traj);

  auto record = [&](ParamEstimate est) {
    est.constraint_residual = nominal.residual(est.theta);
    out.constraint_violation_max = std::max(out.constraint_violation_max, *est.constraint_residual);
    out.per_window.push_back(std::move(est));
  };

  if (spec.is_reference()) {
    for (const auto& w : out.windows) {
      ParamEstimate est = make_estimate(Method::LS, true_theta(sc, w.model_id), n, p);
      record(std::move(est));
    }
    return out;
  }

  const Method method = *spec.method;
  if (!is_recursive(method)) {
    for (const auto& w : out.windows) {
      const RegressionData reg = build_regression(traj, w.start, w.end - w.start);
      switch (method) {
        case Method::LS: record(ls_batch(reg)); break;
        case Method::CLS: record(cls_batch(reg, nominal)); break;
        case Method::RelaxedCLS: {
          const VectorizedConstraint used =
              spec.uncertain_constraint
                  ? vectorize_constraint(*sc.uncertain_constraint, n, p)
                  : nominal;
          record(rcls_relaxed(reg, used, spec.mu));
          break;
        }
        default: break;
      }
    }
    return out;
  }

  const RegressionData reg = build_regression(traj);
  const Vector theta0 = sc.initial_theta(run_seed);
  const Matrix P0 = sc.initial_covariance();
  RecursiveState state = method == Method::RWLS ? rls_init(theta0, P0)
                                                : rls_init_constrained(theta0, P0, nominal);
  const double lambda = method == Method::RCLS ? 1.0 : spec.lambda;
  double step_violation = 0.0;
  std::size_t next_window = 0;
  for (Index r = 0; r < reg.Psi.rows(); ++r) {
    const double step_lambda = (r % n == 0) ? lambda : 1.0;
    Vector reported;
    if (method == Method::RWCLS) {
      auto step = rwcls_step(state, reg.Psi.row(r).transpose(), reg.Z(r), nominal.D, nominal.d,
                             step_lambda, ProjectionPolicy::EuclideanFallback);
      state = std::move(step.wls);
      reported = std::move(step.theta_wcls);
    } else {
      state = rwls_step(state, reg.Psi.row(r).transpose(), reg.Z(r), step_lambda);
      reported = state.theta;
    }
    if (method != Method::RWLS)
      step_violation = std::max(step_violation, nominal.residual(reported));
    const Index sample_end = r / n + 1;  // transitions consumed once this time step completes
    while (next_window < out.windows.size() && r % n == n - 1 &&
           sample_end == out.windows[next_window].end) {
      record(make_estimate(method, reported, n, p));
      ++next_window;
    }
  }
  out.constraint_violation_max = std::max(out.constraint_violation_max, step_violation);
  return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo

struct MonteCarloConfig {
  ScenarioSpec scenario;
  int runs = 1000;
  std::vector<MethodSpec> methods;
  std::uint64_t base_seed = 1;
  Index samples = 0;             ///< per mode; 0 means the scenario's value
  Index validation_samples = 0;  ///< 0 means the scenario's value
  unsigned threads = 0;          ///< 0 means hardware concurrency
};

struct MethodSummary {
  std::string label;
  int mode = -1;  ///< -1 for time-invariant scenarios, else the model id
  Vector rmse_mean;
  Vector rmse_std;             ///< population standard deviation over runs
  Matrix rmse_runs;            ///< runs x n; NaN rows mark failed runs
  Vector trajectory_variance;  ///< per state, across-run variance averaged over k
  double constraint_violation_max = 0.0;
  double free_run_violation_max = 0.0;  ///< max_k ||S x_hat_k - S x0_val||
  int failures = 0;
  std::string first_failure;
};

struct RmseSummary {
  std::string scenario;
  int runs = 0;
  std::uint64_t base_seed = 0;
  Index samples = 0;
  std::vector<MethodSummary> entries;

  const MethodSummary& at(const std::string& label, int mode = -1) const {
    for (const auto& e : entries)
      if (e.label == label && e.mode == mode) return e;
    throw Error(ErrorCode::InvalidArgument, "no summary entry for '" + label + "'" +
                                                (mode >= 0 ? " mode " + std::to_string(mode) : ""));
  }

  int total_failures() const {
    int total = 0;
    for (const auto& e : entries) total += e.failures;
    return total;
  }
};

inline std::uint64_t validation_seed(const ScenarioSpec& sc) {
  return sc.seed ^ 0x9E3779B97F4A7C15ull;
}

/// Shared validation data: one input realization and the noise-free true
/// trajectory of every mode from x0_val.
struct ValidationSet {
  Matrix inputs;
  std::vector<Matrix> truth;
  Index samples = 0;
};

inline ValidationSet make_validation_set(const ScenarioSpec& sc, Index samples = 0) {
  ValidationSet v;
  v.samples = samples > 0 ? samples : sc.validation_samples;
  v.inputs = generate_input(sc.input, sc.inputs(), v.samples, validation_seed(sc));
  for (const auto& a : sc.modes) v.truth.push_back(free_run(a, sc.B, sc.x0_val, v.inputs, v.samples));
  return v;
}

/// Identification record of one realization.
inline Trajectory simulate_identification(const ScenarioSpec& sc, std::uint64_t run_seed,
                                          Index samples = 0) {
  ScenarioSpec copy = sc;
  if (samples > 0) copy.samples = samples;
  const Index total = copy.total_samples();
  const Matrix u = generate_input(copy.input, copy.inputs(), total, run_seed);
  return simulate(copy.models(), copy.schedule(), copy.x0_id, u, copy.noise(run_seed), total);
}

struct Validation {
  Vector rmse;
  double free_run_violation = 0.0;
  Matrix trajectory;
};

inline Validation validate_estimate(const ParamEstimate& est, const ScenarioSpec& sc,
                                    const ValidationSet& v, int model_id) {
  Validation out;
  out.trajectory = free_run(est, sc.x0_val, v.inputs, v.samples);
  out.rmse = free_run_rmse(v.truth.at(static_cast<std::size_t>(model_id)), out.trajectory);
  const Vector s_val = sc.constraint.S * sc.x0_val;
  for (Index k = 0; k < out.trajectory.cols(); ++k)
    out.free_run_violation =
        std::max(out.free_run_violation, max_abs(sc.constraint.S * out.trajectory.col(k) - s_val));
  return out;
}

namespace detail {

template <typename Fn>
void parallel_for(int count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max(count, 1)));
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (int i = next++; i < count; i = next++) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct Outcome {
  bool failed = false;
  std::string reason;
  Vector rmse;
  double constraint_violation = 0.0;
  double free_run_violation = 0.0;
  Matrix trajectory;
};

/// Running per-element mean and variance, fed in run order.
struct Welford {
  Matrix mean;
  Matrix m2;
  int count = 0;

  void add(const Matrix& x) {
    if (count == 0) {
      mean = Matrix::Zero(x.rows(), x.cols());
      m2 = Matrix::Zero(x.rows(), x.cols());
    }
    ++count;
    const Matrix delta = x - mean;
    mean += delta / count;
    m2 += delta.cwiseProduct(x - mean);
  }

  Vector variance_per_row() const {
    if (count == 0) return Vector();
    return (m2 / count).rowwise().mean();
  }
};

}  // namespace detail

/// Runs every method on `runs` independent identification records and
/// validates each estimate by free run. Time-varying scenarios are reported
/// per mode.
inline RmseSummary monte_carlo(const MonteCarloConfig& config) {
  ScenarioSpec sc = config.scenario;
  if (config.samples > 0) sc.samples = config.samples;
  if (config.validation_samples > 0) sc.validation_samples = config.validation_samples;
  sc.validate();
  detail::require(config.runs >= 1, ErrorCode::InvalidArgument, "monte_carlo: runs must be >= 1");
  detail::require(!config.methods.empty(), ErrorCode::InvalidArgument,
                  "monte_carlo: no methods given");
  for (const auto& m : config.methods)
    if (m.uncertain_constraint)
      detail::require(sc.uncertain_constraint.has_value(), ErrorCode::InvalidArgument,
                      "monte_carlo: " + m.label + " needs an uncertain constraint");

  const ValidationSet val = make_validation_set(sc);
  const Index n = sc.states();
  const std::size_t n_methods = config.methods.size();
  const std::size_t n_windows = sc.modes.size();
  const std::size_t slots = n_methods * n_windows;

  RmseSummary summary;
  summary.scenario = sc.name;
  summary.runs = config.runs;
  summary.base_seed = config.base_seed;
  summary.samples = sc.samples;
  summary.entries.resize(slots);
  std::vector<detail::Welford> spread(slots);
  for (std::size_t m = 0; m < n_methods; ++m) {
    for (std::size_t w = 0; w < n_windows; ++w) {
      auto& e = summary.entries[m * n_windows + w];
      e.label = config.methods[m].label;
      e.mode = sc.time_varying() ? static_cast<int>(w) : -1;
      e.rmse_runs = Matrix::Constant(config.runs, n, std::numeric_limits<double>::quiet_NaN());
    }
  }

  // Realizations are evaluated in chunks so per-run free-run trajectories
  // can be reduced in run order without holding all of them at once.
  constexpr int kChunk = 64;
  std::vector<std::vector<detail::Outcome>> chunk(kChunk);
  for (int first = 0; first < config.runs; first += kChunk) {
    const int count = std::min(kChunk, config.runs - first);
    detail::parallel_for(count, config.threads, [&](int i) {
      const std::uint64_t seed = config.base_seed + static_cast<std::uint64_t>(first + i);
      auto& out = chunk[static_cast<std::size_t>(i)];
      out.assign(slots, detail::Outcome{});
      const Trajectory traj = simulate_identification(sc, seed);
      for (std::size_t m = 0; m < n_methods; ++m) {
        try {
          const Identification id = identify(config.methods[m], sc, traj, seed);
          detail::require(id.per_window.size() == n_windows, ErrorCode::InvalidArgument,
                          "identify returned the wrong number of windows");
          for (std::size_t w = 0; w < n_windows; ++w) {
            auto& o = out[m * n_windows + w];
            const Validation v = validate_estimate(id.per_window[w], sc, val, id.windows[w].model_id);
            o.rmse = v.rmse;
            o.free_run_violation = v.free_run_violation;
            o.trajectory = v.trajectory;
            o.constraint_violation = id.constraint_violation_max;
          }
        } catch (const Error& err) {
          for (std::size_t w = 0; w < n_windows; ++w) {
            out[m * n_windows + w].failed = true;
            out[m * n_windows + w].reason = err.what();
          }
        }
      }
    });
    for (int i = 0; i < count; ++i) {
      for (std::size_t s = 0; s < slots; ++s) {
        auto& o = chunk[static_cast<std::size_t>(i)][s];
        auto& e = summary.entries[s];
        if (o.failed) {
          ++e.failures;
          if (e.first_failure.empty()) e.first_failure = o.reason;
          continue;
        }
        e.rmse_runs.row(first + i) = o.rmse.transpose();
        e.constraint_violation_max = std::max(e.constraint_violation_max, o.constraint_violation);
        e.free_run_violation_max = std::max(e.free_run_violation_max, o.free_run_violation);
        spread[s].add(o.trajectory);
      }
    }
  }

  for (std::size_t s = 0; s < slots; ++s) {
    auto& e = summary.entries[s];
    e.rmse_mean = Vector::Constant(n, std::numeric_limits<double>::quiet_NaN());
    e.rmse_std = e.rmse_mean;
    e.trajectory_variance = spread[s].variance_per_row();
    const int ok = config.runs - e.failures;
    if (ok == 0) continue;
    for (Index j = 0; j < n; ++j) {
      double sum = 0.0;
      for (int r = 0; r < config.runs; ++r)
        if (!std::isnan(e.rmse_runs(r, j))) sum += e.rmse_runs(r, j);
      const double mean = sum / ok;
      double ss = 0.0;
      for (int r = 0; r < config.runs; ++r)
        if (!std::isnan(e.rmse_runs(r, j))) ss += (e.rmse_runs(r, j) - mean) * (e.rmse_runs(r, j) - mean);
      e.rmse_mean(j) = mean;
      e.rmse_std(j) = std::sqrt(ss / ok);
    }
  }
  return summary;
}

/// Switching-plant study: requires a scenario with more than one mode.
inline RmseSummary monte_carlo_tv(const MonteCarloConfig& config) {
  detail::require(config.scenario.time_varying(), ErrorCode::InvalidArgument,
                  "monte_carlo_tv: scenario '" + config.scenario.name + "' has a single mode");
  return monte_carlo(config);
}

// ---------------------------------------------------------------------------
// Histograms

struct Histogram {
  std::string label;
  int mode = -1;
  Index state = 0;
  std::vector<double> edges;  ///< bins + 1 entries
  std::vector<int> counts;
};

/// Equal-width histograms of per-run RMSE. For each state the bin range is
/// pooled over the entries named in `pooled` (all entries when empty).
inline std::vector<Histogram> rmse_histograms(const RmseSummary& summary,
                                              const std::vector<std::string>& pooled = {},
                                              int bins = 30) {
  detail::require(bins >= 1, ErrorCode::InvalidArgument, "histogram: bins must be >= 1");
  auto in_pool = [&](const MethodSummary& e) {
    return pooled.empty() || std::find(pooled.begin(), pooled.end(), e.label) != pooled.end();
  };
  std::vector<Histogram> out;
  if (summary.entries.empty()) return out;
  const Index n = summary.entries.front().rmse_runs.cols();
  for (Index j = 0; j < n; ++j) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& e : summary.entries) {
      if (!in_pool(e)) continue;
      for (Index r = 0; r < e.rmse_runs.rows(); ++r) {
        const double v = e.rmse_runs(r, j);
        if (!std::isfinite(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    if (!std::isfinite(lo)) continue;
    if (hi == lo) hi = lo + 1.0;
    const double width = (hi - lo) / bins;
    for (const auto& e : summary.entries) {
      if (!in_pool(e)) continue;
      Histogram h;
      h.label = e.label;
      h.mode = e.mode;
      h.state = j;
      h.counts.assign(static_cast<std::size_t>(bins), 0);
      for (int b = 0; b <= bins; ++b) h.edges.push_back(lo + b * width);
      for (Index r = 0; r < e.rmse_runs.rows(); ++r) {
        const double v = e.rmse_runs(r, j);
        if (!std::isfinite(v)) continue;
        int b = static_cast<int>((v - lo) / width);
        b = std::clamp(b, 0, bins - 1);
        ++h.counts[static_cast<std::size_t>(b)];
      }
      out.push_back(std::move(h));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bias of plain least squares

struct BiasReport {
  Vector truth;
  Vector mean;
  Vector bias;
  Vector std_error;
  std::vector<bool> flagged;  ///< |bias| > 3 standard errors
  int runs = 0;
  Index samples = 0;
  double sigma_v = 0.0;

  int flagged_count() const {
    return static_cast<int>(std::count(flagged.begin(), flagged.end(), true));
  }
  double max_abs_bias() const { return max_abs(bias); }
};

inline constexpr double kBiasFlagSigmas = 3.0;

/// Empirical mean of theta_LS over `runs` realizations against the true
/// parameter vector. `samples` overrides the scenario's record length.
inline BiasReport bias_study(const ScenarioSpec& scenario, int runs, std::uint64_t base_seed = 1,
                             Index samples = 0, unsigned threads = 0) {
  detail::require(runs >= 2, ErrorCode::InvalidArgument, "bias_study: needs at least 2 runs");
  detail::require(!scenario.time_varying(), ErrorCode::InvalidArgument,
                  "bias_study: time-invariant scenarios only");
  ScenarioSpec sc = scenario;
  if (samples > 0) sc.samples = samples;
  sc.validate();

  std::vector<Vector> estimates(static_cast<std::size_t>(runs));
  detail::parallel_for(runs, threads, [&](int i) {
    const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
    const Trajectory traj = simulate_identification(sc, seed);
    estimates[static_cast<std::size_t>(i)] =
        ls_matrix_form(build_matrix_regression(traj, 0, traj.steps())).theta;
  });

  BiasReport report;
  report.runs = runs;
  report.samples = sc.samples;
  report.sigma_v = sc.sigma_v;
  report.truth = true_theta(sc, 0);
  const Index k = report.truth.size();
  report.mean = Vector::Zero(k);
  for (const auto& e : estimates) report.mean += e;
  report.mean /= runs;
  Vector ss = Vector::Zero(k);
  for (const auto& e : estimates) ss += (e - report.mean).cwiseAbs2();
  report.std_error = (ss / (runs - 1)).cwiseSqrt() / std::sqrt(static_cast<double>(runs));
  report.bias = report.mean - report.truth;
  for (Index j = 0; j < k; ++j)
    report.flagged.push_back(std::abs(report.bias(j)) > kBiasFlagSigmas * report.std_error(j));
  return report;
}

}  // namespace sscls
