#pragma once

// Flat-file formats: scenario and estimate JSON, trajectory and report CSV.
// Matrices are JSON arrays of rows. Every floating-point value is written
// with 17 significant digits so files round-trip bit-exactly.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sscls/error.hpp"
#include "sscls/estimators.hpp"
#include "sscls/harness.hpp"
#include "sscls/scenarios.hpp"
#include "sscls/simulator.hpp"

namespace sscls::io {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// JSON <-> Eigen

inline json to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Vector vector_from_json(const json& j, const std::string& field) {
  if (j.is_number()) return Vector::Constant(1, j.get<double>());
  if (!j.is_array()) throw Error(ErrorCode::Parse, "'" + field + "' must be an array of numbers");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw Error(ErrorCode::Parse, "'" + field + "' must contain numbers");
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

/// Accepts an array of rows. `rows_hint` resolves the shape of empty
/// matrices and of a flat array, which is read as a column.
inline Matrix matrix_from_json(const json& j, const std::string& field, Index rows_hint = -1) {
  if (j.is_null()) return Matrix::Zero(std::max<Index>(rows_hint, 0), 0);
  if (!j.is_array()) throw Error(ErrorCode::Parse, "'" + field + "' must be an array of rows");
  if (j.empty()) return Matrix::Zero(std::max<Index>(rows_hint, 0), 0);
  if (j.front().is_number()) {
    const Vector v = vector_from_json(j, field);
    if (rows_hint >= 0 && v.size() != rows_hint)
      throw Error(ErrorCode::DimensionMismatch, "'" + field + "' has the wrong length");
    return v;
  }
  const auto rows = static_cast<Index>(j.size());
  const auto cols = static_cast<Index>(j.front().size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      throw Error(ErrorCode::Parse, "'" + field + "' rows must all have " +
                                        std::to_string(cols) + " entries");
    for (Index c = 0; c < cols; ++c) {
      const json& x = row[static_cast<std::size_t>(c)];
      if (!x.is_number()) throw Error(ErrorCode::Parse, "'" + field + "' must contain numbers");
      m(i, c) = x.get<double>();
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Files

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

inline json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, "'" + path.string() + "': " + e.what());
  }
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Scenario JSON

/// Reads a scenario. A "preset" field starts from a built-in scenario and
/// every other field present overrides it.
inline ScenarioSpec scenario_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Parse, "scenario must be a JSON object");
  ScenarioSpec sc;
  if (j.contains("preset")) sc = scenario_by_name(j.at("preset").get<std::string>());
  try {
    if (j.contains("name")) sc.name = j.at("name").get<std::string>();
    if (j.contains("A")) sc.modes = {matrix_from_json(j.at("A"), "A")};
    if (j.contains("modes")) {
      sc.modes.clear();
      for (const auto& m : j.at("modes")) sc.modes.push_back(matrix_from_json(m, "modes"));
    }
    const Index n = sc.states();
    if (j.contains("B")) sc.B = matrix_from_json(j.at("B"), "B", n);
    else if (sc.B.rows() != n) sc.B = Matrix::Zero(n, 0);
    if (j.contains("G")) sc.G = matrix_from_json(j.at("G"), "G", n);
    if (j.contains("S") || j.contains("s")) {
      Matrix S = j.contains("S") ? matrix_from_json(j.at("S"), "S") : sc.constraint.S;
      if (S.cols() == 1 && S.rows() == n && n > 1) S.transposeInPlace();
      const Vector s = j.contains("s") ? vector_from_json(j.at("s"), "s") : sc.constraint.s;
      sc.constraint = StateConstraint::make(S, s);
    }
    if (j.contains("S_uncertain")) {
      Matrix S = matrix_from_json(j.at("S_uncertain"), "S_uncertain");
      if (S.cols() == 1 && S.rows() == n && n > 1) S.transposeInPlace();
      const Vector s = j.contains("s_uncertain") ? vector_from_json(j.at("s_uncertain"), "s_uncertain")
                                                 : Vector::Zero(S.rows());
      sc.uncertain_constraint = StateConstraint::make(S, s);
    }
    if (j.contains("sigma_w")) sc.sigma_w = j.at("sigma_w").get<double>();
    if (j.contains("sigma_v")) sc.sigma_v = j.at("sigma_v").get<double>();
    if (j.contains("sigma_u")) sc.input.sigma = j.at("sigma_u").get<double>();
    if (j.contains("u_mean")) sc.input.mean = j.at("u_mean").get<double>();
    if (j.contains("x0_id")) sc.x0_id = vector_from_json(j.at("x0_id"), "x0_id");
    if (j.contains("x0_val")) sc.x0_val = vector_from_json(j.at("x0_val"), "x0_val");
    if (j.contains("N")) sc.samples = j.at("N").get<Index>();
    if (j.contains("N_val")) sc.validation_samples = j.at("N_val").get<Index>();
    else if (j.contains("N") && !j.contains("preset")) sc.validation_samples = sc.samples;
    if (j.contains("lambda")) sc.lambda = j.at("lambda").get<double>();
    if (j.contains("mu")) {
      const Vector mu = vector_from_json(j.at("mu"), "mu");
      sc.mu.assign(mu.data(), mu.data() + mu.size());
    }
    if (j.contains("theta0")) sc.theta0 = vector_from_json(j.at("theta0"), "theta0");
    if (j.contains("theta0_sigma")) sc.theta0_sigma = j.at("theta0_sigma").get<double>();
    if (j.contains("P0_scale")) sc.P0_scale = j.at("P0_scale").get<double>();
    if (j.contains("seed")) sc.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("s_rounded")) sc.rounded_s = j.at("s_rounded").get<double>();
    if (j.contains("sample_time")) sc.sample_time = j.at("sample_time").get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("scenario: ") + e.what());
  }
  sc.validate();
  return sc;
}

inline json scenario_to_json(const ScenarioSpec& sc) {
  json j;
  j["name"] = sc.name;
  if (sc.time_varying()) {
    j["modes"] = json::array();
    for (const auto& a : sc.modes) j["modes"].push_back(to_json(a));
  } else {
    j["A"] = to_json(sc.modes.front());
  }
  j["B"] = to_json(sc.B);
  j["G"] = to_json(sc.G);
  j["S"] = to_json(sc.constraint.S);
  j["s"] = to_json(sc.constraint.s);
  if (sc.uncertain_constraint) {
    j["S_uncertain"] = to_json(sc.uncertain_constraint->S);
    j["s_uncertain"] = to_json(sc.uncertain_constraint->s);
  }
  j["sigma_w"] = sc.sigma_w;
  j["sigma_v"] = sc.sigma_v;
  j["sigma_u"] = sc.input.sigma;
  j["u_mean"] = sc.input.mean;
  j["x0_id"] = to_json(sc.x0_id);
  j["x0_val"] = to_json(sc.x0_val);
  j["N"] = sc.samples;
  j["N_val"] = sc.validation_samples;
  j["lambda"] = sc.lambda;
  j["mu"] = sc.mu;
  if (sc.theta0) j["theta0"] = to_json(*sc.theta0);
  j["theta0_sigma"] = sc.theta0_sigma;
  j["P0_scale"] = sc.P0_scale;
  j["seed"] = sc.seed;
  if (sc.rounded_s) j["s_rounded"] = *sc.rounded_s;
  j["sample_time"] = sc.sample_time;
  return j;
}

inline ScenarioSpec load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(read_json(path));
}

// ---------------------------------------------------------------------------
// Trajectory CSV: k, x_1..x_n, y_1..y_n, u_1..u_p, mode

inline std::string trajectory_to_csv(const Trajectory& t) {
  const Index n = t.states();
  const Index p = t.inputs();
  std::ostringstream out;
  out << "k";
  for (Index i = 1; i <= n; ++i) out << ",x_" << i;
  for (Index i = 1; i <= n; ++i) out << ",y_" << i;
  for (Index i = 1; i <= p; ++i) out << ",u_" << i;
  out << ",mode\n";
  for (Index k = 0; k <= t.steps(); ++k) {
    out << k;
    for (Index i = 0; i < n; ++i) out << ',' << format_double(t.x(i, k));
    for (Index i = 0; i < n; ++i) out << ',' << format_double(t.y(i, k));
    for (Index i = 0; i < p; ++i) out << ',' << (k < t.steps() ? format_double(t.u(i, k)) : "");
    out << ',' << t.mode_at(std::min(k, std::max<Index>(t.steps() - 1, 0))) << '\n';
  }
  return out.str();
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline double parse_field(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw Error(ErrorCode::Parse, "bad number '" + s + "' at " + where);
  return v;
}

}  // namespace detail

inline Trajectory trajectory_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Parse, "trajectory CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_csv_line(line);
  Index n = 0, n_y = 0, p = 0;
  for (const auto& h : header) {
    if (h.rfind("x_", 0) == 0) ++n;
    else if (h.rfind("y_", 0) == 0) ++n_y;
    else if (h.rfind("u_", 0) == 0) ++p;
  }
  if (header.empty() || header.front() != "k" || header.back() != "mode" || n == 0 || n != n_y ||
      static_cast<Index>(header.size()) != 2 + 2 * n + p)
    throw Error(ErrorCode::Parse, "trajectory CSV header must be k,x_1..x_n,y_1..y_n,u_1..u_p,mode");

  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(detail::split_csv_line(line));
    if (static_cast<Index>(rows.back().size()) != 2 + 2 * n + p)
      throw Error(ErrorCode::Parse, "trajectory CSV row " + std::to_string(rows.size()) +
                                        " has the wrong number of fields");
  }
  if (rows.empty()) throw Error(ErrorCode::Parse, "trajectory CSV has no samples");
  const auto samples = static_cast<Index>(rows.size());
  Trajectory t;
  t.x.resize(n, samples);
  t.y.resize(n, samples);
  t.u.resize(p, samples - 1);
  for (Index k = 0; k < samples; ++k) {
    const auto& r = rows[static_cast<std::size_t>(k)];
    const std::string where = "row " + std::to_string(k + 1);
    for (Index i = 0; i < n; ++i) t.x(i, k) = detail::parse_field(r[1 + i], where);
    for (Index i = 0; i < n; ++i) t.y(i, k) = detail::parse_field(r[1 + n + i], where);
    if (k < samples - 1)
      for (Index i = 0; i < p; ++i) t.u(i, k) = detail::parse_field(r[1 + 2 * n + i], where);
    if (k < samples - 1) {
      const int mode = static_cast<int>(detail::parse_field(r.back(), where));
      if (t.schedule.empty() || t.schedule.back().model_id != mode)
        t.schedule.push_back(ModeWindow{k, mode});
    }
  }
  if (t.schedule.empty()) t.schedule.push_back(ModeWindow{0, 0});
  return t;
}

inline Trajectory load_trajectory(const std::filesystem::path& path) {
  return trajectory_from_csv(read_text(path));
}

// ---------------------------------------------------------------------------
// Estimate JSON

inline json estimate_to_json(const ParamEstimate& est) {
  json j;
  j["A_hat"] = to_json(est.A_hat);
  j["B_hat"] = est.B_hat.cols() == 0 ? json(nullptr) : to_json(est.B_hat);
  j["theta"] = to_json(est.theta);
  j["constraint_residual"] =
      est.constraint_residual ? json(*est.constraint_residual) : json(nullptr);
  return j;
}

/// {"method", "A_hat", "B_hat", "theta", "constraint_residual"} for the
/// final estimate, plus "modes" with one entry per mode window when the
/// record switches between models.
inline json identification_to_json(const MethodSpec& spec, const Identification& id) {
  json j = estimate_to_json(id.per_window.back());
  j["method"] = spec.label;
  j["constraint_violation_max"] = id.constraint_violation_max;
  if (id.per_window.size() > 1) {
    j["modes"] = json::array();
    for (std::size_t w = 0; w < id.per_window.size(); ++w) {
      json m = estimate_to_json(id.per_window[w]);
      m["mode"] = id.windows[w].model_id;
      m["start"] = id.windows[w].start;
      m["end"] = id.windows[w].end;
      j["modes"].push_back(std::move(m));
    }
  }
  return j;
}

inline ParamEstimate estimate_from_json(const json& j, Index n, Index p) {
  if (!j.contains("theta"))
    throw Error(ErrorCode::Parse, "estimate JSON needs a 'theta' array");
  ParamEstimate est = make_estimate(Method::LS, vector_from_json(j.at("theta"), "theta"), n, p);
  if (j.contains("method") && j.at("method").is_string()) {
    const auto label = j.at("method").get<std::string>();
    const auto name = label.substr(0, label.find_first_of(":@"));
    if (name != "true") est.method = parse_method(name);
  }
  if (j.contains("constraint_residual") && j.at("constraint_residual").is_number())
    est.constraint_residual = j.at("constraint_residual").get<double>();
  return est;
}

/// Estimates per mode window, in file order, paired with their model id.
inline std::vector<std::pair<int, ParamEstimate>> estimates_from_json(const json& j, Index n, Index p) {
  std::vector<std::pair<int, ParamEstimate>> out;
  if (j.contains("modes")) {
    for (const auto& m : j.at("modes")) out.emplace_back(m.value("mode", 0), estimate_from_json(m, n, p));
  } else {
    out.emplace_back(0, estimate_from_json(j, n, p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

inline std::string entry_label(const MethodSummary& e) {
  return e.mode < 0 ? e.label : e.label + "/mode" + std::to_string(e.mode + 1);
}

/// method,state,rmse_mean,rmse_std,constraint_violation_max,failures
inline std::string summary_to_csv(const RmseSummary& s) {
  std::ostringstream out;
  out << "method,state,rmse_mean,rmse_std,constraint_violation_max,failures\n";
  for (const auto& e : s.entries) {
    for (Index j = 0; j < e.rmse_mean.size(); ++j) {
      out << entry_label(e) << ',' << (j + 1) << ',' << format_double(e.rmse_mean(j)) << ','
          << format_double(e.rmse_std(j)) << ',' << format_double(e.constraint_violation_max)
          << ',' << e.failures << '\n';
    }
  }
  return out.str();
}

inline std::string runs_to_csv(const RmseSummary& s) {
  std::ostringstream out;
  out << "run,method,state,rmse\n";
  for (const auto& e : s.entries)
    for (Index r = 0; r < e.rmse_runs.rows(); ++r)
      for (Index j = 0; j < e.rmse_runs.cols(); ++j)
        out << r << ',' << entry_label(e) << ',' << (j + 1) << ','
            << format_double(e.rmse_runs(r, j)) << '\n';
  return out.str();
}

inline std::string histograms_to_csv(const std::vector<Histogram>& hs) {
  std::ostringstream out;
  out << "method,state,bin,lo,hi,count\n";
  for (const auto& h : hs) {
    const std::string label =
        h.mode < 0 ? h.label : h.label + "/mode" + std::to_string(h.mode + 1);
    for (std::size_t b = 0; b < h.counts.size(); ++b)
      out << label << ',' << (h.state + 1) << ',' << b << ',' << format_double(h.edges[b]) << ','
          << format_double(h.edges[b + 1]) << ',' << h.counts[b] << '\n';
  }
  return out.str();
}

inline std::string bias_to_csv(const BiasReport& r) {
  std::ostringstream out;
  out << "component,true,mean,bias,std_error,flagged\n";
  for (Index j = 0; j < r.bias.size(); ++j)
    out << (j + 1) << ',' << format_double(r.truth(j)) << ',' << format_double(r.mean(j)) << ','
        << format_double(r.bias(j)) << ',' << format_double(r.std_error(j)) << ','
        << (r.flagged[static_cast<std::size_t>(j)] ? 1 : 0) << '\n';
  return out.str();
}

inline std::string rmse_to_csv(const std::vector<std::pair<int, Vector>>& per_mode) {
  std::ostringstream out;
  out << "mode,state,rmse\n";
  for (const auto& [mode, v] : per_mode)
    for (Index j = 0; j < v.size(); ++j)
      out << (mode + 1) << ',' << (j + 1) << ',' << format_double(v(j)) << '\n';
  return out.str();
}

}  // namespace sscls::io
