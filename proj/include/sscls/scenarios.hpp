#pragma once

// Benchmark plants: a three-compartment mass-exchange model (time-invariant
// and switching among three modes) and a five-compartment nitrogen-cycle
// model of a tropical forest with a scalar input.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sscls/constraint_map.hpp"
#include "sscls/linalg.hpp"
#include "sscls/model.hpp"
#include "sscls/simulator.hpp"

namespace sscls {

struct ScenarioSpec {
  std::string name;
  std::vector<Matrix> modes;  ///< one A per mode; a single entry means time-invariant
  Matrix B;                   ///< n x p, p may be 0
  Matrix G;                   ///< n x q
  StateConstraint constraint;
  std::optional<StateConstraint> uncertain_constraint;  ///< used by the relaxed estimator
  double sigma_w = 0.0;
  double sigma_v = 0.0;
  InputSpec input;            ///< ignored when p = 0
  Vector x0_id;
  Vector x0_val;
  Index samples = 0;          ///< identification length per mode
  Index validation_samples = 0;
  double lambda = 1.0;
  std::vector<double> mu;
  std::optional<Vector> theta0;  ///< fixed initial guess for recursive estimators
  double theta0_sigma = 0.0;     ///< if > 0, theta0 ~ N(0, sigma^2 I) per realization
  double P0_scale = 1e3;
  std::uint64_t seed = 1;
  std::optional<double> rounded_s;  ///< rounded value quoted with the model
  double sample_time = 1.0;           ///< metadata only

  Index states() const { return modes.empty() ? 0 : modes.front().rows(); }
  Index inputs() const { return B.cols(); }
  Index params() const { return states() * (states() + inputs()); }
  bool time_varying() const { return modes.size() > 1; }
  Index total_samples() const { return samples * static_cast<Index>(modes.size()); }

  StateSpaceModel model(std::size_t mode = 0) const { return StateSpaceModel{modes.at(mode), B, G}; }

  std::vector<StateSpaceModel> models() const {
    std::vector<StateSpaceModel> out;
    for (std::size_t i = 0; i < modes.size(); ++i) out.push_back(model(i));
    return out;
  }

  /// Equal consecutive windows of `samples` steps, one per mode.
  std::vector<ModeWindow> schedule() const {
    std::vector<ModeWindow> out;
    for (std::size_t i = 0; i < modes.size(); ++i)
      out.push_back(ModeWindow{static_cast<Index>(i) * samples, static_cast<int>(i)});
    return out;
  }

  VectorizedConstraint vectorized() const {
    return vectorize_constraint(constraint, states(), inputs());
  }

  NoiseSpec noise(std::uint64_t run_seed) const { return NoiseSpec{sigma_w, sigma_v, run_seed}; }

  Vector initial_theta(std::uint64_t run_seed) const {
    if (theta0_sigma > 0.0) {
      auto rng = make_rng(run_seed, Stream::InitialGuess);
      return theta0_sigma * standard_normal(rng, params());
    }
    if (theta0) return *theta0;
    return Vector::Zero(params());
  }

  Matrix initial_covariance() const { return P0_scale * Matrix::Identity(params(), params()); }

  void validate() const {
    detail::require(!modes.empty(), ErrorCode::InvalidArgument, "scenario: no state matrix");
    const Index n = states();
    for (const auto& a : modes)
      detail::require_dims(a.rows() == n && a.cols() == n, "scenario: every mode must be n x n");
    model().validate();
    detail::require_dims(constraint.states() == n, "scenario: S must have n columns");
    if (uncertain_constraint)
      detail::require_dims(uncertain_constraint->states() == n,
                           "scenario: uncertain S must have n columns");
    detail::require_dims(x0_id.size() == n && x0_val.size() == n,
                         "scenario: initial conditions must have n entries");
    detail::require(samples >= 1 && validation_samples >= 1, ErrorCode::InvalidArgument,
                    "scenario: N and N_val must be positive");
    detail::require(sigma_w >= 0.0 && sigma_v >= 0.0 && input.sigma >= 0.0,
                    ErrorCode::InvalidArgument, "scenario: negative noise level");
    detail::require(lambda >= 0.5 && lambda <= 1.0, ErrorCode::InvalidArgument,
                    "scenario: lambda must lie in [0.5, 1]");
    if (theta0)
      detail::require_dims(theta0->size() == params(), "scenario: theta0 has the wrong length");
  }
};

namespace detail {

inline Matrix rows(std::initializer_list<std::initializer_list<double>> values) {
  const auto r = static_cast<Index>(values.size());
  const auto c = static_cast<Index>(values.begin()->size());
  Matrix m(r, c);
  Index i = 0;
  for (const auto& row : values) {
    Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

inline Vector entries(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

}  // namespace detail

inline Matrix compartmental_mode(int mode) {
  switch (mode) {
    case 1:
      return detail::rows({{0.94, 0.028, 0.019}, {0.038, 0.95, 0.001}, {0.022, 0.022, 0.98}});
    case 2:
      return detail::rows({{0.84, 0.028, 0.019}, {0.138, 0.85, 0.001}, {0.022, 0.122, 0.98}});
    case 3:
      return detail::rows({{0.80, 0.018, 0.119}, {0.178, 0.76, 0.201}, {0.022, 0.222, 0.68}});
    default:
      throw Error(ErrorCode::InvalidArgument, "compartmental model has modes 1..3");
  }
}

inline Matrix compartmental_noise_gain() {
  return detail::rows({{0.05, -0.03}, {-0.02, 0.01}, {-0.03, 0.02}});
}

/// Three compartments with mass conservation x1 + x2 + x3 = 3. No input by
/// default; `with_input` adds a zero B column and a persistently exciting
/// input so that the full (A, B) constraint can be exercised.
inline ScenarioSpec scenario_compartmental_ti(bool with_input = false) {
  ScenarioSpec sc;
  sc.name = with_input ? "compartmental-ti-input" : "compartmental-ti";
  sc.modes = {compartmental_mode(1)};
  sc.B = Matrix::Zero(3, with_input ? 1 : 0);
  sc.G = compartmental_noise_gain();
  sc.constraint = StateConstraint::make(Matrix::Ones(1, 3), detail::entries({3.0}));
  sc.uncertain_constraint =
      StateConstraint::make(detail::rows({{1.4, 0.9, 1.2}}), detail::entries({3.5}));
  sc.sigma_w = 1.0;
  sc.sigma_v = 0.1;
  sc.input = InputSpec{1.0, with_input ? 0.1 : 0.0};
  sc.x0_id = detail::entries({1.0, 1.0, 1.0});
  sc.x0_val = detail::entries({2.0, 1.0, 0.0});
  sc.samples = 1000;
  sc.validation_samples = 1000;
  sc.mu = {5e3, 5e4};
  sc.theta0 = Vector::Zero(sc.params());
  sc.P0_scale = 1e3;
  sc.seed = 1;
  return sc;
}

/// The compartmental plant switching through three modes on equal windows.
inline ScenarioSpec scenario_compartmental_tv() {
  ScenarioSpec sc;
  sc.name = "compartmental-tv";
  sc.modes = {compartmental_mode(1), compartmental_mode(2), compartmental_mode(3)};
  sc.B = Matrix::Zero(3, 0);
  sc.G = compartmental_noise_gain();
  sc.constraint = StateConstraint::make(Matrix::Ones(1, 3), detail::entries({50.0}));
  sc.sigma_w = 10.0;
  sc.sigma_v = 1.0;
  sc.x0_id = detail::entries({20.0, 20.0, 10.0});
  sc.x0_val = detail::entries({15.0, 10.0, 25.0});
  sc.samples = 200;
  sc.validation_samples = 200;
  sc.lambda = 0.95;
  sc.theta0_sigma = 1.0;
  sc.P0_scale = 1e4;
  sc.seed = 2;
  return sc;
}

/// State matrix of the nitrogen-cycle model rounded to 4 decimals.
inline Matrix forest_rounded_state_matrix() {
  return detail::rows({{0.9003, 0.0, 0.0005, 0.0, 0.0093},
                       {0.0935, 0.8807, 0.0, 0.0, 0.0005},
                       {0.0054, 0.0978, 0.6697, 0.0, 0.0},
                       {0.0005, 0.0154, 0.2372, 0.9995, 0.0},
                       {0.0002, 0.0060, 0.0927, 0.005, 0.9902}});
}

/// Rounded matrix with entry (5,4) read as 0.0005 (at 0.005, column 4
/// sums to 1.0045) and each diagonal entry shifted by the rounding residual
/// of its column, so that every column sums to exactly 1.
inline Matrix forest_state_matrix() {
  Matrix a = forest_rounded_state_matrix();
  a(4, 3) = 0.0005;
  for (Index j = 0; j < a.cols(); ++j) a(j, j) += 1.0 - a.col(j).sum();
  return a;
}

inline ScenarioSpec scenario_forest() {
  ScenarioSpec sc;
  sc.name = "forest-nitrogen";
  sc.modes = {forest_state_matrix()};
  sc.B = detail::entries({0.5505, 0.0282, -0.2625, -0.3003, -0.0159});
  sc.G = detail::rows({{0.1220, 0.1634, 0.0249, -0.0383},
                       {-0.0420, -0.0048, -0.1430, 0.0235},
                       {0.1640, -0.0317, -0.0057, 0.0571},
                       {-0.1871, -0.0877, 0.1697, -0.0098},
                       {-0.0569, -0.0392, -0.0459, -0.0325}});
  constexpr double k_total = 1.5;
  sc.x0_id = detail::entries({-3.5, -2.52, 0.0, 520.0, 26.5}) +
             k_total * detail::entries({3.82, 316.0, 1.0, 576.0, 41.0});
  sc.x0_val = detail::entries({72.2, 381.5, 101.5, 1264.0, 128.0});
  // The exact total of x0_id is used so the constraint matches the data.
  sc.constraint = StateConstraint::make(Matrix::Ones(1, 5), Vector::Constant(1, sc.x0_id.sum()));
  sc.rounded_s = 1.9472e3;
  sc.sigma_w = 1.0;
  sc.sigma_v = 1.0;
  sc.input = InputSpec{1.0, 0.1};
  sc.samples = 400;
  sc.validation_samples = 400;
  sc.P0_scale = 1e3;
  sc.seed = 3;
  sc.sample_time = 0.1;
  return sc;
}

inline ScenarioSpec scenario_by_name(const std::string& name) {
  if (name == "compartmental-ti") return scenario_compartmental_ti();
  if (name == "compartmental-ti-input") return scenario_compartmental_ti(true);
  if (name == "compartmental-tv") return scenario_compartmental_tv();
  if (name == "forest-nitrogen") return scenario_forest();
  throw Error(ErrorCode::InvalidArgument, "unknown scenario preset '" + name + "'");
}

}  // namespace sscls
