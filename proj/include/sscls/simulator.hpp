#pragma once

// Data generation for x_{k+1} = A x_k + B u_k + G w_k, y_k = x_k + v_k.
//
// Random draws come from independent std::mt19937_64 streams derived from a
// single 64-bit seed, one stream per noise source. For a fixed seed, changing
// sigma_v rescales the same measurement-noise draws.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sscls/error.hpp"
#include "sscls/linalg.hpp"
#include "sscls/model.hpp"

namespace sscls {

enum class Stream : std::uint32_t {
  Process = 0,
  Measurement = 1,
  Input = 2,
  InitialGuess = 3,
};

inline std::mt19937_64 make_rng(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

inline Vector standard_normal(std::mt19937_64& rng, Index size) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector out(size);
  for (Index i = 0; i < size; ++i) out(i) = normal(rng);
  return out;
}

/// Q = sigma_w^2 I_q and R = sigma_v^2 I_n.
struct NoiseSpec {
  double sigma_w = 0.0;
  double sigma_v = 0.0;
  std::uint64_t seed = 0;

  Matrix process_covariance(Index q) const {
    return sigma_w * sigma_w * Matrix::Identity(q, q);
  }
  Matrix measurement_covariance(Index n) const {
    return sigma_v * sigma_v * Matrix::Identity(n, n);
  }
  /// G Q G^T, singular whenever S G = 0.
  Matrix effective_process_covariance(const Matrix& G) const {
    return G * process_covariance(G.cols()) * G.transpose();
  }
};

/// u_k = mean + sigma * w^u_k, white and independent per channel.
struct InputSpec {
  double mean = 1.0;
  double sigma = 0.0;
};

inline Matrix generate_input(const InputSpec& spec, Index p, Index steps, std::uint64_t seed) {
  detail::require(steps >= 0 && p >= 0, ErrorCode::InvalidArgument,
                  "generate_input: negative size");
  Matrix u = Matrix::Constant(p, steps, spec.mean);
  if (p == 0 || spec.sigma == 0.0) return u;
  auto rng = make_rng(seed, Stream::Input);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index k = 0; k < steps; ++k)
    for (Index j = 0; j < p; ++j) u(j, k) += spec.sigma * normal(rng);
  return u;
}

/// A run of the plant starting at `start` uses model `model_id`.
struct ModeWindow {
  Index start = 0;
  int model_id = 0;

  friend bool operator==(const ModeWindow&, const ModeWindow&) = default;
};

/// Columns are time samples: x and y hold k = 0..N, u holds k = 0..N-1.
struct Trajectory {
  Matrix x;
  Matrix y;
  Matrix u;
  std::vector<ModeWindow> schedule;

  Index states() const { return x.rows(); }
  Index inputs() const { return u.rows(); }
  /// N, the number of transitions.
  Index steps() const { return x.cols() - 1; }

  /// Model active on the transition k -> k+1.
  int mode_at(Index k) const {
    int mode = schedule.empty() ? 0 : schedule.front().model_id;
    for (const auto& w : schedule)
      if (w.start <= k) mode = w.model_id;
    return mode;
  }
};

inline void validate_schedule(const std::vector<ModeWindow>& schedule, std::size_t models) {
  detail::require(!schedule.empty(), ErrorCode::InvalidArgument, "simulate: empty mode schedule");
  detail::require(schedule.front().start == 0, ErrorCode::InvalidArgument,
                  "simulate: mode schedule must start at k=0");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    detail::require(schedule[i].model_id >= 0 &&
                        static_cast<std::size_t>(schedule[i].model_id) < models,
                    ErrorCode::InvalidArgument,
                    "simulate: schedule refers to unknown model " +
                        std::to_string(schedule[i].model_id));
    if (i > 0)
      detail::require(schedule[i].start > schedule[i - 1].start, ErrorCode::InvalidArgument,
                      "simulate: schedule start indices must increase");
  }
}

/// Simulates N steps of a (possibly switching) plant. `inputs` must be p x N.
inline Trajectory simulate(const std::vector<StateSpaceModel>& models,
                           const std::vector<ModeWindow>& schedule, const Vector& x0,
                           const Matrix& inputs, const NoiseSpec& noise, Index steps) {
  detail::require(!models.empty(), ErrorCode::InvalidArgument, "simulate: no model given");
  detail::require(steps >= 0, ErrorCode::InvalidArgument, "simulate: negative length");
  detail::require(noise.sigma_w >= 0.0 && noise.sigma_v >= 0.0, ErrorCode::InvalidArgument,
                  "simulate: noise standard deviations must be nonnegative");
  validate_schedule(schedule, models.size());
  const Index n = models.front().states();
  const Index p = models.front().inputs();
  const Index q = models.front().noise_inputs();
  for (const auto& m : models) {
    m.validate();
    detail::require_dims(m.states() == n && m.inputs() == p && m.noise_inputs() == q,
                         "simulate: all modes must share n, p and q");
  }
  detail::require_dims(x0.size() == n, "simulate: x0 has " + std::to_string(x0.size()) +
                                           " entries, expected n=" + std::to_string(n));
  detail::require_dims(inputs.rows() == p && inputs.cols() == steps,
                       "simulate: inputs must be " + std::to_string(p) + "x" +
                           std::to_string(steps) + ", got " +
                           std::to_string(inputs.rows()) + "x" +
                           std::to_string(inputs.cols()));

  Trajectory traj;
  traj.schedule = schedule;
  traj.u = inputs;
  traj.x.resize(n, steps + 1);
  traj.x.col(0) = x0;

  // Each stream is consumed in time order, q or n draws per step.
  auto process_rng = make_rng(noise.seed, Stream::Process);
  auto measurement_rng = make_rng(noise.seed, Stream::Measurement);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix w(q, steps);
  for (Index k = 0; k < steps; ++k)
    for (Index i = 0; i < q; ++i) w(i, k) = normal(process_rng);
  w *= noise.sigma_w;
  for (Index k = 0; k < steps; ++k) {
    const StateSpaceModel& m = models[static_cast<std::size_t>(traj.mode_at(k))];
    traj.x.col(k + 1).noalias() = m.A * traj.x.col(k);
    if (p > 0) traj.x.col(k + 1).noalias() += m.B * inputs.col(k);
    if (q > 0 && noise.sigma_w != 0.0) traj.x.col(k + 1).noalias() += m.G * w.col(k);
  }
  traj.y = traj.x;
  if (noise.sigma_v != 0.0) {
    for (Index k = 0; k <= steps; ++k)
      for (Index i = 0; i < n; ++i) traj.y(i, k) += noise.sigma_v * normal(measurement_rng);
  }
  return traj;
}

inline Trajectory simulate(const StateSpaceModel& model, const Vector& x0, const Matrix& inputs,
                           const NoiseSpec& noise, Index steps) {
  return simulate(std::vector<StateSpaceModel>{model}, {ModeWindow{0, 0}}, x0, inputs, noise,
                  steps);
}

}  // namespace sscls
