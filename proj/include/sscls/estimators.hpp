#pragma once

// Least-squares estimators for theta = [vec(A); vec(B)].
//
// The regression y_{k+1}^T = [y_k^T u_k^T] Theta + e_{k+1}^T is stacked as
// Z = Psi theta + Xi with row block k of Psi equal to
// [y_{k-1}^T (x) I_n, u_{k-1}^T (x) I_n]. Batch solvers use a QR factorization
// of Psi. Recursive solvers consume Psi one scalar row at a time.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sscls/constraint_map.hpp"
#include "sscls/error.hpp"
#include "sscls/linalg.hpp"
#include "sscls/simulator.hpp"

namespace sscls {

enum class Method { LS, CLS, RelaxedCLS, RCLS, RWLS, RWCLS };

/// Display tag, e.g. "rCLS".
inline std::string_view tag(Method m) {
  switch (m) {
    case Method::LS: return "LS";
    case Method::CLS: return "CLS";
    case Method::RelaxedCLS: return "rCLS";
    case Method::RCLS: return "RCLS";
    case Method::RWLS: return "RWLS";
    case Method::RWCLS: return "RWCLS";
  }
  return "?";
}

/// Selector string used on the command line and in files.
inline std::string_view selector(Method m) {
  switch (m) {
    case Method::LS: return "ls";
    case Method::CLS: return "cls";
    case Method::RelaxedCLS: return "rcls-relaxed";
    case Method::RCLS: return "rcls";
    case Method::RWLS: return "rwls";
    case Method::RWCLS: return "rwcls";
  }
  return "?";
}

inline Method parse_method(std::string_view text) {
  for (Method m : {Method::LS, Method::CLS, Method::RelaxedCLS, Method::RCLS, Method::RWLS,
                   Method::RWCLS}) {
    if (text == selector(m) || text == tag(m)) return m;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown estimator '" + std::string(text) +
                                              "' (expected ls|cls|rcls-relaxed|rcls|rwls|rwcls)");
}

/// Methods whose estimates satisfy D theta = d up to rounding.
inline bool enforces_constraint(Method m) {
  return m == Method::CLS || m == Method::RCLS || m == Method::RWCLS;
}

inline bool is_recursive(Method m) {
  return m == Method::RCLS || m == Method::RWLS || m == Method::RWCLS;
}

// ---------------------------------------------------------------------------
// Regression assembly

struct RegressionData {
  Matrix Psi;  ///< (N n) x (n^2 + n p)
  Vector Z;    ///< (N n)
  Matrix X;    ///< N x (n + p), rows [y_{k-1}^T u_{k-1}^T]
  Matrix Y;    ///< N x n, rows y_k^T
  Index samples = 0;
  Index states = 0;
  Index inputs = 0;
  std::vector<std::string> warnings;

  Index params() const { return states * (states + inputs); }
};

/// Shortest record for which Psi can have full column rank.
inline Index min_identifiable_samples(Index n, Index p) {
  return n == 0 ? 0 : (n * n + n * p + n - 1) / n;
}

/// Matrix form only (X, Y); Psi and Z are left empty.
inline RegressionData build_matrix_regression(const Trajectory& traj, Index first, Index count) {
  const Index n = traj.states();
  const Index p = traj.inputs();
  detail::require(first >= 0 && count >= 0 && first + count <= traj.steps(),
                  ErrorCode::InvalidArgument,
                  "build_regression: window [" + std::to_string(first) + ", " +
                      std::to_string(first + count) + ") outside trajectory of " +
                      std::to_string(traj.steps()) + " steps");
  detail::require_dims(traj.y.rows() == n && traj.y.cols() == traj.x.cols(),
                       "build_regression: y must match x in shape");
  detail::require_dims(p == 0 || traj.u.cols() >= first + count,
                       "build_regression: missing inputs");

  RegressionData reg;
  reg.samples = count;
  reg.states = n;
  reg.inputs = p;
  reg.X.resize(count, n + p);
  reg.X.leftCols(n) = traj.y.middleCols(first, count).transpose();
  if (p > 0) reg.X.rightCols(p) = traj.u.middleCols(first, count).transpose();
  reg.Y = traj.y.middleCols(first + 1, count).transpose();
  if (count < min_identifiable_samples(n, p)) {
    reg.warnings.push_back("only " + std::to_string(count) + " samples; at least " +
                           std::to_string(min_identifiable_samples(n, p)) +
                           " are needed for a full-rank regressor");
  }
  return reg;
}

/// Regression over transitions [first, first + count) of `traj`.
inline RegressionData build_regression(const Trajectory& traj, Index first, Index count) {
  RegressionData reg = build_matrix_regression(traj, first, count);
  const Index n = reg.states;
  const Index cols = n + reg.inputs;
  reg.Psi = Matrix::Zero(count * n, n * cols);
  reg.Z = vec(reg.Y.transpose());
  for (Index k = 0; k < count; ++k) {
    // [x^T (x) I_n]: column block j is x_j * I_n.
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < n; ++i) reg.Psi(k * n + i, j * n + i) = reg.X(k, j);
  }
  return reg;
}

inline RegressionData build_regression(const Trajectory& traj) {
  return build_regression(traj, 0, traj.steps());
}

// ---------------------------------------------------------------------------
// Estimates

struct ParamEstimate {
  Method method = Method::LS;
  Vector theta;
  Matrix A_hat;
  Matrix B_hat;  ///< n x 0 when there is no input
  std::optional<double> constraint_residual;
};

/// Splits theta = [vec(A); vec(B)] back into A (n x n) and B (n x p).
inline std::pair<Matrix, Matrix> unvectorize(const Vector& theta, Index n, Index p) {
  detail::require_dims(theta.size() == n * n + n * p,
                       "unvectorize: theta has " + std::to_string(theta.size()) +
                           " entries, expected n^2 + n p = " + std::to_string(n * n + n * p));
  Matrix a = unvec(theta.head(n * n), n, n);
  Matrix b = unvec(theta.tail(n * p), n, p);
  return {std::move(a), std::move(b)};
}

inline ParamEstimate make_estimate(Method method, Vector theta, Index n, Index p,
                                   const VectorizedConstraint* vc = nullptr) {
  ParamEstimate est;
  est.method = method;
  auto [a, b] = unvectorize(theta, n, p);
  est.A_hat = std::move(a);
  est.B_hat = std::move(b);
  if (vc != nullptr) est.constraint_residual = vc->residual(theta);
  est.theta = std::move(theta);
  return est;
}

// ---------------------------------------------------------------------------
// Projections onto D theta = d

namespace detail {

inline void require_full_row_rank(const Matrix& D) {
  detail::require(D.rows() >= 1, ErrorCode::InvalidArgument, "constraint matrix D is empty");
  const Index rank = numerical_rank(D);
  if (rank != D.rows()) throw RankError("constraint matrix D", rank, D.rows());
}

/// Thin orthonormal basis of range(D^T) and the triangular factor of D^T.
struct RowSpace {
  Matrix Q;
  Matrix R;
};

inline RowSpace row_space(const Matrix& D) {
  Eigen::HouseholderQR<Matrix> qr(D.transpose());
  RowSpace out;
  out.Q = qr.householderQ() * Matrix::Identity(D.cols(), D.rows());
  out.R = qr.matrixQR().topRows(D.rows()).triangularView<Eigen::Upper>();
  return out;
}

inline void check_constraint_shape(const VectorizedConstraint& vc, Index params) {
  require_dims(vc.D.cols() == params,
               "constraint D has " + std::to_string(vc.D.cols()) +
                   " columns but the regression has " + std::to_string(params) + " parameters");
  require_dims(vc.d.size() == vc.D.rows(), "constraint d does not match the rows of D");
}

}  // namespace detail

/// I - D^T (D D^T)^{-1} D.
inline Matrix euclidean_null_projector(const Matrix& D) {
  detail::require_full_row_rank(D);
  const auto rs = detail::row_space(D);
  return Matrix::Identity(D.cols(), D.cols()) - rs.Q * rs.Q.transpose();
}

/// d_bar = D^T (D D^T)^{-1} d, the minimum-norm point of D theta = d.
inline Vector constraint_offset(const Matrix& D, const Vector& d) {
  detail::require_full_row_rank(D);
  detail::require_dims(d.size() == D.rows(), "constraint d does not match the rows of D");
  const auto rs = detail::row_space(D);
  // D D^T = R^T R, so D^T (D D^T)^{-1} d = Q R^{-T} d.
  return rs.Q * rs.R.transpose().triangularView<Eigen::Lower>().solve(d);
}

/// I - L D with L = W^{-1} D^T (D W^{-1} D^T)^{-1} for a symmetric positive
/// definite weight W. With W = Psi^T Psi this is the projector of the batch
/// constrained solution.
inline Matrix weighted_null_projector(const Matrix& D, const Matrix& W) {
  detail::require_full_row_rank(D);
  detail::require_dims(W.rows() == D.cols() && W.cols() == D.cols(),
                       "weighted_null_projector: weight must be square with D's column count");
  Eigen::LDLT<Matrix> w(W);
  detail::require(w.info() == Eigen::Success && w.isPositive(), ErrorCode::Singular,
                  "weighted_null_projector: weight is not positive definite");
  const Matrix winv_dt = w.solve(D.transpose());
  const Matrix inner = D * winv_dt;
  const Matrix L = winv_dt * inner.ldlt().solve(Matrix::Identity(D.rows(), D.rows()));
  return Matrix::Identity(D.cols(), D.cols()) - L * D;
}

// ---------------------------------------------------------------------------
// Batch estimators

namespace detail {

/// Column-pivoted QR of Psi with the numerical-rank check every batch
/// estimator needs.
class RegressorFactor {
 public:
  explicit RegressorFactor(const Matrix& psi) : qr_(psi) {
    const Index k = psi.cols();
    if (psi.rows() < k) throw RankError("regressor matrix Psi", psi.rows(), k);
    r_ = qr_.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    const Index rank = numerical_rank(r_);
    if (rank != k) throw RankError("regressor matrix Psi", rank, k);
  }

  Vector solve(const Vector& z) const { return qr_.solve(z); }

  // With Psi P = Q R, (Psi^T Psi)^{-1} = P R^{-1} R^{-T} P^T.

  /// R^{-T} P^T M, so that M^T (Psi^T Psi)^{-1} M = W^T W.
  Matrix whiten(const Matrix& m) const {
    Matrix t = qr_.colsPermutation().transpose() * m;
    r_.transpose().triangularView<Eigen::Lower>().solveInPlace(t);
    return t;
  }

  /// P R^{-1} M, the inverse of whiten().
  Matrix unwhiten(const Matrix& m) const {
    Matrix t = m;
    r_.triangularView<Eigen::Upper>().solveInPlace(t);
    return qr_.colsPermutation() * t;
  }

 private:
  Eigen::ColPivHouseholderQR<Matrix> qr_;
  Matrix r_;
};

}  // namespace detail

/// theta_LS = (Psi^T Psi)^{-1} Psi^T Z.
inline ParamEstimate ls_batch(const RegressionData& reg) {
  detail::require_dims(reg.Psi.rows() == reg.Z.size(), "ls_batch: Psi and Z row counts differ");
  const detail::RegressorFactor factor(reg.Psi);
  return make_estimate(Method::LS, factor.solve(reg.Z), reg.states, reg.inputs);
}

/// Matrix-form LS: Theta = argmin ||Y - X Theta||_F, returned as
/// [vec(A); vec(B)]. Same minimizer as ls_batch, but factors the N x (n+p)
/// matrix X instead of the Kronecker-expanded Psi.
inline ParamEstimate ls_matrix_form(const RegressionData& reg) {
  const Index n = reg.states;
  const Index p = reg.inputs;
  detail::require_dims(reg.X.rows() == reg.Y.rows() && reg.X.cols() == n + p &&
                           reg.Y.cols() == n,
                       "ls_matrix_form: X and Y shapes disagree");
  const detail::RegressorFactor factor(reg.X);
  Matrix theta_matrix(n + p, n);
  for (Index j = 0; j < n; ++j) theta_matrix.col(j) = factor.solve(reg.Y.col(j));
  Vector theta(n * (n + p));
  theta.head(n * n) = vec(theta_matrix.topRows(n).transpose());
  theta.tail(n * p) = vec(theta_matrix.bottomRows(p).transpose());
  return make_estimate(Method::LS, std::move(theta), n, p);
}

/// theta_CLS = P_N(D) theta_LS + (I - P_N(D)) d_bar with
/// P_N(D) = I - L D and L = (Psi^T Psi)^{-1} D^T [D (Psi^T Psi)^{-1} D^T]^{-1}.
inline ParamEstimate cls_batch(const RegressionData& reg, const VectorizedConstraint& vc) {
  detail::require_dims(reg.Psi.rows() == reg.Z.size(), "cls_batch: Psi and Z row counts differ");
  detail::check_constraint_shape(vc, reg.Psi.cols());
  detail::require_full_row_rank(vc.D);

  const detail::RegressorFactor factor(reg.Psi);
  const Vector theta_ls = factor.solve(reg.Z);

  // D (Psi^T Psi)^{-1} D^T = W^T W; a rank-deficient W means the constraints
  // are redundant in the metric of the data.
  const Matrix W = factor.whiten(vc.D.transpose());
  const Index m = vc.D.rows();
  const Index rank = numerical_rank(W);
  if (rank != m) {
    throw Error(ErrorCode::Singular,
                "cls_batch: D (Psi^T Psi)^{-1} D^T is singular (rank " + std::to_string(rank) +
                    " of " + std::to_string(m) + "); constraints are redundant");
  }
  // W = Qw Rw gives W (W^T W)^{-1} = Qw Rw^{-T}, hence L = P R^{-1} Qw Rw^{-T}.
  Eigen::HouseholderQR<Matrix> wqr(W);
  const Matrix Rw = wqr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
  const Matrix Qw = wqr.householderQ() * Matrix::Identity(W.rows(), m);
  const Matrix qw_rw =
      Rw.triangularView<Eigen::Upper>().solve(Qw.transpose()).transpose();
  const Matrix L = factor.unwhiten(qw_rw);

  const Vector d_bar = constraint_offset(vc.D, vc.d);
  const Vector theta = theta_ls - L * (vc.D * theta_ls) + L * (vc.D * d_bar);
  return make_estimate(Method::CLS, theta, reg.states, reg.inputs, &vc);
}

/// theta_rCLS = (Psi^T Psi + mu D^T D)^{-1} (Psi^T Z + mu D^T d), solved as the
/// least-squares problem on [sqrt(mu) D; Psi] theta ~ [sqrt(mu) d; Z].
inline ParamEstimate rcls_relaxed(const RegressionData& reg, const VectorizedConstraint& vc,
                                  double mu) {
  detail::require(mu >= 0.0, ErrorCode::InvalidArgument,
                  "rcls_relaxed: mu must be nonnegative, got " + std::to_string(mu));
  detail::require_dims(reg.Psi.rows() == reg.Z.size(),
                       "rcls_relaxed: Psi and Z row counts differ");
  detail::check_constraint_shape(vc, reg.Psi.cols());

  if (mu == 0.0) {
    const detail::RegressorFactor factor(reg.Psi);
    return make_estimate(Method::RelaxedCLS, factor.solve(reg.Z), reg.states, reg.inputs, &vc);
  }
  const double w = std::sqrt(mu);
  const Index m = vc.D.rows();
  // Heavily weighted rows first keeps Householder QR accurate for large mu.
  Matrix stacked(m + reg.Psi.rows(), reg.Psi.cols());
  stacked.topRows(m) = w * vc.D;
  stacked.bottomRows(reg.Psi.rows()) = reg.Psi;
  Vector rhs(m + reg.Z.size());
  rhs.head(m) = w * vc.d;
  rhs.tail(reg.Z.size()) = reg.Z;

  Eigen::ColPivHouseholderQR<Matrix> qr(stacked);
  const Index k = stacked.cols();
  const Index rank = stacked.rows() < k
                         ? stacked.rows()
                         : numerical_rank(qr.matrixR().topLeftCorner(k, k)
                                              .triangularView<Eigen::Upper>()
                                              .toDenseMatrix());
  if (rank != k) {
    throw Error(ErrorCode::Singular, "rcls_relaxed: Psi^T Psi + mu D^T D is singular (rank " +
                                         std::to_string(rank) + " of " + std::to_string(k) + ")");
  }
  return make_estimate(Method::RelaxedCLS, qr.solve(rhs), reg.states, reg.inputs, &vc);
}

// ---------------------------------------------------------------------------
// Recursive estimators

inline constexpr double kMinForgettingFactor = 0.5;

struct RecursiveState {
  Vector theta;
  Matrix P;
  Vector K_last;  ///< gain of the most recent update, empty before the first
  Index k = 0;
};

inline RecursiveState rls_init(Vector theta0, Matrix P0) {
  detail::require_dims(P0.rows() == theta0.size() && P0.cols() == theta0.size(),
                       "rls_init: P0 must be " + std::to_string(theta0.size()) + "x" +
                           std::to_string(theta0.size()));
  RecursiveState st;
  st.theta = std::move(theta0);
  st.P = std::move(P0);
  return st;
}

/// theta0' = P_N(D) theta0 + d_bar and P0' = P_N(D) P0 P_N(D) with the
/// unweighted projector, so D theta0' = d and D P0' = 0.
inline RecursiveState rls_init_constrained(const Vector& theta0, const Matrix& P0,
                                           const VectorizedConstraint& vc) {
  detail::check_constraint_shape(vc, theta0.size());
  detail::require_dims(P0.rows() == theta0.size() && P0.cols() == theta0.size(),
                       "rls_init_constrained: P0 must be square with theta0's length");
  const Matrix projector = euclidean_null_projector(vc.D);
  RecursiveState st;
  st.theta = projector * theta0 + constraint_offset(vc.D, vc.d);
  st.P = projector * P0 * projector;
  symmetrize(st.P);
  return st;
}

/// One scalar update with forgetting factor lambda:
/// K = P psi / (psi^T P psi + lambda), theta += K (z - psi^T theta),
/// P = (I - K psi^T) P / lambda, then symmetrized.
inline RecursiveState rwls_step(const RecursiveState& state, const Eigen::Ref<const Vector>& psi,
                                double z, double lambda) {
  detail::require(lambda >= kMinForgettingFactor && lambda <= 1.0, ErrorCode::InvalidArgument,
                  "forgetting factor must lie in [0.5, 1], got " + std::to_string(lambda));
  detail::require_dims(psi.size() == state.theta.size(),
                       "recursive step: regressor has " + std::to_string(psi.size()) +
                           " entries, theta has " + std::to_string(state.theta.size()));
  RecursiveState next;
  const Vector p_psi = state.P * psi;
  const double denom = psi.dot(p_psi) + lambda;
  next.K_last = p_psi / denom;
  next.theta = state.theta + next.K_last * (z - psi.dot(state.theta));
  next.P = (state.P - next.K_last * p_psi.transpose()) / lambda;
  symmetrize(next.P);
  next.k = state.k + 1;
  return next;
}

inline RecursiveState rls_step(const RecursiveState& state, const Eigen::Ref<const Vector>& psi,
                               double z) {
  return rwls_step(state, psi, z, 1.0);
}

/// What rwcls_step does when D P D^T is numerically singular. That happens by
/// construction when the state comes from rls_init_constrained (D P = 0).
enum class ProjectionPolicy {
  Strict,             ///< throw ErrorCode::Singular
  EuclideanFallback,  ///< project with L = D^T (D D^T)^{-1}
};

struct WeightedConstrainedStep {
  RecursiveState wls;  ///< unprojected state, propagated to the next step
  Vector theta_wcls;   ///< (I - L D) theta_WLS + L d
  bool used_fallback = false;
};

/// Relative threshold on sigma_min(D P D^T) / (sigma_max(D)^2 sigma_max(P)).
inline constexpr double kProjectionSingularity = 1e-10;

/// theta_WCLS = (I - L D) theta + L d with L = P D^T (D P D^T)^{-1}.
inline Vector project_weighted(const Vector& theta, const Matrix& P, const Matrix& D,
                               const Vector& d, ProjectionPolicy policy,
                               bool* used_fallback = nullptr) {
  detail::require_dims(D.cols() == theta.size() && d.size() == D.rows(),
                       "projection: D, d and theta shapes disagree");
  detail::require_full_row_rank(D);
  const Matrix pdt = P * D.transpose();
  const Matrix inner = D * pdt;
  const Vector inner_sv = singular_values(inner);
  const double scale = singular_values(D)(0) * singular_values(D)(0) *
                       (P.size() == 0 ? 0.0 : singular_values(P)(0));
  const bool singular = inner_sv.size() == 0 ||
                        inner_sv(inner_sv.size() - 1) <= kProjectionSingularity * scale;
  Matrix L;
  if (!singular) {
    L = pdt * inner.ldlt().solve(Matrix::Identity(D.rows(), D.rows()));
  } else if (policy == ProjectionPolicy::EuclideanFallback) {
    const auto rs = detail::row_space(D);
    L = rs.Q * rs.R.transpose().triangularView<Eigen::Lower>().solve(
                   Matrix::Identity(D.rows(), D.rows()));
  } else {
    throw Error(ErrorCode::Singular, "rwcls: D_k P_k D_k^T is singular");
  }
  if (used_fallback != nullptr) *used_fallback = singular;
  // One pass of iterative refinement: D L = I holds only to the accuracy of
  // the inner solve, so the leftover residual is projected out again.
  Vector out = theta - L * (D * theta - d);
  out -= L * (D * out - d);
  return out;
}

inline WeightedConstrainedStep rwcls_step(const RecursiveState& state,
                                          const Eigen::Ref<const Vector>& psi, double z,
                                          const Matrix& Dk, const Vector& dk, double lambda,
                                          ProjectionPolicy policy = ProjectionPolicy::Strict) {
  WeightedConstrainedStep out;
  out.wls = rwls_step(state, psi, z, lambda);
  out.theta_wcls = project_weighted(out.wls.theta, out.wls.P, Dk, dk, policy, &out.used_fallback);
  return out;
}

/// Diagnostics collected while a recursive estimator runs over a record.
struct RecursiveTrace {
  double theta_residual_max = 0.0;  ///< max_k ||D theta_k - d||
  double gain_residual_max = 0.0;   ///< max_k ||D K_k||
  double cov_residual_max = 0.0;    ///< max_k ||D P_k||
  Index updates = 0;
};

/// Feeds every scalar row of `reg` in order. `lambda` is a per-sample
/// forgetting factor: it is applied on the first row of each time step and
/// the remaining n - 1 rows of that step use 1, which matches the
/// matrix-output recursion with forgetting per time sample.
inline RecursiveState run_recursive(RecursiveState state, const RegressionData& reg,
                                    double lambda = 1.0,
                                    const VectorizedConstraint* monitor = nullptr,
                                    RecursiveTrace* trace = nullptr) {
  detail::require_dims(reg.Psi.cols() == state.theta.size(),
                       "run_recursive: regressor and state sizes differ");
  for (Index r = 0; r < reg.Psi.rows(); ++r) {
    const double step_lambda = (r % reg.states == 0) ? lambda : 1.0;
    state = rwls_step(state, reg.Psi.row(r).transpose(), reg.Z(r), step_lambda);
    if (monitor != nullptr && trace != nullptr) {
      trace->theta_residual_max = std::max(trace->theta_residual_max, monitor->residual(state.theta));
      trace->gain_residual_max = std::max(trace->gain_residual_max, max_abs(monitor->D * state.K_last));
      trace->cov_residual_max = std::max(trace->cov_residual_max, max_abs(monitor->D * state.P));
    }
    if (trace != nullptr) ++trace->updates;
  }
  return state;
}

/// RLS from the constrained initialization over the whole record.
inline ParamEstimate rcls_batch(const RegressionData& reg, const VectorizedConstraint& vc,
                                const Vector& theta0, const Matrix& P0,
                                RecursiveTrace* trace = nullptr) {
  const RecursiveState init = rls_init_constrained(theta0, P0, vc);
  const RecursiveState fin = run_recursive(init, reg, 1.0, &vc, trace);
  return make_estimate(Method::RCLS, fin.theta, reg.states, reg.inputs, &vc);
}

}  // namespace sscls
