#pragma once

// Maps a state equality constraint S x_k = s onto the model matrices.
//
// A model x_{k+1} = A x_k + B u_k + G w_k keeps every trajectory started on
// the plane S x = s on that plane iff SA = S, SB = 0 and SG = 0. The first
// two conditions involve the estimated matrices and are rewritten either as
// Theta D1 = D2 with Theta = [A^T; B^T], or, after vectorization of
// theta = [vec(A); vec(B)], as the ordinary linear constraint D theta = d.

#include <algorithm>
#include <string>

#include "sscls/error.hpp"
#include "sscls/linalg.hpp"
#include "sscls/model.hpp"

namespace sscls {

/// Default absolute tolerance on the max-norm compatibility residuals.
inline constexpr double kCompatibilityTolerance = 1e-8;

/// The invariant plane S x = s. S has full row rank.
struct StateConstraint {
  Matrix S;
  Vector s;

  Index rows() const { return S.rows(); }
  Index states() const { return S.cols(); }

  /// Validating constructor: sizes must agree and S must have full row rank.
  static StateConstraint make(Matrix S, Vector s) {
    detail::require_dims(S.rows() == s.size(),
                         "constraint: S has " + std::to_string(S.rows()) +
                             " rows but s has " + std::to_string(s.size()) +
                             " entries");
    detail::require(S.rows() >= 1, ErrorCode::InvalidArgument,
                    "constraint: S must have at least one row");
    const Index rank = numerical_rank(S);
    if (rank != S.rows()) throw RankError("constraint matrix S", rank, S.rows());
    return StateConstraint{std::move(S), std::move(s)};
  }

  /// Largest |S x - s| entry.
  double violation(const Vector& x) const { return max_abs(S * x - s); }
};

/// Theta D1 = D2 with D1 = S^T and D2 = [S^T; 0_{p x n_r}].
struct MatrixParamConstraint {
  Matrix D1;
  Matrix D2;

  /// Max-norm of Theta D1 - D2.
  double residual(const Matrix& theta_matrix) const {
    detail::require_dims(theta_matrix.rows() == D2.rows() &&
                             theta_matrix.cols() == D1.rows(),
                         "matrix constraint: Theta has wrong shape");
    return max_abs(theta_matrix * D1 - D2);
  }
};

/// D theta = d on theta = [vec(A); vec(B)].
struct VectorizedConstraint {
  Matrix D;
  Vector d;

  Index rows() const { return D.rows(); }
  Index params() const { return D.cols(); }

  double residual(const Vector& theta) const {
    detail::require_dims(theta.size() == D.cols(),
                         "constraint residual: theta has " +
                             std::to_string(theta.size()) + " entries, D has " +
                             std::to_string(D.cols()) + " columns");
    return max_abs(D * theta - d);
  }
};

struct CompatibilityReport {
  double sa_residual = 0.0;
  double sb_residual = 0.0;
  double sg_residual = 0.0;
  bool compatible = false;

  double worst() const { return std::max({sa_residual, sb_residual, sg_residual}); }
};

inline CompatibilityReport check_compatibility(const StateSpaceModel& model,
                                               const StateConstraint& c,
                                               double tol = kCompatibilityTolerance) {
  model.validate();
  detail::require_dims(c.states() == model.states(),
                       "check_compatibility: S has " + std::to_string(c.states()) +
                           " columns but the model has n=" +
                           std::to_string(model.states()) + " states");
  detail::require(tol >= 0.0, ErrorCode::InvalidArgument,
                  "check_compatibility: negative tolerance");
  CompatibilityReport report;
  report.sa_residual = max_abs(c.S * model.A - c.S);
  report.sb_residual = max_abs(c.S * model.B);
  report.sg_residual = max_abs(c.S * model.G);
  report.compatible = report.worst() <= tol;
  return report;
}

inline MatrixParamConstraint build_matrix_constraint(const StateConstraint& c, Index p) {
  detail::require(p >= 0, ErrorCode::InvalidArgument,
                  "build_matrix_constraint: negative input count");
  const Index rank = numerical_rank(c.S);
  if (rank != c.rows()) throw RankError("constraint matrix S", rank, c.rows());
  const Index n = c.states();
  MatrixParamConstraint out;
  out.D1 = c.S.transpose();
  out.D2 = Matrix::Zero(n + p, c.rows());
  out.D2.topRows(n) = c.S.transpose();
  return out;
}

/// D = blkdiag(I_n (x) S, I_p (x) S), d = [vec(S); 0].
inline VectorizedConstraint vectorize_constraint(const StateConstraint& c, Index n, Index p) {
  detail::require_dims(c.states() == n,
                       "vectorize_constraint: S has " + std::to_string(c.states()) +
                           " columns, expected n=" + std::to_string(n));
  detail::require(p >= 0, ErrorCode::InvalidArgument,
                  "vectorize_constraint: negative input count");
  const Index nr = c.rows();
  VectorizedConstraint out;
  out.D = Matrix::Zero(nr * (n + p), n * (n + p));
  out.D.topLeftCorner(nr * n, n * n) = kron(Matrix::Identity(n, n), c.S);
  if (p > 0) out.D.bottomRightCorner(nr * p, n * p) = kron(Matrix::Identity(p, p), c.S);
  out.d = Vector::Zero(nr * (n + p));
  out.d.head(nr * n) = vec(c.S);
  return out;
}

/// ||vec(M N O) - (O^T (x) M) vec(N)||_max.
inline double vec_kron_identity_check(const Matrix& m, const Matrix& n, const Matrix& o) {
  detail::require_dims(m.cols() == n.rows() && n.cols() == o.rows(),
                       "vec_kron_identity_check: non-conformable factors " +
                           std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                           ", " + std::to_string(n.rows()) + "x" +
                           std::to_string(n.cols()) + ", " + std::to_string(o.rows()) +
                           "x" + std::to_string(o.cols()));
  const Matrix product = m * n * o;
  return max_abs(vec(product) - kron(o.transpose(), m) * vec(n));
}

}  // namespace sscls
