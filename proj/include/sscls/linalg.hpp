#pragma once

// Small dense linear-algebra helpers shared by every module. Everything here
// works on column-major Eigen storage, so vec() is a plain reinterpretation
// of the coefficient buffer.

#include <Eigen/Dense>

#include <algorithm>
#include <string>

#include "sscls/error.hpp"

namespace sscls {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Relative singular-value threshold used for every rank decision.
inline constexpr double kRankTolerance = 1e-10;

/// Column-stacking vectorization.
inline Vector vec(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

/// Inverse of vec(): rebuilds a rows x cols matrix from its stacked columns.
inline Matrix unvec(const Vector& v, Index rows, Index cols) {
  detail::require_dims(v.size() == rows * cols,
                       "unvec: vector of length " + std::to_string(v.size()) +
                           " cannot be reshaped to " + std::to_string(rows) +
                           "x" + std::to_string(cols));
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// Max-norm; zero for empty arguments.
template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline Vector singular_values(const Matrix& m) {
  if (m.size() == 0) return Vector();
  return Eigen::JacobiSVD<Matrix>(m).singularValues();
}

/// Number of singular values >= rel_tol * sigma_max.
inline Index numerical_rank(const Matrix& m, double rel_tol = kRankTolerance) {
  const Vector sv = singular_values(m);
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double cut = rel_tol * sv(0);
  return static_cast<Index>(std::count_if(sv.begin(), sv.end(),
                                          [cut](double s) { return s >= cut; }));
}

inline void symmetrize(Matrix& p) { p = 0.5 * (p + p.transpose()).eval(); }

}  // namespace sscls
