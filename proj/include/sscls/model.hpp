#pragma once

#include <string>

#include "sscls/linalg.hpp"

namespace sscls {

/// x_{k+1} = A x_k + B u_k + G w_k, with the full state measured.
/// B and G always have n rows; B may have zero columns (no input).
struct StateSpaceModel {
  Matrix A;
  Matrix B;
  Matrix G;

  Index states() const { return A.rows(); }
  Index inputs() const { return B.cols(); }
  Index noise_inputs() const { return G.cols(); }

  void validate() const {
    detail::require_dims(A.rows() == A.cols(),
                         "A must be square, got " + std::to_string(A.rows()) +
                             "x" + std::to_string(A.cols()));
    detail::require_dims(B.rows() == states(),
                         "B has " + std::to_string(B.rows()) +
                             " rows, expected n=" + std::to_string(states()));
    detail::require_dims(G.rows() == states(),
                         "G has " + std::to_string(G.rows()) +
                             " rows, expected n=" + std::to_string(states()));
  }
};

}  // namespace sscls
