#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sscls {

enum class ErrorCode {
  DimensionMismatch,
  RankDeficient,
  Singular,
  InvalidArgument,
  Io,
  Parse,
};

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::RankDeficient: return "rank_deficient";
    case ErrorCode::Singular: return "singular";
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::Io: return "io";
    case ErrorCode::Parse: return "parse";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when a matrix that must have full rank does not. Carries the
/// numerical rank that was observed.
class RankError : public Error {
 public:
  RankError(const std::string& what_matrix, long rank, long required)
      : Error(ErrorCode::RankDeficient,
              what_matrix + " is rank deficient (numerical rank " +
                  std::to_string(rank) + ", required " +
                  std::to_string(required) + ")"),
        rank_(rank),
        required_(required) {}

  long rank() const noexcept { return rank_; }
  long required() const noexcept { return required_; }

 private:
  long rank_;
  long required_;
};

namespace detail {

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

inline void require_dims(bool condition, const std::string& message) {
  if (!condition) throw Error(ErrorCode::DimensionMismatch, message);
}

}  // namespace detail
}  // namespace sscls
