#pragma once

#include <stdexcept>
#include <string>

namespace ddid {

// Error categories shared by the core and the C API. The numeric values are
// part of the C ABI (see include/ddid/ddid.h) and must not be reordered.
enum class ErrorCode : int {
  invalid_argument = 1,
  io = 2,
  schema = 3,
  validation = 4,
  domain = 5,
  empty_cell = 6,
  degenerate_weight = 7,
  near_singular = 8,
  rank_deficient = 9,
  unstable_resampling = 10,
  no_clean_control = 11,
  internal = 12,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised when a (group, period) cell has no observations.
class EmptyCellError : public Error {
 public:
  EmptyCellError(std::string group, int period)
      : Error(ErrorCode::empty_cell,
              "empty cell: group " + group + ", period index " + std::to_string(period)),
        group_(std::move(group)),
        period_(period) {}
  const std::string& group() const noexcept { return group_; }
  int period() const noexcept { return period_; }

 private:
  std::string group_;
  int period_;
};

class NearSingularError : public Error {
 public:
  NearSingularError(const std::string& what, double smallest_eigenvalue)
      : Error(ErrorCode::near_singular, what), smallest_(smallest_eigenvalue) {}
  double smallest_eigenvalue() const noexcept { return smallest_; }

 private:
  double smallest_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace ddid
