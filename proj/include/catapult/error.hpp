#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace catapult {

enum class ErrorCode {
  invalid_argument,
  unknown_mode,
  dimension_mismatch,
  leakage,
  step_underflow,
  positivity,
  infeasible,
  fit_failed,
  sampling,
  io,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the library. The code is what
/// the CLI writes into its machine-readable error record.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace catapult
