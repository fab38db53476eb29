#include "catapult/error.hpp"

namespace catapult {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::unknown_mode: return "unknown_mode";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::leakage: return "leakage";
    case ErrorCode::step_underflow: return "step_underflow";
    case ErrorCode::positivity: return "positivity";
    case ErrorCode::infeasible: return "infeasible";
    case ErrorCode::fit_failed: return "fit_failed";
    case ErrorCode::sampling: return "sampling";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

}  // namespace catapult
