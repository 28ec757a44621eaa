#include "vpatch/error.hpp"

namespace vpatch {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::nesting_violation: return "NESTING_VIOLATION";
    case ErrorCode::quadrature_underresolved: return "QUADRATURE_UNDERRESOLVED";
    case ErrorCode::negative_radicand: return "NEGATIVE_RADICAND";
    case ErrorCode::not_nested: return "NOT_NESTED";
    case ErrorCode::point_on_boundary: return "POINT_ON_BOUNDARY";
    case ErrorCode::domain: return "DOMAIN";
    case ErrorCode::b_too_large: return "B_TOO_LARGE";
    case ErrorCode::not_a_root: return "NOT_A_ROOT";
    case ErrorCode::param_window: return "PARAM_WINDOW";
    case ErrorCode::no_root: return "NO_ROOT";
    case ErrorCode::degenerate: return "DEGENERATE";
    case ErrorCode::no_convergence: return "NO_CONVERGENCE";
    case ErrorCode::singular_jacobian: return "SINGULAR_JACOBIAN";
    case ErrorCode::t_s_singular: return "T_S_SINGULAR";
    case ErrorCode::invalid_config: return "INVALID_CONFIG";
    case ErrorCode::io: return "IO";
  }
  return "UNKNOWN";
}

}  // namespace vpatch
