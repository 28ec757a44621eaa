#pragma once

#include <stdexcept>
#include <string>

namespace vpatch {

enum class ErrorCode {
  nesting_violation,
  quadrature_underresolved,
  negative_radicand,
  not_nested,
  point_on_boundary,
  domain,
  b_too_large,
  not_a_root,
  param_window,
  no_root,
  degenerate,
  no_convergence,
  singular_jacobian,
  t_s_singular,
  invalid_config,
  io,
};

/// Stable machine-readable tag, e.g. "B_TOO_LARGE".
const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace vpatch
