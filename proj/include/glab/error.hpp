#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace glab {

enum class ErrorCode {
  invalid_parameter,
  invalid_measure,
  invalid_family,
  too_large,
  under_determined,
  aggregation_failure,
  step_too_coarse,
  numerical_failure,
  tilt_infeasible,
  not_a_supermartingale,
  not_a_supermartingale_shape,
  inconsistent_obstacle,
  no_feasible_control,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_parameter: return "invalid-parameter";
    case ErrorCode::invalid_measure: return "invalid-measure";
    case ErrorCode::invalid_family: return "invalid-family";
    case ErrorCode::too_large: return "too-large";
    case ErrorCode::under_determined: return "under-determined";
    case ErrorCode::aggregation_failure: return "aggregation-failure";
    case ErrorCode::step_too_coarse: return "step-too-coarse";
    case ErrorCode::numerical_failure: return "numerical-failure";
    case ErrorCode::tilt_infeasible: return "tilt-infeasible";
    case ErrorCode::not_a_supermartingale: return "not-a-supermartingale";
    case ErrorCode::not_a_supermartingale_shape: return "not-a-supermartingale-shape";
    case ErrorCode::inconsistent_obstacle: return "inconsistent-obstacle";
    case ErrorCode::no_feasible_control: return "no-feasible-control";
  }
  return "unknown";
}

/// Every failure raised by the library. `witness()` names the offending
/// node (global index) when the failure is local to one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what,
        std::optional<std::size_t> witness = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        witness_(witness) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> witness() const noexcept { return witness_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> witness_;
};

}  // namespace glab
