#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lapret {

enum class ErrorCode {
  invalid_argument,
  overlap_too_short,
  role_mismatch,
  invalid_eta,
  singular_design,
  no_variation,
  dimension_mismatch,
  window_too_short,
  degenerate_input,
  too_few_units,
  pilot_overlap,
  empty_window,
  unknown_scenario,
  total_too_small,
  no_treated_dmas,
  no_control_dmas,
  schema_error,
  duplicate_row,
  non_contiguous_days,
  dangling_event,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lapret
