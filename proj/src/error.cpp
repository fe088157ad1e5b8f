#include "lapret/error.hpp"

namespace lapret {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::overlap_too_short: return "overlap-too-short";
    case ErrorCode::role_mismatch: return "role-mismatch";
    case ErrorCode::invalid_eta: return "invalid-eta";
    case ErrorCode::singular_design: return "singular-design";
    case ErrorCode::no_variation: return "no-variation";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::window_too_short: return "window-too-short";
    case ErrorCode::degenerate_input: return "degenerate-input";
    case ErrorCode::too_few_units: return "too-few-units";
    case ErrorCode::pilot_overlap: return "pilot-overlap";
    case ErrorCode::empty_window: return "empty-window";
    case ErrorCode::unknown_scenario: return "unknown-scenario";
    case ErrorCode::total_too_small: return "total-too-small";
    case ErrorCode::no_treated_dmas: return "no-treated-dmas";
    case ErrorCode::no_control_dmas: return "no-control-dmas";
    case ErrorCode::schema_error: return "schema-error";
    case ErrorCode::duplicate_row: return "duplicate-row";
    case ErrorCode::non_contiguous_days: return "non-contiguous-days";
    case ErrorCode::dangling_event: return "dangling-event";
  }
  return "unknown-error";
}

}  // namespace lapret
