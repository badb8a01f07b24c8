#include "mspline/error.hpp"

namespace mspline {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::InvalidDesign: return "invalid-design";
    case ErrorCode::InsufficientData: return "insufficient-data";
    case ErrorCode::OutOfRange: return "out-of-range";
    case ErrorCode::InvalidScale: return "invalid-scale";
    case ErrorCode::DegenerateScale: return "degenerate-scale";
    case ErrorCode::IllPosed: return "ill-posed";
    case ErrorCode::DegenerateGcv: return "degenerate-gcv";
    case ErrorCode::SelectionFailed: return "selection-failed";
    case ErrorCode::DataFormat: return "data-format";
    case ErrorCode::Config: return "config";
  }
  return "unknown";
}

ErrorCategory category_of(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::Config:
      return ErrorCategory::Usage;
    case ErrorCode::InvalidDesign:
    case ErrorCode::InsufficientData:
    case ErrorCode::OutOfRange:
    case ErrorCode::DataFormat:
      return ErrorCategory::Data;
    case ErrorCode::InvalidScale:
    case ErrorCode::DegenerateScale:
    case ErrorCode::IllPosed:
    case ErrorCode::DegenerateGcv:
    case ErrorCode::SelectionFailed:
      return ErrorCategory::Numerical;
  }
  return ErrorCategory::Numerical;
}

}  // namespace mspline
