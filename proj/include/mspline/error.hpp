#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mspline {

enum class ErrorCode {
  InvalidArgument,
  InvalidDesign,
  InsufficientData,
  OutOfRange,
  InvalidScale,
  DegenerateScale,
  IllPosed,
  DegenerateGcv,
  SelectionFailed,
  DataFormat,
  Config,
};

/// Coarse grouping used for process exit codes: usage 2, data 3, numerical 4.
enum class ErrorCategory { Usage = 2, Data = 3, Numerical = 4 };

std::string_view to_string(ErrorCode code) noexcept;
ErrorCategory category_of(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  [[nodiscard]] ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  ErrorCode code_;
};

}  // namespace mspline
