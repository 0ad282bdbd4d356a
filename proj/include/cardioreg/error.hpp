#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cardioreg {

enum class ErrorCode {
  io,
  parse,
  dimension_mismatch,
  invalid_label,
  attribute_extraction,
  degenerate_base,
  degenerate_stats,
  mixed_domains,
  empty_input,
  sequence_too_short,
  missing_threshold,
  length_mismatch,
  step_size,
  non_finite,
  invalid_argument,
  decode,
  fit,
  undefined_metric,
  config,
};

std::string_view error_code_name(ErrorCode code);

/// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Re-throws `e` with "frame N: " prefixed to the message, keeping the code.
[[noreturn]] void rethrow_with_frame(const Error& e, std::size_t frame);

}  // namespace cardioreg
