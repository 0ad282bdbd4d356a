#include "cardioreg/error.hpp"

namespace cardioreg {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::io: return "io";
    case ErrorCode::parse: return "parse";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::invalid_label: return "invalid_label";
    case ErrorCode::attribute_extraction: return "attribute_extraction";
    case ErrorCode::degenerate_base: return "degenerate_base";
    case ErrorCode::degenerate_stats: return "degenerate_stats";
    case ErrorCode::mixed_domains: return "mixed_domains";
    case ErrorCode::empty_input: return "empty_input";
    case ErrorCode::sequence_too_short: return "sequence_too_short";
    case ErrorCode::missing_threshold: return "missing_threshold";
    case ErrorCode::length_mismatch: return "length_mismatch";
    case ErrorCode::step_size: return "step_size";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::decode: return "decode";
    case ErrorCode::fit: return "fit";
    case ErrorCode::undefined_metric: return "undefined_metric";
    case ErrorCode::config: return "config";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

void rethrow_with_frame(const Error& e, std::size_t frame) {
  std::string msg = e.what();
  // strip the "<code>: " prefix added by the constructor
  const auto prefix = std::string(error_code_name(e.code())) + ": ";
  if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
  throw Error(e.code(), "frame " + std::to_string(frame) + ": " + msg);
}

}  // namespace cardioreg
