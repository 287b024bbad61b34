#pragma once

#include <stdexcept>
#include <string>

namespace lagan {

// Machine-parseable failure categories. The CLI prints the category name on
// stderr so callers can branch on it without scraping free-form messages.
enum class ErrorCategory {
  dimension,
  state,
  config,
  format,
  io,
  lookup,
  degenerate_batch,
  degenerate_axis,
  undefined_observable,
  insufficient_constituents,
  empty_input,
  numeric,
  usage,
};

inline const char* category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::dimension: return "dimension";
    case ErrorCategory::state: return "state";
    case ErrorCategory::config: return "config";
    case ErrorCategory::format: return "format";
    case ErrorCategory::io: return "io";
    case ErrorCategory::lookup: return "lookup";
    case ErrorCategory::degenerate_batch: return "degenerate-batch";
    case ErrorCategory::degenerate_axis: return "degenerate-axis";
    case ErrorCategory::undefined_observable: return "undefined-observable";
    case ErrorCategory::insufficient_constituents: return "insufficient-constituents";
    case ErrorCategory::empty_input: return "empty-input";
    case ErrorCategory::numeric: return "numeric";
    case ErrorCategory::usage: return "usage";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const { return category_; }
  const char* category_name() const { return lagan::category_name(category_); }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& message) {
  throw Error(category, message);
}

inline void require(bool condition, ErrorCategory category, const std::string& message) {
  if (!condition) fail(category, message);
}

}  // namespace lagan
