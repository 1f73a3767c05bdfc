#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace idscale {

// Failure categories surfaced by the library. The CLI maps each one to a
// distinct process exit code.
enum class ErrorCode {
  invalid_argument,
  parse_error,
  degenerate_dataset,
  insufficient_graph_depth,
  degenerate_scale,
  estimate_unbounded,
  degenerate_sample,
  optimization_failure,
};

std::string_view to_string(ErrorCode code) noexcept;

// Nonzero process exit code for an error category.
int exit_code(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace idscale
