#include "idscale/error.hpp"

namespace idscale {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::degenerate_dataset: return "degenerate-dataset";
    case ErrorCode::insufficient_graph_depth: return "insufficient-graph-depth";
    case ErrorCode::degenerate_scale: return "degenerate-scale";
    case ErrorCode::estimate_unbounded: return "estimate-unbounded";
    case ErrorCode::degenerate_sample: return "degenerate-sample";
    case ErrorCode::optimization_failure: return "optimization-failure";
  }
  return "unknown";
}

int exit_code(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return 2;
    case ErrorCode::parse_error: return 3;
    case ErrorCode::degenerate_dataset: return 4;
    case ErrorCode::insufficient_graph_depth: return 5;
    case ErrorCode::degenerate_scale: return 6;
    case ErrorCode::estimate_unbounded: return 7;
    case ErrorCode::degenerate_sample: return 8;
    case ErrorCode::optimization_failure: return 9;
  }
  return 1;
}

}  // namespace idscale
