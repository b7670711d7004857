#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace etest {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  NotPositiveDefinite,
  SingularSystem,
  // EMT1 tensor files
  BadMagic,
  BadDtype,
  Truncated,
  TrailingBytes,
  // EMB1 embedding files
  ParseError,
  NormOutOfTolerance,
  DuplicateId,
  UnknownId,
  // splitting
  NegativeEntries,
  NonIntegerCounts,
  Unsupported,
  // encoders / estimators
  ZeroImageEmbedding,
  MissingShape,
  ExternalProcessFailed,
  // inference
  NoFeasibleLambda,
  DegenerateHypotheses,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure in the library is reported as an Error carrying a code, so
/// callers (and tests) can distinguish failure kinds without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace etest
