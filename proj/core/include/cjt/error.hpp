#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cjt {

/// Machine-readable error categories. The CLI and the HTTP server surface
/// these verbatim through `to_string`.
enum class ErrorCode {
  kKindMismatch,
  kMissingAttribute,
  kNonNumeric,
  kSingular,
  kParse,
  kMissingColumn,
  kDomainViolation,
  kUnknownAttribute,
  kTypeMismatch,
  kCyclicGraph,
  kDisconnectedGraph,
  kInvalidJoinTree,
  kUnsupportedPredicate,
  kInvalidQuery,
  kMissingMessage,
  kAnnotationPlacement,
  kOracleTooLarge,
  kUnknownId,
  kInvalidArgument,
  kUnsupportedSemiring,
  kIo,
  kConflict,
  kBudgetExceeded,
  kInternal,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace cjt
