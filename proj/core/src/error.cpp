#include "cjt/error.hpp"

namespace cjt {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kKindMismatch: return "kind_mismatch";
    case ErrorCode::kMissingAttribute: return "missing_attribute";
    case ErrorCode::kNonNumeric: return "non_numeric";
    case ErrorCode::kSingular: return "singular";
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kMissingColumn: return "missing_column";
    case ErrorCode::kDomainViolation: return "domain_violation";
    case ErrorCode::kUnknownAttribute: return "unknown_attribute";
    case ErrorCode::kTypeMismatch: return "type_mismatch";
    case ErrorCode::kCyclicGraph: return "cyclic_graph";
    case ErrorCode::kDisconnectedGraph: return "disconnected_graph";
    case ErrorCode::kInvalidJoinTree: return "invalid_join_tree";
    case ErrorCode::kUnsupportedPredicate: return "unsupported_predicate";
    case ErrorCode::kInvalidQuery: return "invalid_query";
    case ErrorCode::kMissingMessage: return "missing_message";
    case ErrorCode::kAnnotationPlacement: return "annotation_placement";
    case ErrorCode::kOracleTooLarge: return "oracle_too_large";
    case ErrorCode::kUnknownId: return "unknown_id";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kUnsupportedSemiring: return "unsupported_semiring";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kConflict: return "conflict";
    case ErrorCode::kBudgetExceeded: return "budget_exceeded";
    case ErrorCode::kInternal: return "internal";
  }
  return "unknown";
}

}  // namespace cjt
