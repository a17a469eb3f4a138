#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cjt/dictionary.hpp"

namespace cjt {

enum class CompareOp { kEq, kNe, kLt, kLe, kGt, kGe, kIn };

std::string_view to_string(CompareOp op);
CompareOp compare_op_from_string(std::string_view text);

struct Atom {
  std::string attr;
  CompareOp op = CompareOp::kEq;
  /// One literal for comparisons, one or more for IN.
  std::vector<std::string> literals;

  bool operator==(const Atom&) const = default;
};

/// Conjunction of atoms. An empty predicate is a tautology.
struct Predicate {
  std::vector<Atom> atoms;

  static Predicate eq(std::string attr, std::string literal);
  static Predicate in(std::string attr, std::vector<std::string> literals);
  static Predicate cmp(std::string attr, CompareOp op, std::string literal);

  bool empty() const { return atoms.empty(); }
  /// Sorted, deduplicated referenced attributes.
  std::vector<std::string> attributes() const;
  /// Order-independent text form; equal predicates give equal strings.
  std::string canonical() const;

  Predicate conjoin(const Predicate& other) const;

  bool operator==(const Predicate& other) const { return canonical() == other.canonical(); }
};

void to_json(nlohmann::json& j, const Predicate& p);
void from_json(const nlohmann::json& j, Predicate& p);

/// Predicate bound to the column layout of one relation.
class CompiledPredicate {
 public:
  CompiledPredicate(const Predicate& pred, const std::vector<std::string>& attrs, const Dictionary& dict);

  bool matches(const Value* row) const;

 private:
  struct Term {
    std::size_t column;
    CompareOp op;
    bool numeric;
    std::vector<Value> ids;
    std::vector<double> numbers;
  };
  std::vector<Term> terms_;
};

}  // namespace cjt
