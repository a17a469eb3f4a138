#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cjt/dictionary.hpp"
#include "cjt/predicate.hpp"
#include "cjt/semiring.hpp"

namespace cjt {

/// Deduplicated tuple set over a sorted attribute list, one semiring
/// annotation per tuple. Rows are kept in canonical (lexicographic) order and
/// zero-annotated rows never appear, so two relations holding the same
/// content compare byte-equal.
class AnnotatedRelation {
 public:
  AnnotatedRelation() = default;
  AnnotatedRelation(std::vector<std::string> attrs, SemiringSpec spec);

  /// The single-row, zero-attribute relation whose annotation is 1.
  static AnnotatedRelation unit(const SemiringSpec& spec);

  const std::vector<std::string>& attrs() const { return attrs_; }
  const SemiringSpec& spec() const { return spec_; }
  std::size_t arity() const { return attrs_.size(); }
  std::size_t size() const { return annotations_.size(); }
  bool empty() const { return annotations_.empty(); }

  std::span<const Value> row(std::size_t i) const { return {cells_.data() + i * arity(), arity()}; }
  const Annotation& annotation(std::size_t i) const { return annotations_[i]; }
  std::span<const Value> cells() const { return cells_; }

  bool has_attr(std::string_view name) const;
  std::optional<std::size_t> column(std::string_view name) const;

  /// Annotation of the tuple, or nullopt when absent (i.e. zero).
  std::optional<Annotation> find(std::span<const Value> tuple) const;

  /// ⊕ of every annotation (zero if empty).
  Annotation total() const;

  /// Byte string identifying schema, spec and content.
  std::string canonical_bytes() const;

  bool operator==(const AnnotatedRelation& other) const;

 private:
  friend class RelationBuilder;

  std::vector<std::string> attrs_;
  SemiringSpec spec_;
  std::vector<Value> cells_;
  std::vector<Annotation> annotations_;
};

/// Accumulates rows, ⊕-folding duplicates, and produces a canonical relation.
class RelationBuilder {
 public:
  RelationBuilder(std::vector<std::string> attrs, SemiringSpec spec);

  /// `tuple` is aligned with the sorted attribute list given at construction.
  void add(std::span<const Value> tuple, const Annotation& a);
  std::size_t distinct() const { return annotations_.size(); }
  AnnotatedRelation build() &&;

 private:
  void rehash(std::size_t capacity);

  std::vector<std::string> attrs_;
  SemiringSpec spec_;
  std::vector<Value> cells_;
  std::vector<Annotation> annotations_;
  std::vector<std::uint32_t> slots_;
  std::size_t mask_ = 0;
};

/// Sorted, deduplicated union of two attribute lists.
std::vector<std::string> attr_union(const std::vector<std::string>& a, const std::vector<std::string>& b);
std::vector<std::string> attr_intersection(const std::vector<std::string>& a, const std::vector<std::string>& b);
std::vector<std::string> attr_difference(const std::vector<std::string>& a, const std::vector<std::string>& b);
std::vector<std::string> sorted_attrs(std::vector<std::string> attrs);

/// Natural join; annotations multiply.
AnnotatedRelation join(const AnnotatedRelation& r, const AnnotatedRelation& s);

/// Removes `out_attrs`, ⊕-folding rows that collide on the remaining attributes.
AnnotatedRelation marginalize(const AnnotatedRelation& r, const std::vector<std::string>& out_attrs);

/// Marginalizes every attribute outside `keep`; attributes of `keep` missing
/// from `r` are ignored.
AnnotatedRelation project(const AnnotatedRelation& r, const std::vector<std::string>& keep);

AnnotatedRelation select(const AnnotatedRelation& r, const Predicate& pred, const Dictionary& dict);

struct ColumnSpec {
  std::string name;
  AttrType type = AttrType::kCategorical;
  /// Measures feed the lift and are not kept as relation attributes.
  bool measure = false;
  std::optional<std::vector<std::string>> domain;
};

struct TableSchema {
  std::vector<ColumnSpec> columns;
};

struct CsvOptions {
  char delimiter = ',';
};

/// Reads a headered CSV. Columns named in `spec.lift_attrs` are lifted; lift
/// attributes this table does not declare contribute the ⊗ identity.
AnnotatedRelation load_csv(const std::string& path, const TableSchema& schema, const SemiringSpec& spec,
                           Dictionary& dict, const CsvOptions& options = {});

/// Same as `load_csv` over in-memory text; `origin` names the source in errors.
AnnotatedRelation parse_csv(std::string_view text, const TableSchema& schema, const SemiringSpec& spec,
                            Dictionary& dict, const CsvOptions& options = {},
                            const std::string& origin = "<memory>");

/// Writes a relation as CSV with decoded values and the annotation scalar.
std::string to_csv(const AnnotatedRelation& r, const Dictionary& dict);

}  // namespace cjt
