#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cjt/jointree.hpp"
#include "cjt/predicate.hpp"

namespace cjt {

/// An SPJA query over a join graph.
struct QuerySpec {
  std::vector<std::string> group_by;
  /// Each entry is placed as one selection annotation.
  std::vector<Predicate> predicates;
  std::vector<std::string> excluded;
  std::map<std::string, std::string> updates;

  /// Sorted group-by, predicates ordered by canonical form.
  QuerySpec normalized() const;
  std::string canonical() const;
  bool operator==(const QuerySpec& other) const { return canonical() == other.canonical(); }
};

void to_json(nlohmann::json& j, const QuerySpec& q);
void from_json(const nlohmann::json& j, QuerySpec& q);

/// Incremental edit applied to a query, as sent by dashboard widgets.
/// Recognized keys: group_by (replace), add_group_by, remove_group_by,
/// predicates (replace), add_predicates, remove_predicates (by attribute),
/// exclude, include, update, restore.
QuerySpec apply_delta(const QuerySpec& base, const nlohmann::json& delta);

enum class AnnotationKind { kGroupBy, kMarginalize, kSelect, kExclude, kUpdate };

struct BagAnnotation {
  AnnotationKind kind = AnnotationKind::kGroupBy;
  std::string attr;      // group-by, marginalize
  Predicate predicate;   // select
  std::string relation;  // exclude, update
  std::string version;   // update

  static BagAnnotation group_by(std::string attr);
  static BagAnnotation marginalize(std::string attr);
  static BagAnnotation select(Predicate p);
  static BagAnnotation exclude(std::string relation);
  static BagAnnotation update(std::string relation, std::string version);

  /// Attributes the annotation references (empty for exclude/update).
  std::vector<std::string> attributes() const;
  std::string canonical() const;
  bool operator==(const BagAnnotation& o) const { return canonical() == o.canonical(); }
};

struct Placement {
  BagAnnotation annotation;
  BagId bag = 0;
};

struct AnnotationSet {
  std::vector<Placement> placements;
  /// Output group-by attributes, sorted.
  std::vector<std::string> output;

  std::vector<const BagAnnotation*> on(BagId bag) const;
  /// Sorted canonical strings of the annotations on `bag`.
  std::vector<std::string> signature(BagId bag) const;
  bool is_excluded(const std::string& relation) const;
  std::optional<std::string> version_of(const std::string& relation) const;
  std::string canonical() const;
};

nlohmann::json to_json(const AnnotationSet& a, const JunctionHypertree& jt);

enum class SelectionPlacement { kNearRoot, kPushDown };

struct BindOptions {
  /// Bag that "near root" and "deepest" are measured from. Defaults to the
  /// bag with the most mapped rows.
  std::optional<BagId> reference_root;
  SelectionPlacement selection = SelectionPlacement::kNearRoot;
};

BagId default_reference_root(const JunctionHypertree& jt);

/// Checks that the query only names known relations, versions and attributes
/// and that every group-by attribute is still provided once exclusions apply.
void validate_query(const JoinGraph& g, const JunctionHypertree& jt, const QuerySpec& q);

/// Bags that may carry a selection over `attrs`: those with an active mapped
/// relation covering every attribute.
std::vector<BagId> selection_candidates(const JunctionHypertree& jt, const std::vector<std::string>& attrs,
                                        const std::vector<std::string>& excluded);

/// Bags with an active mapped relation holding `attr`; the default home of a
/// group-by annotation.
std::vector<BagId> attribute_candidates(const JunctionHypertree& jt, const std::string& attr,
                                        const std::vector<std::string>& excluded);

/// Whether excluding `relation` keeps the hypertree usable: its bag is a leaf
/// or the bag's other relations still cover every neighbor intersection.
bool exclusion_allowed(const JunctionHypertree& jt, const std::string& relation,
                       const std::vector<std::string>& excluded);

AnnotationSet bind_annotations(const JoinGraph& g, const JunctionHypertree& jt, const QuerySpec& q,
                               const BindOptions& options = {});

}  // namespace cjt
