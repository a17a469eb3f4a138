#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cjt/join_graph.hpp"

namespace cjt {

using BagId = std::uint32_t;

struct DirectedEdge {
  BagId from = 0;
  BagId to = 0;

  DirectedEdge reversed() const { return {to, from}; }
  auto operator<=>(const DirectedEdge&) const = default;
};

struct Bag {
  BagId id = 0;
  std::vector<std::string> attrs;      // sorted
  std::vector<std::string> relations;  // relations mapped here
  bool empty_bag = false;
};

struct RelationInfo {
  std::string name;
  std::vector<std::string> attrs;
  std::size_t rows = 0;
  std::string version;
};

struct GyoResult {
  bool acyclic = false;
  std::vector<std::string> elimination_order;
};

/// GYO ear removal over relation schemas.
GyoResult gyo_check(const std::vector<std::vector<std::string>>& schemas);
GyoResult gyo_check(const JoinGraph& g);

/// Tree of bags with the relation mapping. Edges are undirected; every edge is
/// usable in both directions.
class JunctionHypertree {
 public:
  JunctionHypertree() = default;

  BagId add_bag(std::vector<std::string> attrs, std::vector<std::string> relations, bool empty_bag = false);
  void add_edge(BagId a, BagId b);
  void remove_edge(BagId a, BagId b);
  void set_relation_info(RelationInfo info);

  std::size_t size() const { return bags_.size(); }
  const Bag& bag(BagId id) const;
  const std::vector<Bag>& bags() const { return bags_; }
  const std::vector<BagId>& neighbors(BagId id) const;
  bool adjacent(BagId a, BagId b) const;
  bool is_leaf(BagId id) const { return neighbors(id).size() <= 1; }

  /// Undirected edges as (low, high) pairs in ascending order.
  std::vector<std::pair<BagId, BagId>> edges() const;
  std::vector<DirectedEdge> directed_edges() const;

  std::optional<BagId> bag_of(const std::string& relation) const;
  const std::map<std::string, BagId>& mapping() const { return mapping_; }
  const std::map<std::string, RelationInfo>& relation_infos() const { return infos_; }
  const RelationInfo& relation_info(const std::string& name) const;

  /// Bags on `from`'s side of the edge from→to, including `from`.
  std::vector<BagId> upstream(BagId from, BagId to) const;
  /// Bags on the path a..b inclusive.
  std::vector<BagId> path(BagId a, BagId b) const;
  std::size_t distance(BagId a, BagId b) const { return path(a, b).size() - 1; }

  /// Bags whose attribute set contains `attr`.
  std::vector<BagId> bags_with(const std::string& attr) const;
  std::vector<std::string> attributes() const;

  /// Sum of current-version row counts of relations mapped to the bag.
  std::size_t mapped_rows(BagId id) const;

  /// Text form of the structure (bags, mapping, edges), for diagnostics.
  std::string describe() const;

 private:
  std::vector<Bag> bags_;
  std::vector<std::vector<BagId>> adj_;
  std::map<std::string, BagId> mapping_;
  std::map<std::string, RelationInfo> infos_;
};

/// One bag per relation joined along a maximum spanning tree of shared
/// attribute counts, or the graph's explicit layout when present. Declared
/// empty bags are spliced afterwards.
JunctionHypertree build_jt(const JoinGraph& g);

struct JtViolation {
  enum class Kind { kNone, kNotATree, kVertexCoverage, kEdgeCoverage, kMapping, kRunningIntersection };
  Kind kind = Kind::kNone;
  std::string witness;
  std::string message;

  bool ok() const { return kind == Kind::kNone; }
};

std::string_view to_string(JtViolation::Kind kind);

JtViolation validate_jt(const JunctionHypertree& jt);

/// Adds an empty bag over `attrs` connected to `neighbors`, removing edges
/// that directly joined two of the neighbors. Throws kInvalidJoinTree when the
/// result does not validate.
JunctionHypertree add_empty_bag(const JunctionHypertree& jt, std::vector<std::string> attrs,
                                const std::vector<BagId>& neighbors, BagId* new_id = nullptr);

}  // namespace cjt
