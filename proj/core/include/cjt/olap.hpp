#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cjt/planner.hpp"

namespace cjt {

/// A calibrated CJT for one k-attribute group-by plus every bag's absorption.
struct Pivot {
  std::vector<std::string> attrs;
  std::shared_ptr<const AnnotatedTree> tree;
  std::shared_ptr<MessageStore> store;
  std::map<BagId, AnnotatedRelation> absorptions;
};

struct PivotSet {
  std::shared_ptr<const JoinGraph> graph;
  std::shared_ptr<const JunctionHypertree> jt;
  std::size_t k = 0;
  std::vector<std::string> universe;
  std::vector<Pivot> pivots;
  std::size_t messages_computed = 0;
  /// Rows across all stored absorptions.
  std::size_t materialized_rows = 0;
};

struct PivotOptions {
  /// Candidate group-by attributes; all categorical attributes when empty.
  std::vector<std::string> universe;
  /// Ceiling on materialized absorption rows.
  std::size_t row_budget = 50'000'000;
  BindOptions bind;
};

/// Every categorical attribute of the graph, sorted.
std::vector<std::string> categorical_attributes(const JoinGraph& g);

PivotSet build_pivots(const std::shared_ptr<const JoinGraph>& g, const std::shared_ptr<const JunctionHypertree>& jt,
                      std::size_t k, const PivotOptions& options = {});

struct CuboidAnswer {
  AnnotatedRelation relation;
  std::size_t computed = 0;
  std::size_t pivot = 0;
  std::size_t steiner_bags = 0;
  /// Answered by re-marginalizing a stored absorption.
  bool from_absorption = false;
};

/// Group-by `attrs` planned against the pivot needing the fewest messages
/// (then the smallest Steiner tree, then the lowest index).
CuboidAnswer answer_cuboid(const PivotSet& pivots, const std::vector<std::string>& attrs, const CostModel& cm);

struct Cube {
  std::map<std::vector<std::string>, AnnotatedRelation> cuboids;
  std::size_t pivot_messages = 0;
  std::size_t cuboid_messages = 0;
  std::size_t materialized_rows = 0;
  std::size_t cuboid_rows = 0;
};

/// Pivots of arity h-1, then every cuboid of arity at most h.
Cube build_cube(const std::shared_ptr<const JoinGraph>& g, const std::shared_ptr<const JunctionHypertree>& jt,
                std::size_t h, const PivotOptions& options = {});

/// All subsets of `universe` with exactly `k` elements, lexicographic.
std::vector<std::vector<std::string>> subsets_of_size(const std::vector<std::string>& universe, std::size_t k);

}  // namespace cjt
