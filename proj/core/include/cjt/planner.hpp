#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cjt/engine.hpp"

namespace cjt {

/// Cardinality-based estimates of message and absorption work.
class CostModel {
 public:
  CostModel() = default;
  explicit CostModel(const JoinGraph& g, double scale = 1.0);

  /// Observed distinct values, at least 1.
  double domain(const std::string& attr) const;
  void set_domain(const std::string& attr, double d) { domains_[attr] = d; }

  /// Equality 1/d, IN k/d, inequality 1-1/d, ranges 1/3; conjunctions
  /// multiply; never below 1e-4.
  double selectivity(const Predicate& p) const;

  /// Estimated rows of the bag's active relations after its selections.
  double bag_rows(const AnnotatedTree& tree, BagId bag) const;
  /// Size bound of the message along `e`.
  double message_size(const AnnotatedTree& tree, DirectedEdge e) const;
  double message_cost(const AnnotatedTree& tree, DirectedEdge e) const;
  double absorption_cost(const AnnotatedTree& tree, BagId root) const;

  /// Messages toward `root` (all, or only those `needed` accepts) plus the
  /// absorption.
  double root_cost(const AnnotatedTree& tree, BagId root,
                   const std::function<bool(DirectedEdge)>& needed = {}) const;

 private:
  double rows_of(const AnnotatedTree::ActiveRelation& r) const;

  std::map<std::string, double> domains_;
  double scale_ = 1.0;
};

/// Cheapest feasible root among `candidates` (all bags when empty); ties go
/// to the lowest id.
BagId choose_root(const AnnotatedTree& tree, const CostModel& cm, const std::vector<BagId>& candidates = {},
                  const std::function<bool(DirectedEdge)>& needed = {});

struct AnnotationDiff {
  AnnotationSet next;
  /// Bags whose annotation multiset differs, ascending.
  std::vector<BagId> delta;
  std::vector<Placement> compensations;
};

AnnotationDiff diff_annotations(const AnnotationSet& prev, const QuerySpec& next, const JoinGraph& g,
                                const JunctionHypertree& jt, const BindOptions& options = {});

/// Bags whose signatures differ between two bound sets.
std::vector<BagId> differing_bags(const AnnotationSet& a, const AnnotationSet& b, const JunctionHypertree& jt);

/// Minimal subtree spanning `terminals` (ascending ids; empty for no terminals).
std::vector<BagId> steiner_tree(const JunctionHypertree& jt, const std::vector<BagId>& terminals);

struct SteinerPlan {
  AnnotationSet annotations;
  std::vector<BagId> delta;
  std::vector<BagId> tree;
  BagId root = 0;
  std::vector<DirectedEdge> schedule;
  std::vector<DirectedEdge> reused;
  std::vector<Placement> compensations;
  double estimated_cost = 0.0;
  std::size_t shrink_moves = 0;
};

nlohmann::json to_json(const SteinerPlan& plan, const JunctionHypertree& jt);

struct ShrinkResult {
  AnnotationSet next;
  std::vector<BagId> delta;
  std::vector<BagId> tree;
  std::size_t moves = 0;
};

/// Moves differing selection, group-by and marginalize annotations off the
/// Steiner tree's leaves while that strictly shrinks the tree and a feasible
/// root remains.
ShrinkResult shrink(const std::shared_ptr<const JoinGraph>& g, const std::shared_ptr<const JunctionHypertree>& jt, const AnnotationSet& prev,
                    AnnotationSet next);

/// Edges to compute, post-order toward `root`, for those lacking a usable
/// message; `reused` receives the usable edges that were consulted.
std::vector<DirectedEdge> message_schedule(const AnnotatedTree& tree, BagId root, const MessageSource& usable,
                                           std::vector<DirectedEdge>* reused = nullptr);

struct PlanOptions {
  BindOptions bind;
  bool shrink = true;
};

/// Full planning step against the previous query's annotations and whatever
/// messages `usable` can supply.
SteinerPlan plan_with_reuse(const std::shared_ptr<const JoinGraph>& g, const std::shared_ptr<const JunctionHypertree>& jt,
                            const AnnotationSet& prev, const QuerySpec& next, const MessageSource& usable,
                            const CostModel& cm, const PlanOptions& options = {});

/// Single query from scratch: bind, choose the root, and schedule every
/// message toward it.
SteinerPlan plan_single(const std::shared_ptr<const JoinGraph>& g, const std::shared_ptr<const JunctionHypertree>& jt, const QuerySpec& q,
                        const CostModel& cm, const BindOptions& bind = {});

struct ExecutionResult {
  AnnotatedRelation answer;
  std::vector<MessagePtr> computed;
  ExecStats stats;
};

/// Computes the schedule (inputs from earlier schedule entries, then from
/// `usable`) and absorbs at the plan root.
ExecutionResult execute_plan(const AnnotatedTree& tree, const SteinerPlan& plan, const MessageSource& usable);

}  // namespace cjt
