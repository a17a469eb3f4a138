#include "cjt/olap.hpp"

#include <algorithm>
#include <utility>

#include "cjt/error.hpp"

namespace cjt {

std::vector<std::string> categorical_attributes(const JoinGraph& g) {
  std::vector<std::string> out;
  for (const auto& a : g.attributes()) {
    if (g.dictionary().type(a) == AttrType::kCategorical) out.push_back(a);
  }
  return out;
}

std::vector<std::vector<std::string>> subsets_of_size(const std::vector<std::string>& universe, std::size_t k) {
  std::vector<std::vector<std::string>> out;
  if (k > universe.size()) return out;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    std::vector<std::string> s;
    for (auto i : idx) s.push_back(universe[i]);
    out.push_back(std::move(s));
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == universe.size() - k + i - 1) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

PivotSet build_pivots(const std::shared_ptr<const JoinGraph>& g, const std::shared_ptr<const JunctionHypertree>& jt,
                      std::size_t k, const PivotOptions& options) {
  PivotSet set;
  set.graph = g;
  set.jt = jt;
  set.k = k;
  set.universe = sorted_attrs(options.universe.empty() ? categorical_attributes(*g) : options.universe);
  const auto all = g->attributes();
  for (const auto& a : set.universe) {
    if (!std::binary_search(all.begin(), all.end(), a)) raise(ErrorCode::kUnknownAttribute, "unknown attribute '" + a + "'");
  }
  if (k > set.universe.size()) raise(ErrorCode::kInvalidArgument, "pivot arity exceeds the attribute universe");

  for (auto& attrs : subsets_of_size(set.universe, k)) {
    QuerySpec q;
    q.group_by = attrs;
    Pivot p;
    p.attrs = std::move(attrs);
    p.tree = std::make_shared<const AnnotatedTree>(g, jt, bind_annotations(*g, *jt, q, options.bind));
    p.store = std::make_shared<MessageStore>();
    set.messages_computed += calibrate(*p.tree, *p.store).messages_done;
    auto source = store_source(*p.store);
    for (const auto& b : jt->bags()) {
      auto abs = absorption(*p.tree, b.id, source, p.tree->absorption_schema(b.id));
      set.materialized_rows += abs.size();
      if (set.materialized_rows > options.row_budget) {
        raise(ErrorCode::kBudgetExceeded, "pivot absorptions exceed " + std::to_string(options.row_budget) + " rows");
      }
      p.absorptions.emplace(b.id, std::move(abs));
    }
    set.pivots.push_back(std::move(p));
  }
  return set;
}

CuboidAnswer answer_cuboid(const PivotSet& set, const std::vector<std::string>& attrs, const CostModel& cm) {
  if (set.pivots.empty()) raise(ErrorCode::kInvalidArgument, "empty pivot set");
  QuerySpec q;
  q.group_by = attrs;
  const auto sorted = sorted_attrs(attrs);

  std::size_t best = 0;
  SteinerPlan best_plan;
  for (std::size_t i = 0; i < set.pivots.size(); ++i) {
    const Pivot& p = set.pivots[i];
    auto plan = plan_with_reuse(set.graph, set.jt, p.tree->annotations(), q, store_source(*p.store), cm);
    if (i == 0 || std::make_pair(plan.schedule.size(), plan.tree.size()) <
                      std::make_pair(best_plan.schedule.size(), best_plan.tree.size())) {
      best = i;
      best_plan = std::move(plan);
    }
  }

  const Pivot& p = set.pivots[best];
  CuboidAnswer out;
  out.pivot = best;
  out.steiner_bags = best_plan.tree.size();
  const bool local = best_plan.schedule.empty() && best_plan.tree.size() <= 1 &&
                     (best_plan.tree.empty() || best_plan.tree.front() == best_plan.root);
  if (local) {
    const auto& abs = p.absorptions.at(best_plan.root);
    if (std::includes(abs.attrs().begin(), abs.attrs().end(), sorted.begin(), sorted.end())) {
      out.relation = project(abs, sorted);
      out.from_absorption = true;
      return out;
    }
  }
  AnnotatedTree tree(set.graph, set.jt, best_plan.annotations);
  auto exec = execute_plan(tree, best_plan, store_source(*p.store));
  out.relation = std::move(exec.answer);
  out.computed = exec.computed.size();
  return out;
}

Cube build_cube(const std::shared_ptr<const JoinGraph>& g, const std::shared_ptr<const JunctionHypertree>& jt,
                std::size_t h, const PivotOptions& options) {
  if (h == 0) raise(ErrorCode::kInvalidArgument, "cube arity must be at least 1");
  auto pivots = build_pivots(g, jt, h - 1, options);
  Cube cube;
  cube.pivot_messages = pivots.messages_computed;
  cube.materialized_rows = pivots.materialized_rows;
  const CostModel cm(*g);
  for (std::size_t arity = 0; arity <= std::min(h, pivots.universe.size()); ++arity) {
    for (auto& attrs : subsets_of_size(pivots.universe, arity)) {
      auto ans = answer_cuboid(pivots, attrs, cm);
      cube.cuboid_messages += ans.computed;
      cube.cuboid_rows += ans.relation.size();
      cube.cuboids.emplace(std::move(attrs), std::move(ans.relation));
    }
  }
  return cube;
}

}  // namespace cjt
