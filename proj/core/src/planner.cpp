#include "cjt/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

#include "cjt/error.hpp"

namespace cjt {

CostModel::CostModel(const JoinGraph& g, double scale) : scale_(scale) {
  for (const auto& a : g.attributes()) domains_[a] = static_cast<double>(std::max<std::size_t>(1, g.domain_size(a)));
}

double CostModel::domain(const std::string& attr) const {
  auto it = domains_.find(attr);
  return it == domains_.end() ? 1.0 : std::max(1.0, it->second);
}

double CostModel::selectivity(const Predicate& p) const {
  double s = 1.0;
  for (const auto& atom : p.atoms) {
    const double d = domain(atom.attr);
    switch (atom.op) {
      case CompareOp::kEq: s *= 1.0 / d; break;
      case CompareOp::kIn: s *= std::min(1.0, static_cast<double>(atom.literals.size()) / d); break;
      case CompareOp::kNe: s *= d > 1.0 ? 1.0 - 1.0 / d : 1.0; break;
      default: s *= 1.0 / 3.0; break;
    }
  }
  return std::max(s, 1e-4);
}

double CostModel::rows_of(const AnnotatedTree::ActiveRelation& r) const {
  return static_cast<double>(r.data->size());
}

double CostModel::bag_rows(const AnnotatedTree& tree, BagId bag) const {
  const auto& active = tree.active(bag);
  if (active.empty()) return 0.0;
  double rows = rows_of(active.front());
  std::vector<std::string> attrs = active.front().data->attrs();
  for (std::size_t i = 1; i < active.size(); ++i) {
    const auto& ra = active[i].data->attrs();
    double denom = 1.0;
    for (const auto& a : attr_intersection(attrs, ra)) denom *= domain(a);
    rows = rows * rows_of(active[i]) / denom;
    attrs = attr_union(attrs, ra);
  }
  for (const auto& p : tree.selections(bag)) rows *= selectivity(p);
  return rows * scale_;
}

namespace {

std::size_t outside(const std::vector<std::string>& attrs, const std::vector<std::string>& bag) {
  return attr_difference(attrs, bag).size();
}

}  // namespace

double CostModel::message_size(const AnnotatedTree& tree, DirectedEdge e) const {
  const auto& bag = tree.jt().bag(e.from);
  double base = 0.0;
  if (!tree.active(e.from).empty()) {
    base = bag_rows(tree, e.from);
  } else {
    base = 1.0;
    for (BagId n : tree.jt().neighbors(e.from)) {
      if (n != e.to) base = std::max(base, message_size(tree, {n, e.from}));
    }
  }
  double groups = 1.0;
  for (const auto& a : attr_difference(tree.alive(e), bag.attrs)) groups *= domain(a);
  return groups * base;
}

double CostModel::message_cost(const AnnotatedTree& tree, DirectedEdge e) const {
  const auto& bag = tree.jt().bag(e.from);
  const double inputs = static_cast<double>(tree.jt().neighbors(e.from).size());
  const double width = static_cast<double>(bag.attrs.size() + outside(tree.alive(e), bag.attrs));
  return inputs * width * message_size(tree, e);
}

double CostModel::absorption_cost(const AnnotatedTree& tree, BagId root) const {
  const auto& bag = tree.jt().bag(root);
  double base = 0.0;
  if (!tree.active(root).empty()) {
    base = bag_rows(tree, root);
  } else {
    base = 1.0;
    for (BagId n : tree.jt().neighbors(root)) base = std::max(base, message_size(tree, {n, root}));
  }
  std::vector<std::string> alive;
  for (BagId n : tree.jt().neighbors(root)) alive = attr_union(alive, tree.alive({n, root}));
  double groups = 1.0;
  for (const auto& a : attr_difference(alive, bag.attrs)) groups *= domain(a);
  const double inputs = static_cast<double>(tree.jt().neighbors(root).size() + 1);
  const double width = static_cast<double>(bag.attrs.size() + outside(alive, bag.attrs));
  return inputs * width * groups * base;
}

double CostModel::root_cost(const AnnotatedTree& tree, BagId root,
                            const std::function<bool(DirectedEdge)>& needed) const {
  double total = absorption_cost(tree, root);
  for (const auto& e : upward_order(tree.jt(), root)) {
    if (!needed || needed(e)) total += message_cost(tree, e);
  }
  return total;
}

BagId choose_root(const AnnotatedTree& tree, const CostModel& cm, const std::vector<BagId>& candidates,
                  const std::function<bool(DirectedEdge)>& needed) {
  auto best_of = [&](const std::vector<BagId>& pool) -> std::optional<BagId> {
    std::optional<BagId> best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (BagId b : pool) {
      if (!tree.feasible_root(b)) continue;
      double c = cm.root_cost(tree, b, needed);
      if (!best || c < best_cost || (c == best_cost && b < *best)) {
        best = b;
        best_cost = c;
      }
    }
    return best;
  };
  std::vector<BagId> all(tree.jt().size());
  for (BagId b = 0; b < all.size(); ++b) all[b] = b;
  if (auto r = best_of(candidates.empty() ? all : candidates)) return *r;
  if (auto r = best_of(all)) return *r;
  raise(ErrorCode::kInvalidQuery, "no bag can absorb every group-by attribute under these annotations");
}

std::vector<BagId> differing_bags(const AnnotationSet& a, const AnnotationSet& b, const JunctionHypertree& jt) {
  std::vector<BagId> out;
  for (const auto& bag : jt.bags()) {
    if (a.signature(bag.id) != b.signature(bag.id)) out.push_back(bag.id);
  }
  return out;
}

namespace {

bool contains(const std::vector<std::string>& xs, const std::string& x) {
  return std::find(xs.begin(), xs.end(), x) != xs.end();
}

std::vector<std::string> excluded_of(const AnnotationSet& a) {
  std::vector<std::string> out;
  for (const auto& p : a.placements) {
    if (p.annotation.kind == AnnotationKind::kExclude) out.push_back(p.annotation.relation);
  }
  return out;
}

}  // namespace

AnnotationDiff diff_annotations(const AnnotationSet& prev, const QuerySpec& next, const JoinGraph& g,
                                const JunctionHypertree& jt, const BindOptions& options) {
  const QuerySpec q = next.normalized();
  const AnnotationSet fresh = bind_annotations(g, jt, q, options);
  auto grouped = [&](const std::string& a) { return std::binary_search(q.group_by.begin(), q.group_by.end(), a); };

  AnnotationDiff out;
  out.next.output = fresh.output;
  std::set<std::string> gamma_kept;
  std::set<std::string> sigma_kept;
  std::multiset<std::string> selections;
  for (const auto& p : q.predicates) selections.insert(p.canonical());
  std::set<std::string> structural_kept;

  for (const auto& p : prev.placements) {
    if (p.annotation.kind == AnnotationKind::kMarginalize && !grouped(p.annotation.attr)) {
      sigma_kept.insert(p.annotation.attr);
    }
  }
  for (const auto& p : prev.placements) {
    const auto& a = p.annotation;
    switch (a.kind) {
      case AnnotationKind::kGroupBy:
        out.next.placements.push_back(p);
        if (grouped(a.attr)) {
          gamma_kept.insert(a.attr);
        } else if (!sigma_kept.count(a.attr)) {
          Placement comp{BagAnnotation::marginalize(a.attr), p.bag};
          out.next.placements.push_back(comp);
          out.compensations.push_back(comp);
          sigma_kept.insert(a.attr);
        }
        break;
      case AnnotationKind::kMarginalize:
        if (!grouped(a.attr)) out.next.placements.push_back(p);
        break;
      case AnnotationKind::kSelect: {
        auto it = selections.find(a.predicate.canonical());
        if (it == selections.end()) break;
        auto cands = selection_candidates(jt, a.predicate.attributes(), q.excluded);
        if (std::find(cands.begin(), cands.end(), p.bag) == cands.end()) break;
        selections.erase(it);
        out.next.placements.push_back(p);
        break;
      }
      case AnnotationKind::kExclude:
        if (contains(q.excluded, a.relation)) {
          out.next.placements.push_back(p);
          structural_kept.insert(a.canonical());
        }
        break;
      case AnnotationKind::kUpdate: {
        auto it = q.updates.find(a.relation);
        if (it != q.updates.end() && it->second == a.version) {
          out.next.placements.push_back(p);
          structural_kept.insert(a.canonical());
        }
        break;
      }
    }
  }
  for (const auto& p : fresh.placements) {
    const auto& a = p.annotation;
    switch (a.kind) {
      case AnnotationKind::kGroupBy:
        if (!gamma_kept.count(a.attr)) out.next.placements.push_back(p);
        break;
      case AnnotationKind::kSelect: {
        auto it = selections.find(a.predicate.canonical());
        if (it != selections.end()) {
          selections.erase(it);
          out.next.placements.push_back(p);
        }
        break;
      }
      case AnnotationKind::kExclude:
      case AnnotationKind::kUpdate:
        if (!structural_kept.count(a.canonical())) out.next.placements.push_back(p);
        break;
      case AnnotationKind::kMarginalize:
        break;
    }
  }
  out.delta = differing_bags(prev, out.next, jt);
  return out;
}

std::vector<BagId> steiner_tree(const JunctionHypertree& jt, const std::vector<BagId>& terminals) {
  if (terminals.empty()) return {};
  std::vector<bool> keep(jt.size(), true);
  std::vector<bool> terminal(jt.size(), false);
  for (BagId t : terminals) terminal.at(t) = true;
  std::vector<std::size_t> degree(jt.size());
  std::vector<BagId> leaves;
  for (const auto& b : jt.bags()) {
    degree[b.id] = jt.neighbors(b.id).size();
    if (degree[b.id] <= 1 && !terminal[b.id]) leaves.push_back(b.id);
  }
  while (!leaves.empty()) {
    BagId b = leaves.back();
    leaves.pop_back();
    if (!keep[b]) continue;
    keep[b] = false;
    for (BagId n : jt.neighbors(b)) {
      if (!keep[n]) continue;
      if (--degree[n] <= 1 && !terminal[n]) leaves.push_back(n);
    }
  }
  std::vector<BagId> out;
  for (BagId b = 0; b < jt.size(); ++b) {
    if (keep[b]) out.push_back(b);
  }
  return out;
}

namespace {

bool has_feasible_root(const AnnotatedTree& tree, const std::vector<BagId>& pool) {
  if (pool.empty()) {
    for (BagId b = 0; b < tree.jt().size(); ++b) {
      if (tree.feasible_root(b)) return true;
    }
    return false;
  }
  return std::any_of(pool.begin(), pool.end(), [&](BagId b) { return tree.feasible_root(b); });
}

bool movable(AnnotationKind k) {
  return k == AnnotationKind::kSelect || k == AnnotationKind::kGroupBy || k == AnnotationKind::kMarginalize;
}

}  // namespace

ShrinkResult shrink(const std::shared_ptr<const JoinGraph>& g, const std::shared_ptr<const JunctionHypertree>& jt,
                    const AnnotationSet& prev, AnnotationSet next) {
  ShrinkResult out;
  out.delta = differing_bags(prev, next, *jt);
  out.tree = steiner_tree(*jt, out.delta);
  const auto excluded = excluded_of(next);

  bool changed = true;
  while (changed && out.tree.size() > 1) {
    changed = false;
    std::vector<BagId> in_tree(jt->size(), 0);
    for (BagId b : out.tree) in_tree[b] = 1;
    std::vector<BagId> leaves;
    for (BagId b : out.tree) {
      std::size_t deg = 0;
      for (BagId n : jt->neighbors(b)) deg += in_tree[n];
      if (deg == 1) leaves.push_back(b);
    }
    std::stable_sort(leaves.begin(), leaves.end(), [&](BagId a, BagId b) {
      std::size_t ra = jt->mapped_rows(a), rb = jt->mapped_rows(b);
      return ra != rb ? ra > rb : a < b;
    });

    for (BagId leaf : leaves) {
      BagId nb = 0;
      for (BagId n : jt->neighbors(leaf)) {
        if (in_tree[n]) nb = n;
      }
      // Multiset difference of the leaf's annotations against prev.
      std::multiset<std::string> before;
      for (const auto& s : prev.signature(leaf)) before.insert(s);
      std::vector<std::size_t> moving;
      bool ok = true;
      for (std::size_t i = 0; i < next.placements.size(); ++i) {
        const auto& p = next.placements[i];
        if (p.bag != leaf) continue;
        auto it = before.find(p.annotation.canonical());
        if (it != before.end()) {
          before.erase(it);
          continue;
        }
        if (!movable(p.annotation.kind)) {
          ok = false;
          break;
        }
        const auto attrs = p.annotation.attributes();
        const auto& nb_attrs = jt->bag(nb).attrs;
        if (!std::includes(nb_attrs.begin(), nb_attrs.end(), attrs.begin(), attrs.end())) {
          ok = false;
          break;
        }
        if (p.annotation.kind == AnnotationKind::kSelect) {
          auto cands = selection_candidates(*jt, attrs, excluded);
          if (std::find(cands.begin(), cands.end(), nb) == cands.end()) {
            ok = false;
            break;
          }
        }
        moving.push_back(i);
      }
      if (!ok || !before.empty() || moving.empty()) continue;

      AnnotationSet candidate = next;
      for (std::size_t i : moving) candidate.placements[i].bag = nb;
      auto delta = differing_bags(prev, candidate, *jt);
      auto tree = steiner_tree(*jt, delta);
      if (tree.size() >= out.tree.size()) continue;
      AnnotatedTree at(g, jt, candidate);
      if (!has_feasible_root(at, tree)) continue;
      next = std::move(candidate);
      out.delta = std::move(delta);
      out.tree = std::move(tree);
      ++out.moves;
      changed = true;
      break;
    }
  }
  out.next = std::move(next);
  return out;
}

std::vector<DirectedEdge> message_schedule(const AnnotatedTree& tree, BagId root, const MessageSource& usable,
                                           std::vector<DirectedEdge>* reused) {
  std::vector<DirectedEdge> schedule;
  const auto& jt = tree.jt();
  // Explicit stack of (edge, expanded) to emit inputs before the edge.
  std::vector<std::pair<DirectedEdge, bool>> stack;
  const auto& ns = jt.neighbors(root);
  for (auto it = ns.rbegin(); it != ns.rend(); ++it) stack.push_back({{*it, root}, false});
  while (!stack.empty()) {
    auto [e, expanded] = stack.back();
    stack.pop_back();
    if (expanded) {
      schedule.push_back(e);
      continue;
    }
    if (usable && usable(e, tree.fingerprint(e))) {
      if (reused) reused->push_back(e);
      continue;
    }
    stack.push_back({e, true});
    const auto& in = jt.neighbors(e.from);
    for (auto it = in.rbegin(); it != in.rend(); ++it) {
      if (*it != e.to) stack.push_back({{*it, e.from}, false});
    }
  }
  if (reused) std::sort(reused->begin(), reused->end());
  return schedule;
}

namespace {

SteinerPlan finish_plan(const AnnotatedTree& at, const CostModel& cm, const MessageSource& usable,
                        std::vector<BagId> candidates) {
  SteinerPlan plan;
  auto needed = [&](DirectedEdge e) { return !(usable && usable(e, at.fingerprint(e))); };
  plan.root = choose_root(at, cm, candidates, needed);
  plan.schedule = message_schedule(at, plan.root, usable, &plan.reused);
  plan.estimated_cost = cm.root_cost(at, plan.root, needed);
  plan.annotations = at.annotations();
  return plan;
}

}  // namespace

SteinerPlan plan_with_reuse(const std::shared_ptr<const JoinGraph>& g,
                            const std::shared_ptr<const JunctionHypertree>& jt, const AnnotationSet& prev,
                            const QuerySpec& next, const MessageSource& usable, const CostModel& cm,
                            const PlanOptions& options) {
  AnnotationDiff diff = diff_annotations(prev, next, *g, *jt, options.bind);
  ShrinkResult shrunk;
  if (options.shrink) {
    shrunk = shrink(g, jt, prev, diff.next);
  } else {
    shrunk.next = diff.next;
    shrunk.delta = diff.delta;
    shrunk.tree = steiner_tree(*jt, diff.delta);
  }
  if (!has_feasible_root(AnnotatedTree(g, jt, shrunk.next), {})) {
    // Inherited group-by placements can strand an attribute; rebind fresh.
    shrunk.next = bind_annotations(*g, *jt, next, options.bind);
    shrunk.delta = differing_bags(prev, shrunk.next, *jt);
    shrunk.tree = steiner_tree(*jt, shrunk.delta);
    shrunk.moves = 0;
  }
  AnnotatedTree at(g, jt, shrunk.next);
  SteinerPlan plan = finish_plan(at, cm, usable, shrunk.tree);
  plan.delta = std::move(shrunk.delta);
  plan.tree = std::move(shrunk.tree);
  plan.shrink_moves = shrunk.moves;
  for (const auto& c : diff.compensations) {
    for (const auto& p : plan.annotations.placements) {
      if (p.annotation == c.annotation) plan.compensations.push_back(p);
    }
  }
  return plan;
}

SteinerPlan plan_single(const std::shared_ptr<const JoinGraph>& g, const std::shared_ptr<const JunctionHypertree>& jt,
                        const QuerySpec& q, const CostModel& cm, const BindOptions& bind) {
  AnnotatedTree at(g, jt, bind_annotations(*g, *jt, q, bind));
  SteinerPlan plan = finish_plan(at, cm, nullptr, {});
  plan.tree.resize(jt->size());
  for (BagId b = 0; b < jt->size(); ++b) plan.tree[b] = b;
  for (const auto& b : jt->bags()) {
    if (!plan.annotations.signature(b.id).empty()) plan.delta.push_back(b.id);
  }
  return plan;
}

ExecutionResult execute_plan(const AnnotatedTree& tree, const SteinerPlan& plan, const MessageSource& usable) {
  ExecutionResult out;
  std::map<DirectedEdge, MessagePtr> local;
  MessageSource source = [&](DirectedEdge e, const std::string& fp) -> MessagePtr {
    auto it = local.find(e);
    if (it != local.end() && it->second->fingerprint == fp) return it->second;
    return usable ? usable(e, fp) : nullptr;
  };
  for (const auto& e : plan.schedule) {
    auto m = compute_message(tree, e, source, &out.stats);
    local[e] = m;
    out.computed.push_back(std::move(m));
  }
  out.answer = absorb(tree, plan.root, source, &out.stats);
  return out;
}

nlohmann::json to_json(const SteinerPlan& plan, const JunctionHypertree& jt) {
  auto edges = [](const std::vector<DirectedEdge>& es) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : es) arr.push_back({e.from, e.to});
    return arr;
  };
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : plan.compensations) comps.push_back({{"annotation", c.annotation.canonical()}, {"bag", c.bag}});
  return {{"annotations", to_json(plan.annotations, jt)},
          {"delta", plan.delta},
          {"tree", plan.tree},
          {"root", plan.root},
          {"schedule", edges(plan.schedule)},
          {"reused", edges(plan.reused)},
          {"compensations", comps},
          {"estimated_cost", plan.estimated_cost},
          {"shrink_moves", plan.shrink_moves}};
}

}  // namespace cjt
