#include "cjt/engine.hpp"

#include <algorithm>
#include <deque>
#include <mutex>

#include "cjt/error.hpp"

namespace cjt {

MessageStore::MessageStore(const MessageStore& other) {
  std::shared_lock lock(other.mu_);
  slots_ = other.slots_;
}

MessageStore& MessageStore::operator=(const MessageStore& other) {
  if (this == &other) return *this;
  std::map<DirectedEdge, MessagePtr> copy;
  {
    std::shared_lock lock(other.mu_);
    copy = other.slots_;
  }
  std::unique_lock lock(mu_);
  slots_ = std::move(copy);
  return *this;
}

MessagePtr MessageStore::get(DirectedEdge e) const {
  std::shared_lock lock(mu_);
  auto it = slots_.find(e);
  return it == slots_.end() ? nullptr : it->second;
}

void MessageStore::put(MessagePtr m) {
  if (!m) raise(ErrorCode::kInternal, "null message published");
  std::unique_lock lock(mu_);
  slots_[m->edge] = std::move(m);
}

bool MessageStore::contains(DirectedEdge e) const {
  std::shared_lock lock(mu_);
  return slots_.count(e) != 0;
}

void MessageStore::erase(DirectedEdge e) {
  std::unique_lock lock(mu_);
  slots_.erase(e);
}

void MessageStore::clear() {
  std::unique_lock lock(mu_);
  slots_.clear();
}

std::size_t MessageStore::size() const {
  std::shared_lock lock(mu_);
  return slots_.size();
}

std::vector<MessagePtr> MessageStore::all() const {
  std::shared_lock lock(mu_);
  std::vector<MessagePtr> out;
  out.reserve(slots_.size());
  for (const auto& [e, m] : slots_) out.push_back(m);
  return out;
}

void ExecStats::merge(const ExecStats& o) {
  messages_computed += o.messages_computed;
  max_intermediate_rows = std::max(max_intermediate_rows, o.max_intermediate_rows);
  rows_materialized += o.rows_materialized;
}

MessageSource store_source(const MessageStore& store) {
  return [&store](DirectedEdge e, const std::string& fp) -> MessagePtr {
    auto m = store.get(e);
    return (m && m->fingerprint == fp) ? m : nullptr;
  };
}

namespace {

struct BagJoin {
  AnnotatedRelation rel;
  bool identity = false;
};

void note_rows(ExecStats* stats, std::size_t rows) {
  if (stats) stats->max_intermediate_rows = std::max(stats->max_intermediate_rows, rows);
}

// Joins the bag's inputs (except the message from `except`) smallest-first,
// marginalizing attributes as soon as no later input or `keep` needs them.
BagJoin join_bag(const AnnotatedTree& tree, BagId bag, std::optional<BagId> except, const MessageSource& inputs,
                 const std::vector<std::string>& keep, ExecStats* stats) {
  const auto& active = tree.active(bag);
  std::vector<Predicate> preds(active.size());
  for (const auto& p : tree.selections(bag)) {
    auto pa = p.attributes();
    bool placed = false;
    for (std::size_t i = 0; i < active.size() && !placed; ++i) {
      const auto& ra = active[i].data->attrs();
      if (std::includes(ra.begin(), ra.end(), pa.begin(), pa.end())) {
        preds[i] = preds[i].conjoin(p);
        placed = true;
      }
    }
    if (!placed) raise(ErrorCode::kAnnotationPlacement, "selection " + p.canonical() + " has no covering relation");
  }

  std::deque<AnnotatedRelation> owned;
  std::vector<MessagePtr> held;
  std::vector<const AnnotatedRelation*> items;
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (preds[i].empty()) {
      items.push_back(active[i].data.get());
    } else {
      owned.push_back(select(*active[i].data, preds[i], tree.graph().dictionary()));
      items.push_back(&owned.back());
    }
  }
  for (BagId n : tree.jt().neighbors(bag)) {
    if (except && n == *except) continue;
    DirectedEdge in{n, bag};
    MessagePtr m = inputs ? inputs(in, tree.fingerprint(in)) : nullptr;
    if (!m) {
      raise(ErrorCode::kMissingMessage,
            "message " + std::to_string(n) + "->" + std::to_string(bag) + " is not available");
    }
    if (m->identity) continue;
    held.push_back(m);
    items.push_back(m->content.get());
  }
  if (items.empty()) return {AnnotatedRelation::unit(tree.spec()), true};

  std::vector<bool> used(items.size(), false);
  auto still_needed = [&]() {
    std::vector<std::string> need = keep;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (!used[i]) need = attr_union(need, items[i]->attrs());
    }
    return need;
  };
  auto shrink = [&](AnnotatedRelation r) {
    auto drop = attr_difference(r.attrs(), still_needed());
    return drop.empty() ? r : marginalize(r, drop);
  };

  std::size_t first = 0;
  for (std::size_t i = 1; i < items.size(); ++i) {
    if (items[i]->size() < items[first]->size()) first = i;
  }
  used[first] = true;
  AnnotatedRelation cur = shrink(*items[first]);
  for (std::size_t step = 1; step < items.size(); ++step) {
    std::size_t best = items.size();
    std::size_t best_shared = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (used[i]) continue;
      std::size_t shared = attr_intersection(cur.attrs(), items[i]->attrs()).size();
      if (best == items.size() || shared > best_shared ||
          (shared == best_shared && items[i]->size() < items[best]->size())) {
        best = i;
        best_shared = shared;
      }
    }
    used[best] = true;
    cur = join(cur, *items[best]);
    note_rows(stats, cur.size());
    cur = shrink(std::move(cur));
  }
  return {project(cur, keep), false};
}

}  // namespace

MessagePtr compute_message(const AnnotatedTree& tree, DirectedEdge e, const MessageSource& inputs,
                           ExecStats* stats) {
  const auto& kept = tree.kept(e);
  BagJoin j = join_bag(tree, e.from, e.to, inputs, kept, stats);
  if (!j.identity && j.rel.attrs() != kept) {
    raise(ErrorCode::kInternal, "message schema does not match its derived attributes");
  }
  auto m = std::make_shared<Message>();
  m->edge = e;
  m->identity = j.identity;
  m->content = std::make_shared<const AnnotatedRelation>(std::move(j.rel));
  m->fingerprint = tree.fingerprint(e);
  m->kept = kept;
  if (stats) {
    ++stats->messages_computed;
    stats->rows_materialized += m->rows();
  }
  return m;
}

AnnotatedRelation absorption(const AnnotatedTree& tree, BagId bag, const MessageSource& inputs,
                             const std::vector<std::string>& keep, ExecStats* stats) {
  return std::move(join_bag(tree, bag, std::nullopt, inputs, keep, stats).rel);
}

AnnotatedRelation absorb(const AnnotatedTree& tree, BagId root, const MessageSource& inputs, ExecStats* stats) {
  if (!tree.feasible_root(root)) {
    raise(ErrorCode::kInvalidArgument,
          "bag " + std::to_string(root) + " cannot produce every group-by attribute of the query");
  }
  return absorption(tree, root, inputs, tree.annotations().output, stats);
}

std::vector<DirectedEdge> upward_order(const JunctionHypertree& jt, BagId root) {
  std::vector<DirectedEdge> out;
  // Iterative post-order: (bag, parent, next-neighbor index).
  struct Frame {
    BagId bag;
    std::optional<BagId> parent;
    std::size_t next = 0;
  };
  std::vector<Frame> stack{{root, std::nullopt, 0}};
  while (!stack.empty()) {
    Frame& f = stack.back();
    const auto& ns = jt.neighbors(f.bag);
    if (f.next < ns.size()) {
      BagId n = ns[f.next++];
      if (f.parent && n == *f.parent) continue;
      stack.push_back({n, f.bag, 0});
      continue;
    }
    if (f.parent) out.push_back({f.bag, *f.parent});
    stack.pop_back();
  }
  return out;
}

std::vector<DirectedEdge> downward_order(const JunctionHypertree& jt, BagId root) {
  auto up = upward_order(jt, root);
  std::vector<DirectedEdge> out;
  out.reserve(up.size());
  for (auto it = up.rbegin(); it != up.rend(); ++it) out.push_back(it->reversed());
  return out;
}

namespace {

std::size_t run_edges(const AnnotatedTree& tree, const std::vector<DirectedEdge>& order, MessageStore& store,
                      ExecStats* stats) {
  auto source = store_source(store);
  for (const auto& e : order) store.put(compute_message(tree, e, source, stats));
  return order.size();
}

}  // namespace

std::size_t upward_pass(const AnnotatedTree& tree, BagId root, MessageStore& store, ExecStats* stats) {
  return run_edges(tree, upward_order(tree.jt(), root), store, stats);
}

std::size_t downward_pass(const AnnotatedTree& tree, BagId root, MessageStore& store, ExecStats* stats) {
  return run_edges(tree, downward_order(tree.jt(), root), store, stats);
}

CalibrateResult calibrate(const AnnotatedTree& tree, MessageStore& store, const CalibrateOptions& options,
                          ExecStats* stats) {
  const BagId root = options.root.value_or(default_reference_root(tree.jt()));
  auto order = upward_order(tree.jt(), root);
  auto down = downward_order(tree.jt(), root);
  order.insert(order.end(), down.begin(), down.end());

  CalibrateResult result;
  auto source = store_source(store);
  for (const auto& e : order) {
    const auto& fp = tree.fingerprint(e);
    if (source(e, fp)) continue;
    if (options.fallback) {
      if (auto hit = options.fallback(e, fp)) {
        store.put(hit);
        ++result.messages_reused;
        continue;
      }
    }
    if (options.cancel.stop_requested()) return result;
    if (options.budget && result.messages_done >= *options.budget) return result;
    auto m = compute_message(tree, e, source, stats);
    store.put(m);
    ++result.messages_done;
    if (options.on_message) options.on_message(m);
  }
  result.completed = true;
  return result;
}

std::size_t valid_messages(const AnnotatedTree& tree, const MessageStore& store) {
  auto source = store_source(store);
  std::size_t n = 0;
  for (const auto& e : tree.jt().directed_edges()) {
    if (source(e, tree.fingerprint(e))) ++n;
  }
  return n;
}

bool is_calibrated(const AnnotatedTree& tree, const MessageStore& store) {
  return valid_messages(tree, store) == tree.jt().directed_edges().size();
}

AnnotatedRelation oracle_execute(const JoinGraph& g, const QuerySpec& query, std::size_t row_budget,
                                 ExecStats* stats) {
  std::vector<const AnnotatedRelation*> rels;
  for (const auto& entry : g.relations()) {
    if (std::find(query.excluded.begin(), query.excluded.end(), entry.name) != query.excluded.end()) continue;
    auto it = query.updates.find(entry.name);
    rels.push_back(&entry.at(it == query.updates.end() ? entry.current_version : it->second));
  }
  if (rels.empty()) raise(ErrorCode::kInvalidQuery, "query excludes every relation");

  std::vector<bool> used(rels.size(), false);
  used[0] = true;
  AnnotatedRelation cur = *rels[0];
  for (std::size_t step = 1; step < rels.size(); ++step) {
    std::size_t pick = rels.size();
    for (std::size_t i = 0; i < rels.size(); ++i) {
      if (used[i]) continue;
      if (pick == rels.size()) pick = i;
      if (!attr_intersection(cur.attrs(), rels[i]->attrs()).empty()) {
        pick = i;
        break;
      }
    }
    used[pick] = true;
    cur = join(cur, *rels[pick]);
    note_rows(stats, cur.size());
    if (cur.size() > row_budget) {
      raise(ErrorCode::kOracleTooLarge,
            "full join exceeds " + std::to_string(row_budget) + " rows after " + std::to_string(step + 1) +
                " relations");
    }
  }
  for (const auto& p : query.predicates) cur = select(cur, p, g.dictionary());
  auto group = sorted_attrs(query.group_by);
  for (const auto& a : group) {
    if (!cur.has_attr(a)) raise(ErrorCode::kInvalidQuery, "group-by attribute '" + a + "' is not in the join");
  }
  return project(cur, group);
}

}  // namespace cjt
