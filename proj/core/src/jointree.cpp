#include "cjt/jointree.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "cjt/error.hpp"

namespace cjt {

GyoResult gyo_check(const std::vector<std::vector<std::string>>& schemas) {
  std::vector<std::set<std::string>> edges;
  for (const auto& s : schemas) edges.emplace_back(s.begin(), s.end());
  std::vector<bool> alive(edges.size(), true);
  GyoResult out;
  bool changed = true;
  while (changed) {
    changed = false;
    // Ears: attributes that occur in exactly one live edge.
    std::map<std::string, int> occurrences;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      if (!alive[i]) continue;
      for (const auto& a : edges[i]) ++occurrences[a];
    }
    for (const auto& [a, n] : occurrences) {
      if (n != 1) continue;
      for (std::size_t i = 0; i < edges.size(); ++i) {
        if (alive[i] && edges[i].erase(a)) {
          out.elimination_order.push_back(a);
          changed = true;
        }
      }
    }
    // Edges contained in another live edge.
    for (std::size_t i = 0; i < edges.size(); ++i) {
      if (!alive[i]) continue;
      for (std::size_t j = 0; j < edges.size(); ++j) {
        if (i == j || !alive[j]) continue;
        if (std::includes(edges[j].begin(), edges[j].end(), edges[i].begin(), edges[i].end())) {
          alive[i] = false;
          changed = true;
          break;
        }
      }
    }
  }
  std::size_t remaining_attrs = 0;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (alive[i]) remaining_attrs += edges[i].size();
  }
  out.acyclic = remaining_attrs == 0;
  return out;
}

GyoResult gyo_check(const JoinGraph& g) {
  std::vector<std::vector<std::string>> schemas;
  for (const auto& r : g.relations()) schemas.push_back(r.attrs);
  return gyo_check(schemas);
}

BagId JunctionHypertree::add_bag(std::vector<std::string> attrs, std::vector<std::string> relations, bool empty_bag) {
  Bag b;
  b.id = static_cast<BagId>(bags_.size());
  b.attrs = sorted_attrs(std::move(attrs));
  b.relations = std::move(relations);
  b.empty_bag = empty_bag || b.relations.empty();
  for (const auto& r : b.relations) {
    if (mapping_.count(r)) raise(ErrorCode::kInvalidJoinTree, "relation '" + r + "' mapped to two bags");
    mapping_[r] = b.id;
  }
  bags_.push_back(std::move(b));
  adj_.emplace_back();
  return bags_.back().id;
}

void JunctionHypertree::add_edge(BagId a, BagId b) {
  bag(a);
  bag(b);
  if (a == b) raise(ErrorCode::kInvalidJoinTree, "self loop on bag " + std::to_string(a));
  if (adjacent(a, b)) return;
  adj_[a].insert(std::upper_bound(adj_[a].begin(), adj_[a].end(), b), b);
  adj_[b].insert(std::upper_bound(adj_[b].begin(), adj_[b].end(), a), a);
}

void JunctionHypertree::remove_edge(BagId a, BagId b) {
  std::erase(adj_[a], b);
  std::erase(adj_[b], a);
}

void JunctionHypertree::set_relation_info(RelationInfo info) {
  info.attrs = sorted_attrs(std::move(info.attrs));
  infos_[info.name] = std::move(info);
}

const Bag& JunctionHypertree::bag(BagId id) const {
  if (id >= bags_.size()) raise(ErrorCode::kUnknownId, "unknown bag " + std::to_string(id));
  return bags_[id];
}

const std::vector<BagId>& JunctionHypertree::neighbors(BagId id) const {
  bag(id);
  return adj_[id];
}

bool JunctionHypertree::adjacent(BagId a, BagId b) const {
  const auto& n = neighbors(a);
  return std::binary_search(n.begin(), n.end(), b);
}

std::vector<std::pair<BagId, BagId>> JunctionHypertree::edges() const {
  std::vector<std::pair<BagId, BagId>> out;
  for (BagId a = 0; a < adj_.size(); ++a) {
    for (BagId b : adj_[a]) {
      if (a < b) out.emplace_back(a, b);
    }
  }
  return out;
}

std::vector<DirectedEdge> JunctionHypertree::directed_edges() const {
  std::vector<DirectedEdge> out;
  for (BagId a = 0; a < adj_.size(); ++a) {
    for (BagId b : adj_[a]) out.push_back({a, b});
  }
  return out;
}

std::optional<BagId> JunctionHypertree::bag_of(const std::string& relation) const {
  auto it = mapping_.find(relation);
  if (it == mapping_.end()) return std::nullopt;
  return it->second;
}

const RelationInfo& JunctionHypertree::relation_info(const std::string& name) const {
  auto it = infos_.find(name);
  if (it == infos_.end()) raise(ErrorCode::kUnknownId, "unknown relation '" + name + "'");
  return it->second;
}

std::vector<BagId> JunctionHypertree::upstream(BagId from, BagId to) const {
  std::vector<BagId> out{from};
  std::vector<bool> seen(bags_.size(), false);
  seen[from] = true;
  seen[to] = true;
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (BagId n : adj_[out[i]]) {
      if (!seen[n]) {
        seen[n] = true;
        out.push_back(n);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<BagId> JunctionHypertree::path(BagId a, BagId b) const {
  bag(a);
  bag(b);
  std::vector<std::int64_t> parent(bags_.size(), -1);
  std::vector<BagId> queue{a};
  parent[a] = a;
  for (std::size_t i = 0; i < queue.size() && parent[b] < 0; ++i) {
    for (BagId n : adj_[queue[i]]) {
      if (parent[n] < 0) {
        parent[n] = queue[i];
        queue.push_back(n);
      }
    }
  }
  if (parent[b] < 0) raise(ErrorCode::kInvalidJoinTree, "bags " + std::to_string(a) + " and " + std::to_string(b) + " are disconnected");
  std::vector<BagId> out{b};
  while (out.back() != a) out.push_back(static_cast<BagId>(parent[out.back()]));
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<BagId> JunctionHypertree::bags_with(const std::string& attr) const {
  std::vector<BagId> out;
  for (const auto& b : bags_) {
    if (std::binary_search(b.attrs.begin(), b.attrs.end(), attr)) out.push_back(b.id);
  }
  return out;
}

std::vector<std::string> JunctionHypertree::attributes() const {
  std::vector<std::string> out;
  for (const auto& b : bags_) out = attr_union(out, b.attrs);
  return out;
}

std::size_t JunctionHypertree::mapped_rows(BagId id) const {
  std::size_t n = 0;
  for (const auto& r : bag(id).relations) {
    auto it = infos_.find(r);
    if (it != infos_.end()) n += it->second.rows;
  }
  return n;
}

std::string JunctionHypertree::describe() const {
  std::ostringstream os;
  for (const auto& b : bags_) {
    os << b.id << ":{";
    for (std::size_t i = 0; i < b.attrs.size(); ++i) os << (i ? "," : "") << b.attrs[i];
    os << "}";
    if (b.empty_bag) os << "*";
    for (const auto& r : b.relations) os << " " << r;
    os << "\n";
  }
  for (auto [a, b] : edges()) os << a << "-" << b << "\n";
  return os.str();
}

std::string_view to_string(JtViolation::Kind kind) {
  switch (kind) {
    case JtViolation::Kind::kNone: return "ok";
    case JtViolation::Kind::kNotATree: return "not_a_tree";
    case JtViolation::Kind::kVertexCoverage: return "vertex_coverage";
    case JtViolation::Kind::kEdgeCoverage: return "edge_coverage";
    case JtViolation::Kind::kMapping: return "mapping";
    case JtViolation::Kind::kRunningIntersection: return "running_intersection";
  }
  return "?";
}

JtViolation validate_jt(const JunctionHypertree& jt) {
  auto fail = [](JtViolation::Kind k, std::string witness, std::string msg) {
    return JtViolation{k, std::move(witness), std::move(msg)};
  };
  const std::size_t n = jt.size();
  if (n == 0) return fail(JtViolation::Kind::kNotATree, "", "hypertree has no bags");
  if (jt.edges().size() != n - 1) {
    return fail(JtViolation::Kind::kNotATree, "", "expected " + std::to_string(n - 1) + " edges, found " +
                                                      std::to_string(jt.edges().size()));
  }
  std::vector<bool> seen(n, false);
  std::vector<BagId> queue{0};
  seen[0] = true;
  for (std::size_t i = 0; i < queue.size(); ++i) {
    for (BagId b : jt.neighbors(queue[i])) {
      if (!seen[b]) {
        seen[b] = true;
        queue.push_back(b);
      }
    }
  }
  if (queue.size() != n) return fail(JtViolation::Kind::kNotATree, "", "bags are not connected");

  std::vector<std::string> rel_attrs;
  for (const auto& [name, info] : jt.relation_infos()) rel_attrs = attr_union(rel_attrs, info.attrs);
  const std::vector<std::string> bag_attrs = jt.attributes();
  for (const auto& a : rel_attrs) {
    if (!std::binary_search(bag_attrs.begin(), bag_attrs.end(), a)) {
      return fail(JtViolation::Kind::kVertexCoverage, a, "attribute '" + a + "' appears in no bag");
    }
  }
  for (const auto& a : bag_attrs) {
    if (!std::binary_search(rel_attrs.begin(), rel_attrs.end(), a)) {
      return fail(JtViolation::Kind::kVertexCoverage, a, "bag attribute '" + a + "' belongs to no relation");
    }
  }

  for (const auto& [name, info] : jt.relation_infos()) {
    auto b = jt.bag_of(name);
    if (!b) return fail(JtViolation::Kind::kMapping, name, "relation '" + name + "' is not mapped to a bag");
    const auto& attrs = jt.bag(*b).attrs;
    if (!std::includes(attrs.begin(), attrs.end(), info.attrs.begin(), info.attrs.end())) {
      return fail(JtViolation::Kind::kEdgeCoverage, name,
                  "bag " + std::to_string(*b) + " does not cover relation '" + name + "'");
    }
  }
  for (const auto& [name, b] : jt.mapping()) {
    if (!jt.relation_infos().count(name)) {
      return fail(JtViolation::Kind::kMapping, name, "bag " + std::to_string(b) + " maps unknown relation '" + name + "'");
    }
  }

  for (const auto& a : bag_attrs) {
    std::vector<BagId> holders = jt.bags_with(a);
    std::vector<bool> in(n, false);
    for (BagId b : holders) in[b] = true;
    std::vector<BagId> q{holders.front()};
    std::vector<bool> vis(n, false);
    vis[holders.front()] = true;
    for (std::size_t i = 0; i < q.size(); ++i) {
      for (BagId b : jt.neighbors(q[i])) {
        if (in[b] && !vis[b]) {
          vis[b] = true;
          q.push_back(b);
        }
      }
    }
    if (q.size() != holders.size()) {
      return fail(JtViolation::Kind::kRunningIntersection, a,
                  "bags containing '" + a + "' do not form a connected subtree");
    }
  }
  return {};
}

namespace {

void require_valid(const JunctionHypertree& jt) {
  JtViolation v = validate_jt(jt);
  if (!v.ok()) raise(ErrorCode::kInvalidJoinTree, std::string(to_string(v.kind)) + ": " + v.message);
}

}  // namespace

JunctionHypertree add_empty_bag(const JunctionHypertree& jt, std::vector<std::string> attrs,
                                const std::vector<BagId>& neighbors, BagId* new_id) {
  if (neighbors.empty()) raise(ErrorCode::kInvalidJoinTree, "an empty bag needs at least one neighbor");
  std::vector<std::string> cover;
  for (BagId b : neighbors) cover = attr_union(cover, jt.bag(b).attrs);
  attrs = sorted_attrs(std::move(attrs));
  for (const auto& a : attrs) {
    if (!std::binary_search(cover.begin(), cover.end(), a)) {
      raise(ErrorCode::kInvalidJoinTree, "empty bag attribute '" + a + "' is not held by any neighbor");
    }
  }
  JunctionHypertree out = jt;
  BagId id = out.add_bag(attrs, {}, true);
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    for (std::size_t j = i + 1; j < neighbors.size(); ++j) {
      if (out.adjacent(neighbors[i], neighbors[j])) out.remove_edge(neighbors[i], neighbors[j]);
    }
  }
  for (BagId b : neighbors) out.add_edge(id, b);
  require_valid(out);
  if (new_id) *new_id = id;
  return out;
}

JunctionHypertree build_jt(const JoinGraph& g) {
  if (g.relations().empty()) raise(ErrorCode::kInvalidArgument, "join graph has no relations");
  if (!g.connected()) raise(ErrorCode::kDisconnectedGraph, "join graph '" + g.id() + "' is not connected");
  JunctionHypertree jt;
  for (const auto& r : g.relations()) {
    jt.set_relation_info({r.name, r.attrs, r.current().size(), r.current_version});
  }
  if (g.bags) {
    for (const auto& b : *g.bags) {
      std::vector<std::string> attrs = b.attrs;
      for (const auto& r : b.relations) attrs = attr_union(attrs, g.relation(r).attrs);
      jt.add_bag(attrs, b.relations);
    }
    for (auto [a, b] : g.edges) {
      if (a >= jt.size() || b >= jt.size()) raise(ErrorCode::kInvalidJoinTree, "edge references an unknown bag");
      jt.add_edge(static_cast<BagId>(a), static_cast<BagId>(b));
    }
  } else {
    if (!gyo_check(g).acyclic) {
      raise(ErrorCode::kCyclicGraph, "join graph '" + g.id() + "' is cyclic; cyclic joins are not supported");
    }
    const auto& rels = g.relations();
    for (const auto& r : rels) jt.add_bag(r.attrs, {r.name});
    struct Cand {
      std::size_t weight;
      BagId a;
      BagId b;
    };
    std::vector<Cand> cands;
    for (BagId a = 0; a < rels.size(); ++a) {
      for (BagId b = a + 1; b < rels.size(); ++b) {
        std::size_t w = attr_intersection(rels[a].attrs, rels[b].attrs).size();
        if (w > 0) cands.push_back({w, a, b});
      }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) { return x.weight > y.weight; });
    std::vector<BagId> parent(rels.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](BagId x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (const auto& c : cands) {
      BagId ra = find(c.a);
      BagId rb = find(c.b);
      if (ra == rb) continue;
      parent[ra] = rb;
      jt.add_edge(c.a, c.b);
    }
  }
  require_valid(jt);
  for (const auto& eb : g.empty_bags) {
    std::vector<BagId> ns;
    for (const auto& n : eb.neighbors) {
      if (auto b = jt.bag_of(n)) {
        ns.push_back(*b);
      } else if (!n.empty() && std::all_of(n.begin(), n.end(), ::isdigit)) {
        ns.push_back(static_cast<BagId>(std::stoul(n)));
      } else {
        raise(ErrorCode::kUnknownId, "empty bag neighbor '" + n + "' is neither a relation nor a bag index");
      }
    }
    jt = add_empty_bag(jt, eb.attrs, ns);
  }
  return jt;
}

}  // namespace cjt
