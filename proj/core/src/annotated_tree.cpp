#include "cjt/annotated_tree.hpp"

#include <openssl/evp.h>

#include <algorithm>

#include "cjt/error.hpp"

namespace cjt {

std::string digest128(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    raise(ErrorCode::kInternal, "SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(32);
  for (unsigned int i = 0; i < 16; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 15];
  }
  return out;
}

AnnotatedTree::AnnotatedTree(std::shared_ptr<const JoinGraph> graph, std::shared_ptr<const JunctionHypertree> jt,
                             AnnotationSet annotations)
    : graph_(std::move(graph)), jt_(std::move(jt)), annotations_(std::move(annotations)) {
  const auto& tree = *jt_;
  bags_.resize(tree.size());
  for (const auto& p : annotations_.placements) {
    if (p.bag >= tree.size()) raise(ErrorCode::kAnnotationPlacement, "annotation on unknown bag");
    const auto& attrs = tree.bag(p.bag).attrs;
    for (const auto& a : p.annotation.attributes()) {
      if (!std::binary_search(attrs.begin(), attrs.end(), a)) {
        raise(ErrorCode::kAnnotationPlacement,
              p.annotation.canonical() + " placed on bag " + std::to_string(p.bag) + " which lacks '" + a + "'");
      }
    }
    if (p.annotation.kind == AnnotationKind::kExclude || p.annotation.kind == AnnotationKind::kUpdate) {
      auto home = tree.bag_of(p.annotation.relation);
      if (!home || *home != p.bag) {
        raise(ErrorCode::kAnnotationPlacement, p.annotation.canonical() + " must sit on the relation's own bag");
      }
    }
  }
  for (const auto& b : tree.bags()) {
    BagInfo& info = bags_[b.id];
    for (const auto& r : b.relations) {
      if (annotations_.is_excluded(r)) continue;
      const RelationEntry& entry = graph_->relation(r);
      std::string version = annotations_.version_of(r).value_or(entry.current_version);
      auto it = entry.versions.find(version);
      if (it == entry.versions.end()) {
        raise(ErrorCode::kInvalidQuery, "relation '" + r + "' has no version '" + version + "'");
      }
      info.active.push_back({r, version, it->second});
      info.active_attrs = attr_union(info.active_attrs, entry.attrs);
    }
    for (const BagAnnotation* a : annotations_.on(b.id)) {
      switch (a->kind) {
        case AnnotationKind::kGroupBy: info.gamma.push_back(a->attr); break;
        case AnnotationKind::kMarginalize: info.sigma.push_back(a->attr); break;
        case AnnotationKind::kSelect: {
          auto pa = a->predicate.attributes();
          if (!std::includes(info.active_attrs.begin(), info.active_attrs.end(), pa.begin(), pa.end())) {
            raise(ErrorCode::kAnnotationPlacement,
                  a->canonical() + " on bag " + std::to_string(b.id) + " is not covered by an active relation");
          }
          info.selections.push_back(a->predicate);
          break;
        }
        default: break;
      }
    }
    info.gamma = sorted_attrs(info.gamma);
    info.sigma = sorted_attrs(info.sigma);
    std::string sig = std::to_string(b.id) + "{";
    for (const auto& a : b.attrs) sig += a + ",";
    sig += "}r[";
    for (const auto& r : b.relations) {
      sig += r;
      if (annotations_.is_excluded(r)) {
        sig += "!x";
      } else {
        sig += "@" + annotations_.version_of(r).value_or(graph_->relation(r).current_version);
      }
      sig += ",";
    }
    sig += "]a[";
    for (const auto& s : annotations_.signature(b.id)) sig += s + ";";
    sig += "]";
    info.signature = std::move(sig);
  }
  for (const auto& e : tree.directed_edges()) derive(e);
}

void AnnotatedTree::derive(DirectedEdge e) {
  EdgeInfo& slot = edges_[e];
  if (slot.done) return;
  const auto& tree = *jt_;
  const BagInfo& u = bags_[e.from];
  std::vector<std::string> alive = u.gamma;
  std::vector<std::string> support = u.active_attrs;
  for (BagId i : tree.neighbors(e.from)) {
    if (i == e.to) continue;
    DirectedEdge in{i, e.from};
    derive(in);
    const EdgeInfo& child = edges_.at(in);
    alive = attr_union(alive, child.alive);
    support = attr_union(support, child.kept);
  }
  alive = attr_difference(alive, u.sigma);
  std::vector<std::string> shared = attr_intersection(tree.bag(e.from).attrs, tree.bag(e.to).attrs);
  std::vector<std::string> kept = attr_intersection(attr_union(shared, alive), support);

  std::string text = "graph:" + graph_->id() + "\nspec:" + graph_->spec().canonical() + "\nedge:" +
                     std::to_string(e.from) + ">" + std::to_string(e.to) + "\nkeep:";
  for (const auto& a : kept) text += a + ",";
  text += "\n";
  std::vector<BagId> up = tree.upstream(e.from, e.to);
  for (BagId b : up) text += bags_[b].signature + "\n";
  for (BagId b : up) {
    for (BagId n : tree.neighbors(b)) {
      if (b < n && std::binary_search(up.begin(), up.end(), n)) text += "e:" + std::to_string(b) + "-" + std::to_string(n) + "\n";
    }
  }

  EdgeInfo& out = edges_[e];
  out.alive = std::move(alive);
  out.kept = std::move(kept);
  out.fingerprint = digest128(text);
  out.done = true;
}

const AnnotatedTree::EdgeInfo& AnnotatedTree::edge(DirectedEdge e) const {
  auto it = edges_.find(e);
  if (it == edges_.end()) {
    raise(ErrorCode::kInvalidArgument,
          "bags " + std::to_string(e.from) + " and " + std::to_string(e.to) + " are not adjacent");
  }
  return it->second;
}

std::vector<std::string> AnnotatedTree::absorption_schema(BagId root) const {
  std::vector<std::string> support = bags_.at(root).active_attrs;
  for (BagId i : jt_->neighbors(root)) support = attr_union(support, kept({i, root}));
  return support;
}

bool AnnotatedTree::feasible_root(BagId root) const {
  auto schema = absorption_schema(root);
  const auto& out = annotations_.output;
  return std::includes(schema.begin(), schema.end(), out.begin(), out.end());
}

}  // namespace cjt
