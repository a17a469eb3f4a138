#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "cjt/annotations.hpp"

namespace cjt {

/// A hypertree paired with one query's annotations, plus everything that can
/// be derived statically from the pair: per-direction surviving group-by
/// attributes, message schemas, and message fingerprints.
class AnnotatedTree {
 public:
  struct ActiveRelation {
    std::string name;
    std::string version;
    std::shared_ptr<const AnnotatedRelation> data;
  };

  AnnotatedTree(std::shared_ptr<const JoinGraph> graph, std::shared_ptr<const JunctionHypertree> jt,
                AnnotationSet annotations);

  const JoinGraph& graph() const { return *graph_; }
  const JunctionHypertree& jt() const { return *jt_; }
  const std::shared_ptr<const JoinGraph>& graph_ptr() const { return graph_; }
  const std::shared_ptr<const JunctionHypertree>& jt_ptr() const { return jt_; }
  const AnnotationSet& annotations() const { return annotations_; }
  const SemiringSpec& spec() const { return graph_->spec(); }

  const std::vector<ActiveRelation>& active(BagId bag) const { return bags_.at(bag).active; }
  /// Selections placed on the bag, one entry per annotation.
  const std::vector<Predicate>& selections(BagId bag) const { return bags_.at(bag).selections; }

  /// Group-by attributes still alive when the message leaves `e.from`.
  const std::vector<std::string>& alive(DirectedEdge e) const { return edge(e).alive; }
  /// Attributes of the message content.
  const std::vector<std::string>& kept(DirectedEdge e) const { return edge(e).kept; }
  /// Digest of everything the message depends on.
  const std::string& fingerprint(DirectedEdge e) const { return edge(e).fingerprint; }

  /// Attributes present in the absorption at `root`.
  std::vector<std::string> absorption_schema(BagId root) const;
  /// Whether the absorption at `root` still holds every output attribute.
  bool feasible_root(BagId root) const;

 private:
  struct BagInfo {
    std::vector<ActiveRelation> active;
    std::vector<std::string> active_attrs;
    std::vector<Predicate> selections;
    std::vector<std::string> gamma;
    std::vector<std::string> sigma;
    std::string signature;
  };
  struct EdgeInfo {
    std::vector<std::string> alive;
    std::vector<std::string> kept;
    std::string fingerprint;
    bool done = false;
  };

  const EdgeInfo& edge(DirectedEdge e) const;
  void derive(DirectedEdge e);

  std::shared_ptr<const JoinGraph> graph_;
  std::shared_ptr<const JunctionHypertree> jt_;
  AnnotationSet annotations_;
  std::vector<BagInfo> bags_;
  std::map<DirectedEdge, EdgeInfo> edges_;
};

/// Lower-case hex of the first 128 bits of SHA-256.
std::string digest128(std::string_view bytes);

}  // namespace cjt
