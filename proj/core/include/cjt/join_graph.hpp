#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cjt/relation.hpp"

namespace cjt {

struct RelationEntry {
  std::string name;
  std::vector<std::string> attrs;
  std::string current_version;
  std::map<std::string, std::shared_ptr<const AnnotatedRelation>> versions;

  const AnnotatedRelation& at(const std::string& version) const;
  const AnnotatedRelation& current() const { return at(current_version); }
};

/// Optional hand-written hypertree layout carried by a graph document.
struct BagLayout {
  std::vector<std::string> attrs;
  std::vector<std::string> relations;
};

struct EmptyBagLayout {
  std::vector<std::string> attrs;
  /// Relation names (their bags) or bag indices rendered as decimal strings.
  std::vector<std::string> neighbors;
};

/// Base relations joined naturally on equal attribute names, all annotated
/// with the same semiring.
class JoinGraph {
 public:
  JoinGraph(std::string id, SemiringSpec spec, std::shared_ptr<Dictionary> dict = nullptr);

  const std::string& id() const { return id_; }
  void set_id(std::string id) { id_ = std::move(id); }
  const SemiringSpec& spec() const { return spec_; }
  Dictionary& dictionary() const { return *dict_; }
  std::shared_ptr<Dictionary> shared_dictionary() const { return dict_; }

  void add_relation(const std::string& name, AnnotatedRelation rel, const std::string& version = "v1");
  void add_version(const std::string& name, const std::string& version, AnnotatedRelation rel);

  const std::vector<RelationEntry>& relations() const { return relations_; }
  const RelationEntry& relation(const std::string& name) const;
  bool has_relation(const std::string& name) const;

  /// Sorted union of all relation attributes.
  std::vector<std::string> attributes() const;
  bool connected() const;

  /// Observed distinct values of `attr` across every relation version.
  std::size_t domain_size(const std::string& attr) const;

  std::optional<std::vector<BagLayout>> bags;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<EmptyBagLayout> empty_bags;

 private:
  std::string id_;
  SemiringSpec spec_;
  std::shared_ptr<Dictionary> dict_;
  std::vector<RelationEntry> relations_;
  std::map<std::string, std::set<Value>> observed_;
};

SemiringSpec semiring_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SemiringSpec& spec);

/// Parses a graph document. Relative CSV paths resolve against `base_dir`.
std::shared_ptr<JoinGraph> join_graph_from_json(const nlohmann::json& doc, const std::string& base_dir);
std::shared_ptr<JoinGraph> load_join_graph(const std::string& path);

}  // namespace cjt
