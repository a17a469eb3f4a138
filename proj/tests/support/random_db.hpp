#pragma once

#include <algorithm>
#include <memory>
#include <string>
#include <vector>

#include "cjt/annotations.hpp"
#include "cjt/join_graph.hpp"
#include "cjt/jointree.hpp"
#include "fixtures.hpp"
#include "gen.hpp"

namespace cjt::testing {

struct RandomDbOptions {
  int max_relations = 5;
  int max_rows = 50;
  int max_domain = 8;
  /// Probability that a relation gets a second version "v2".
  double version_rate = 0.3;
};

/// Random acyclic database: relations form a random tree, each child sharing
/// one or two of its parent's attributes and adding fresh ones.
inline std::shared_ptr<JoinGraph> random_db(Gen& gen, const SemiringSpec& spec, const RandomDbOptions& o = {}) {
  auto g = std::make_shared<JoinGraph>("rand", spec);
  Dictionary& dict = g->dictionary();
  const int n = gen.uniform(1, o.max_relations);
  int next_attr = 0;
  std::vector<std::vector<std::string>> schemas;
  for (int i = 0; i < n; ++i) {
    std::vector<std::string> attrs;
    if (i > 0) {
      const auto& parent = schemas[static_cast<std::size_t>(gen.uniform(0, i - 1))];
      std::vector<std::string> pool = parent;
      std::shuffle(pool.begin(), pool.end(), gen.rng());
      const int share = std::min<int>(static_cast<int>(pool.size()), gen.uniform(1, 2));
      attrs.assign(pool.begin(), pool.begin() + share);
    }
    const int fresh = gen.uniform(i == 0 ? 1 : 0, 2);
    for (int k = 0; k < fresh; ++k) attrs.push_back("A" + std::to_string(next_attr++));
    schemas.push_back(sorted_attrs(attrs));
  }
  std::map<std::string, int> domain;
  for (const auto& s : schemas) {
    for (const auto& a : s) {
      if (!domain.count(a)) domain[a] = gen.uniform(1, o.max_domain);
    }
  }
  auto make = [&](const std::vector<std::string>& attrs) {
    std::vector<Row> rows;
    const int count = gen.uniform(0, o.max_rows);
    for (int r = 0; r < count; ++r) {
      Row row;
      for (const auto& a : attrs) row.values.push_back(a + "_" + std::to_string(gen.uniform(0, domain[a] - 1)));
      row.annotation = gen.annotation(spec);
      rows.push_back(std::move(row));
    }
    return make_relation(dict, spec, attrs, rows);
  };
  for (int i = 0; i < n; ++i) {
    const std::string name = "R" + std::to_string(i);
    g->add_relation(name, make(schemas[static_cast<std::size_t>(i)]));
    if (gen.coin(o.version_rate)) g->add_version(name, "v2", make(schemas[static_cast<std::size_t>(i)]));
  }
  return g;
}

/// Random single-attribute predicate over `attr` using equality, IN or <>.
inline Predicate random_predicate(Gen& gen, const JoinGraph& g, const std::string& attr) {
  const int d = static_cast<int>(std::max<std::size_t>(1, g.domain_size(attr)));
  auto literal = [&] { return attr + "_" + std::to_string(gen.uniform(0, d)); };
  switch (gen.uniform(0, 2)) {
    case 0: return Predicate::eq(attr, literal());
    case 1: return Predicate::in(attr, {literal(), literal()});
    default: return Predicate::cmp(attr, CompareOp::kNe, literal());
  }
}

/// Random query valid for `jt`: group-bys, predicates, legal exclusions and
/// version updates.
inline QuerySpec random_query(Gen& gen, const JoinGraph& g, const JunctionHypertree& jt) {
  QuerySpec q;
  if (jt.size() > 1 && gen.coin(0.25)) {
    std::vector<std::string> names;
    for (const auto& r : g.relations()) names.push_back(r.name);
    const auto& r = gen.pick(names);
    if (exclusion_allowed(jt, r, {r})) q.excluded.push_back(r);
  }
  std::vector<std::string> attrs;
  for (const auto& a : g.attributes()) {
    if (!attribute_candidates(jt, a, q.excluded).empty()) attrs.push_back(a);
  }
  const int groups = std::min<int>(static_cast<int>(attrs.size()), gen.uniform(0, 2));
  std::vector<std::string> pool = attrs;
  std::shuffle(pool.begin(), pool.end(), gen.rng());
  q.group_by.assign(pool.begin(), pool.begin() + groups);
  const int preds = gen.uniform(0, 2);
  for (int i = 0; i < preds && !attrs.empty(); ++i) q.predicates.push_back(random_predicate(gen, g, gen.pick(attrs)));
  for (const auto& r : g.relations()) {
    if (r.versions.count("v2") && gen.coin(0.4)) q.updates[r.name] = "v2";
  }
  return q;
}

}  // namespace cjt::testing
