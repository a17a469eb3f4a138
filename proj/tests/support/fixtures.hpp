#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cjt/relation.hpp"

namespace cjt::testing {

struct Row {
  std::vector<std::string> values;
  Annotation annotation;
};

/// Builds a relation from textual rows; `attrs` may be in any order.
inline AnnotatedRelation make_relation(Dictionary& dict, const SemiringSpec& spec, std::vector<std::string> attrs,
                                       const std::vector<Row>& rows) {
  for (const auto& a : attrs) {
    if (!dict.has(a)) dict.declare(a, AttrType::kCategorical);
  }
  std::vector<std::string> sorted = sorted_attrs(attrs);
  std::vector<std::size_t> pos(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    for (std::size_t j = 0; j < attrs.size(); ++j) {
      if (attrs[j] == sorted[i]) pos[i] = j;
    }
  }
  RelationBuilder b(sorted, spec);
  std::vector<Value> t(sorted.size());
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < sorted.size(); ++i) t[i] = dict.intern(sorted[i], r.values[pos[i]]);
    b.add(t, r.annotation);
  }
  return std::move(b).build();
}

inline AnnotatedRelation counts(Dictionary& dict, std::vector<std::string> attrs,
                                const std::vector<std::pair<std::vector<std::string>, std::uint64_t>>& rows) {
  std::vector<Row> rs;
  for (const auto& [v, c] : rows) rs.push_back({v, Annotation::count(c)});
  return make_relation(dict, SemiringSpec::count(), std::move(attrs), rs);
}

}  // namespace cjt::testing
