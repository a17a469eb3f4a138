#include "cjt/annotations.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>

#include "cjt/error.hpp"

namespace cjt {

QuerySpec QuerySpec::normalized() const {
  QuerySpec q = *this;
  q.group_by = sorted_attrs(q.group_by);
  std::sort(q.predicates.begin(), q.predicates.end(),
            [](const Predicate& a, const Predicate& b) { return a.canonical() < b.canonical(); });
  q.predicates.erase(std::unique(q.predicates.begin(), q.predicates.end()), q.predicates.end());
  q.excluded = sorted_attrs(q.excluded);
  return q;
}

std::string QuerySpec::canonical() const {
  QuerySpec q = normalized();
  std::string out = "G[";
  for (const auto& a : q.group_by) out += a + ",";
  out += "]P[";
  for (const auto& p : q.predicates) out += p.canonical() + ";";
  out += "]X[";
  for (const auto& r : q.excluded) out += r + ",";
  out += "]U[";
  for (const auto& [r, v] : q.updates) out += r + "@" + v + ",";
  out += "]";
  return out;
}

void to_json(nlohmann::json& j, const QuerySpec& q) {
  j = nlohmann::json::object();
  j["group_by"] = q.group_by;
  nlohmann::json preds = nlohmann::json::array();
  for (const auto& p : q.predicates) preds.push_back(p);
  j["predicates"] = preds;
  j["excluded"] = q.excluded;
  j["updates"] = q.updates;
}

void from_json(const nlohmann::json& j, QuerySpec& q) {
  q = QuerySpec{};
  if (!j.is_object()) raise(ErrorCode::kInvalidQuery, "query must be a JSON object");
  try {
    if (j.contains("group_by")) q.group_by = j.at("group_by").get<std::vector<std::string>>();
    if (j.contains("predicates")) {
      for (const auto& p : j.at("predicates")) q.predicates.push_back(p.get<Predicate>());
    }
    if (j.contains("excluded")) q.excluded = j.at("excluded").get<std::vector<std::string>>();
    if (j.contains("updates")) q.updates = j.at("updates").get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::kInvalidQuery, std::string("malformed query: ") + e.what());
  }
}

QuerySpec apply_delta(const QuerySpec& base, const nlohmann::json& delta) {
  if (!delta.is_object()) raise(ErrorCode::kInvalidQuery, "delta must be a JSON object");
  QuerySpec q = base;
  try {
    auto strings = [&](const char* key) { return delta.at(key).get<std::vector<std::string>>(); };
    if (delta.contains("group_by")) q.group_by = strings("group_by");
    if (delta.contains("add_group_by")) {
      for (auto& a : strings("add_group_by")) q.group_by.push_back(a);
    }
    if (delta.contains("remove_group_by")) {
      for (auto& a : strings("remove_group_by")) std::erase(q.group_by, a);
    }
    if (delta.contains("predicates")) {
      q.predicates.clear();
      for (const auto& p : delta.at("predicates")) q.predicates.push_back(p.get<Predicate>());
    }
    if (delta.contains("remove_predicates")) {
      // Drops every predicate that references one of the listed attributes.
      for (auto& a : strings("remove_predicates")) {
        std::erase_if(q.predicates, [&](const Predicate& p) {
          auto attrs = p.attributes();
          return std::find(attrs.begin(), attrs.end(), a) != attrs.end();
        });
      }
    }
    if (delta.contains("add_predicates")) {
      for (const auto& p : delta.at("add_predicates")) {
        Predicate np = p.get<Predicate>();
        // A new predicate on the same attributes replaces the old one.
        std::erase_if(q.predicates, [&](const Predicate& old) { return old.attributes() == np.attributes(); });
        q.predicates.push_back(std::move(np));
      }
    }
    if (delta.contains("exclude")) {
      for (auto& r : strings("exclude")) q.excluded.push_back(r);
    }
    if (delta.contains("include")) {
      for (auto& r : strings("include")) std::erase(q.excluded, r);
    }
    if (delta.contains("update")) {
      for (const auto& [r, v] : delta.at("update").items()) q.updates[r] = v.get<std::string>();
    }
    if (delta.contains("restore")) {
      for (auto& r : strings("restore")) q.updates.erase(r);
    }
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::kInvalidQuery, std::string("malformed delta: ") + e.what());
  }
  return q.normalized();
}

BagAnnotation BagAnnotation::group_by(std::string attr) {
  BagAnnotation a;
  a.kind = AnnotationKind::kGroupBy;
  a.attr = std::move(attr);
  return a;
}

BagAnnotation BagAnnotation::marginalize(std::string attr) {
  BagAnnotation a;
  a.kind = AnnotationKind::kMarginalize;
  a.attr = std::move(attr);
  return a;
}

BagAnnotation BagAnnotation::select(Predicate p) {
  BagAnnotation a;
  a.kind = AnnotationKind::kSelect;
  a.predicate = std::move(p);
  return a;
}

BagAnnotation BagAnnotation::exclude(std::string relation) {
  BagAnnotation a;
  a.kind = AnnotationKind::kExclude;
  a.relation = std::move(relation);
  return a;
}

BagAnnotation BagAnnotation::update(std::string relation, std::string version) {
  BagAnnotation a;
  a.kind = AnnotationKind::kUpdate;
  a.relation = std::move(relation);
  a.version = std::move(version);
  return a;
}

std::vector<std::string> BagAnnotation::attributes() const {
  switch (kind) {
    case AnnotationKind::kGroupBy:
    case AnnotationKind::kMarginalize: return {attr};
    case AnnotationKind::kSelect: return predicate.attributes();
    default: return {};
  }
}

std::string BagAnnotation::canonical() const {
  switch (kind) {
    case AnnotationKind::kGroupBy: return "gamma(" + attr + ")";
    case AnnotationKind::kMarginalize: return "sum(" + attr + ")";
    case AnnotationKind::kSelect: return "sigma(" + predicate.canonical() + ")";
    case AnnotationKind::kExclude: return "exclude(" + relation + ")";
    case AnnotationKind::kUpdate: return "update(" + relation + "@" + version + ")";
  }
  return "?";
}

std::vector<const BagAnnotation*> AnnotationSet::on(BagId bag) const {
  std::vector<const BagAnnotation*> out;
  for (const auto& p : placements) {
    if (p.bag == bag) out.push_back(&p.annotation);
  }
  return out;
}

std::vector<std::string> AnnotationSet::signature(BagId bag) const {
  std::vector<std::string> out;
  for (const auto& p : placements) {
    if (p.bag == bag) out.push_back(p.annotation.canonical());
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool AnnotationSet::is_excluded(const std::string& relation) const {
  return std::any_of(placements.begin(), placements.end(), [&](const Placement& p) {
    return p.annotation.kind == AnnotationKind::kExclude && p.annotation.relation == relation;
  });
}

std::optional<std::string> AnnotationSet::version_of(const std::string& relation) const {
  for (const auto& p : placements) {
    if (p.annotation.kind == AnnotationKind::kUpdate && p.annotation.relation == relation) return p.annotation.version;
  }
  return std::nullopt;
}

std::string AnnotationSet::canonical() const {
  std::vector<std::string> parts;
  for (const auto& p : placements) parts.push_back(std::to_string(p.bag) + ":" + p.annotation.canonical());
  std::sort(parts.begin(), parts.end());
  std::string out = "out[";
  for (const auto& a : output) out += a + ",";
  out += "]";
  for (const auto& p : parts) out += " " + p;
  return out;
}

nlohmann::json to_json(const AnnotationSet& a, const JunctionHypertree& jt) {
  nlohmann::json bags = nlohmann::json::array();
  for (const auto& b : jt.bags()) {
    auto sig = a.signature(b.id);
    if (!sig.empty()) bags.push_back({{"bag", b.id}, {"annotations", sig}});
  }
  return {{"output", a.output}, {"bags", bags}};
}

BagId default_reference_root(const JunctionHypertree& jt) {
  BagId best = 0;
  std::size_t best_rows = 0;
  for (const auto& b : jt.bags()) {
    std::size_t rows = jt.mapped_rows(b.id);
    if (b.id == 0 || rows > best_rows) {
      best = b.id;
      best_rows = rows;
    }
  }
  return best;
}

namespace {

bool contains(const std::vector<std::string>& xs, const std::string& x) {
  return std::find(xs.begin(), xs.end(), x) != xs.end();
}

}  // namespace

void validate_query(const JoinGraph& g, const JunctionHypertree& jt, const QuerySpec& q) {
  const auto attrs = jt.attributes();
  for (const auto& r : q.excluded) {
    if (!jt.bag_of(r)) raise(ErrorCode::kInvalidQuery, "cannot exclude unknown relation '" + r + "'");
  }
  for (const auto& [r, v] : q.updates) {
    if (!jt.bag_of(r)) raise(ErrorCode::kInvalidQuery, "cannot update unknown relation '" + r + "'");
    if (!g.relation(r).versions.count(v)) {
      raise(ErrorCode::kInvalidQuery, "relation '" + r + "' has no version '" + v + "'");
    }
  }
  for (const auto& a : q.group_by) {
    if (!std::binary_search(attrs.begin(), attrs.end(), a)) {
      raise(ErrorCode::kUnknownAttribute, "group-by attribute '" + a + "' is not in the join graph");
    }
    if (attribute_candidates(jt, a, q.excluded).empty()) {
      raise(ErrorCode::kInvalidQuery, "group-by attribute '" + a + "' is only provided by excluded relations");
    }
  }
  for (const auto& p : q.predicates) {
    if (p.empty()) raise(ErrorCode::kInvalidQuery, "empty predicate");
    for (const auto& a : p.attributes()) {
      if (!std::binary_search(attrs.begin(), attrs.end(), a)) {
        raise(ErrorCode::kUnknownAttribute, "predicate attribute '" + a + "' is not in the join graph");
      }
    }
  }
}

std::vector<BagId> selection_candidates(const JunctionHypertree& jt, const std::vector<std::string>& attrs,
                                        const std::vector<std::string>& excluded) {
  std::vector<BagId> out;
  for (const auto& b : jt.bags()) {
    for (const auto& r : b.relations) {
      if (contains(excluded, r)) continue;
      const auto& ra = jt.relation_info(r).attrs;
      if (std::includes(ra.begin(), ra.end(), attrs.begin(), attrs.end())) {
        out.push_back(b.id);
        break;
      }
    }
  }
  return out;
}

std::vector<BagId> attribute_candidates(const JunctionHypertree& jt, const std::string& attr,
                                        const std::vector<std::string>& excluded) {
  return selection_candidates(jt, {attr}, excluded);
}

bool exclusion_allowed(const JunctionHypertree& jt, const std::string& relation,
                       const std::vector<std::string>& excluded) {
  auto b = jt.bag_of(relation);
  if (!b) return false;
  if (jt.is_leaf(*b)) return true;
  std::vector<std::string> remaining;
  for (const auto& r : jt.bag(*b).relations) {
    if (!contains(excluded, r) && r != relation) remaining = attr_union(remaining, jt.relation_info(r).attrs);
  }
  for (BagId n : jt.neighbors(*b)) {
    auto shared = attr_intersection(jt.bag(*b).attrs, jt.bag(n).attrs);
    if (!std::includes(remaining.begin(), remaining.end(), shared.begin(), shared.end())) return false;
  }
  return true;
}

AnnotationSet bind_annotations(const JoinGraph& g, const JunctionHypertree& jt, const QuerySpec& query,
                               const BindOptions& options) {
  const QuerySpec q = query.normalized();
  validate_query(g, jt, q);
  const BagId ref = options.reference_root.value_or(default_reference_root(jt));
  AnnotationSet out;
  out.output = q.group_by;

  for (const auto& r : q.excluded) {
    if (!exclusion_allowed(jt, r, q.excluded)) {
      raise(ErrorCode::kAnnotationPlacement,
            "excluding '" + r + "' would break the hypertree; only leaf bags or bags whose other relations "
            "cover all neighbor intersections may lose a relation");
    }
    out.placements.push_back({BagAnnotation::exclude(r), *jt.bag_of(r)});
  }
  for (const auto& [r, v] : q.updates) out.placements.push_back({BagAnnotation::update(r, v), *jt.bag_of(r)});

  auto pick = [&](const std::vector<BagId>& cands, bool farthest) {
    BagId best = cands.front();
    std::size_t best_d = jt.distance(ref, best);
    for (BagId c : cands) {
      std::size_t d = jt.distance(ref, c);
      if (farthest ? d > best_d : d < best_d) {
        best = c;
        best_d = d;
      }
    }
    return best;
  };

  for (const auto& a : q.group_by) {
    out.placements.push_back({BagAnnotation::group_by(a), pick(attribute_candidates(jt, a, q.excluded), true)});
  }
  for (const auto& p : q.predicates) {
    auto cands = selection_candidates(jt, p.attributes(), q.excluded);
    if (cands.empty()) {
      raise(ErrorCode::kUnsupportedPredicate,
            "predicate '" + p.canonical() + "' references attributes that no single active relation holds");
    }
    out.placements.push_back(
        {BagAnnotation::select(p), pick(cands, options.selection == SelectionPlacement::kPushDown)});
  }
  return out;
}

}  // namespace cjt
