#include "cjt/join_graph.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "cjt/error.hpp"

namespace cjt {

const AnnotatedRelation& RelationEntry::at(const std::string& version) const {
  auto it = versions.find(version);
  if (it == versions.end()) {
    raise(ErrorCode::kUnknownId, "relation '" + name + "' has no version '" + version + "'");
  }
  return *it->second;
}

JoinGraph::JoinGraph(std::string id, SemiringSpec spec, std::shared_ptr<Dictionary> dict)
    : id_(std::move(id)), spec_(std::move(spec)), dict_(dict ? std::move(dict) : std::make_shared<Dictionary>()) {}

void JoinGraph::add_relation(const std::string& name, AnnotatedRelation rel, const std::string& version) {
  if (has_relation(name)) raise(ErrorCode::kConflict, "relation '" + name + "' already exists");
  if (rel.spec().kind != spec_.kind) {
    raise(ErrorCode::kKindMismatch, "relation '" + name + "' is not annotated with " + spec_.canonical());
  }
  RelationEntry e;
  e.name = name;
  e.attrs = rel.attrs();
  e.current_version = version;
  relations_.push_back(std::move(e));
  add_version(name, version, std::move(rel));
}

void JoinGraph::add_version(const std::string& name, const std::string& version, AnnotatedRelation rel) {
  for (auto& e : relations_) {
    if (e.name != name) continue;
    if (rel.attrs() != e.attrs) {
      raise(ErrorCode::kInvalidArgument, "version '" + version + "' of '" + name + "' changes the schema");
    }
    for (std::size_t i = 0; i < rel.size(); ++i) {
      auto row = rel.row(i);
      for (std::size_t c = 0; c < rel.arity(); ++c) observed_[rel.attrs()[c]].insert(row[c]);
    }
    e.versions[version] = std::make_shared<const AnnotatedRelation>(std::move(rel));
    return;
  }
  raise(ErrorCode::kUnknownId, "unknown relation '" + name + "'");
}

const RelationEntry& JoinGraph::relation(const std::string& name) const {
  for (const auto& e : relations_) {
    if (e.name == name) return e;
  }
  raise(ErrorCode::kUnknownId, "unknown relation '" + name + "'");
}

bool JoinGraph::has_relation(const std::string& name) const {
  for (const auto& e : relations_) {
    if (e.name == name) return true;
  }
  return false;
}

std::vector<std::string> JoinGraph::attributes() const {
  std::vector<std::string> out;
  for (const auto& e : relations_) out = attr_union(out, e.attrs);
  return out;
}

bool JoinGraph::connected() const {
  if (relations_.empty()) return true;
  std::vector<bool> seen(relations_.size(), false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    std::size_t i = stack.back();
    stack.pop_back();
    for (std::size_t j = 0; j < relations_.size(); ++j) {
      if (!seen[j] && !attr_intersection(relations_[i].attrs, relations_[j].attrs).empty()) {
        seen[j] = true;
        stack.push_back(j);
      }
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

std::size_t JoinGraph::domain_size(const std::string& attr) const {
  auto it = observed_.find(attr);
  return it == observed_.end() ? 0 : it->second.size();
}

SemiringSpec semiring_spec_from_json(const nlohmann::json& j) {
  if (j.is_string()) return SemiringSpec{semiring_kind_from_string(j.get<std::string>()), {}};
  SemiringSpec s;
  s.kind = semiring_kind_from_string(j.value("kind", std::string("count")));
  if (j.contains("attrs")) s.lift_attrs = j.at("attrs").get<std::vector<std::string>>();
  if (j.contains("attr")) s.lift_attrs = {j.at("attr").get<std::string>()};
  const bool single = s.kind != SemiringKind::kNaturalCount && s.kind != SemiringKind::kGram;
  if (single && s.lift_attrs.size() != 1) {
    raise(ErrorCode::kInvalidArgument, std::string(to_string(s.kind)) + " semiring needs exactly one attribute");
  }
  if (s.kind == SemiringKind::kGram && s.lift_attrs.empty()) {
    raise(ErrorCode::kInvalidArgument, "gram semiring needs at least one variable");
  }
  if (s.kind == SemiringKind::kNaturalCount && !s.lift_attrs.empty()) {
    raise(ErrorCode::kInvalidArgument, "count semiring takes no attributes");
  }
  return s;
}

nlohmann::json to_json(const SemiringSpec& spec) {
  return {{"kind", std::string(to_string(spec.kind))}, {"attrs", spec.lift_attrs}};
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::kIo, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TableSchema schema_from_json(const nlohmann::json& j) {
  TableSchema s;
  for (const auto& c : j) {
    ColumnSpec col;
    col.name = c.at("name").get<std::string>();
    col.type = attr_type_from_string(c.value("type", std::string("categorical")));
    col.measure = c.value("measure", false);
    if (c.contains("domain")) col.domain = c.at("domain").get<std::vector<std::string>>();
    s.columns.push_back(std::move(col));
  }
  return s;
}

// Header-derived schema: lift attributes become numeric measures, the rest
// categorical keys.
TableSchema infer_schema(std::string_view text, const SemiringSpec& spec, char delim) {
  std::string_view header = text.substr(0, text.find('\n'));
  if (!header.empty() && header.back() == '\r') header.remove_suffix(1);
  TableSchema s;
  std::size_t pos = 0;
  while (pos <= header.size()) {
    std::size_t end = header.find(delim, pos);
    if (end == std::string_view::npos) end = header.size();
    ColumnSpec col;
    col.name = std::string(header.substr(pos, end - pos));
    bool lifted = std::find(spec.lift_attrs.begin(), spec.lift_attrs.end(), col.name) != spec.lift_attrs.end();
    col.type = lifted ? AttrType::kNumeric : AttrType::kCategorical;
    col.measure = lifted;
    s.columns.push_back(std::move(col));
    pos = end + 1;
  }
  return s;
}

AnnotatedRelation load_source(const nlohmann::json& src, const std::string& base_dir, const TableSchema* schema,
                              const SemiringSpec& spec, Dictionary& dict, char delim, const std::string& label) {
  std::string text;
  std::string origin;
  if (src.is_string()) {
    std::filesystem::path p(src.get<std::string>());
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    origin = p.string();
    text = read_file(origin);
  } else if (src.is_object() && src.contains("data")) {
    text = src.at("data").get<std::string>();
    origin = label;
  } else {
    raise(ErrorCode::kParse, "relation '" + label + "' needs a csv path or inline data");
  }
  CsvOptions opt;
  opt.delimiter = delim;
  TableSchema inferred;
  if (!schema) {
    inferred = infer_schema(text, spec, delim);
    schema = &inferred;
  }
  return parse_csv(text, *schema, spec, dict, opt, origin);
}

}  // namespace

std::shared_ptr<JoinGraph> join_graph_from_json(const nlohmann::json& doc, const std::string& base_dir) {
  try {
    SemiringSpec spec = doc.contains("semiring") ? semiring_spec_from_json(doc.at("semiring")) : SemiringSpec::count();
    auto g = std::make_shared<JoinGraph>(doc.value("name", std::string("graph")), spec);
    if (!doc.contains("relations") || !doc.at("relations").is_array() || doc.at("relations").empty()) {
      raise(ErrorCode::kParse, "graph document needs a non-empty 'relations' array");
    }
    for (const auto& r : doc.at("relations")) {
      const std::string name = r.at("name").get<std::string>();
      std::string delim_text = r.value("delimiter", std::string(","));
      char delim = delim_text.empty() ? ',' : delim_text[0];
      TableSchema schema;
      const TableSchema* sp = nullptr;
      if (r.contains("schema")) {
        schema = schema_from_json(r.at("schema"));
        sp = &schema;
      }
      nlohmann::json src = r.contains("csv") ? r.at("csv") : nlohmann::json(nlohmann::json::object());
      if (r.contains("data")) src = nlohmann::json{{"data", r.at("data")}};
      g->add_relation(name, load_source(src, base_dir, sp, spec, g->dictionary(), delim, name),
                      r.value("version", std::string("v1")));
      if (r.contains("versions")) {
        for (const auto& [ver, vsrc] : r.at("versions").items()) {
          g->add_version(name, ver, load_source(vsrc, base_dir, sp, spec, g->dictionary(), delim, name + "@" + ver));
        }
      }
    }
    if (doc.contains("bags")) {
      std::vector<BagLayout> bags;
      for (const auto& b : doc.at("bags")) {
        BagLayout bl;
        bl.attrs = b.value("attrs", std::vector<std::string>{});
        bl.relations = b.value("relations", std::vector<std::string>{});
        bags.push_back(std::move(bl));
      }
      g->bags = std::move(bags);
      for (const auto& e : doc.value("edges", nlohmann::json::array())) {
        g->edges.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
      }
    }
    for (const auto& e : doc.value("empty_bags", nlohmann::json::array())) {
      EmptyBagLayout eb;
      eb.attrs = e.at("attrs").get<std::vector<std::string>>();
      for (const auto& n : e.at("neighbors")) eb.neighbors.push_back(n.is_string() ? n.get<std::string>() : n.dump());
      g->empty_bags.push_back(std::move(eb));
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::kParse, std::string("malformed graph document: ") + e.what());
  }
}

std::shared_ptr<JoinGraph> load_join_graph(const std::string& path) {
  std::string text = read_file(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::kParse, path + ": " + e.what());
  }
  return join_graph_from_json(doc, std::filesystem::path(path).parent_path().string());
}

}  // namespace cjt
