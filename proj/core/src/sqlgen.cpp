#include "cjt/sqlgen.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <map>

#include "cjt/error.hpp"

namespace cjt {

namespace {

std::string ident(const std::string& name) {
  const bool plain = !name.empty() && (std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_') &&
                     std::all_of(name.begin(), name.end(), [](char c) {
                       return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
                     });
  if (plain) return name;
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string quote(const std::string& text) {
  std::string out = "'";
  for (char c : text) {
    if (c == '\'') out += '\'';
    out += c;
  }
  return out + "'";
}

std::string number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool is_number(const std::string& text) {
  double v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  return ec == std::errc() && p == text.data() + text.size() && !text.empty();
}

std::string literal(const Dictionary& dict, const std::string& attr, const std::string& text) {
  if (dict.has(attr) && dict.type(attr) == AttrType::kNumeric && is_number(text)) return text;
  return quote(text);
}

struct Input {
  std::string table;
  std::vector<std::string> attrs;
};

struct Query {
  std::vector<Input> inputs;
  std::vector<Predicate> predicates;
  std::vector<std::string> output;
};

std::string product(const std::vector<std::string>& factors) {
  if (factors.empty()) return "1";
  std::string out;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (i) out += " * ";
    out += factors[i];
  }
  return out;
}

std::string sum_terms(const std::vector<std::string>& terms) {
  if (terms.empty()) return "0";
  std::string out;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i) out += " + ";
    out += terms[i];
  }
  return out;
}

std::string col(std::size_t input, const std::string& c) { return "t" + std::to_string(input) + "." + c; }

std::string gram_col(std::size_t i, std::size_t j) {
  if (i > j) std::swap(i, j);
  return "g_" + std::to_string(i) + "_" + std::to_string(j);
}

/// ⊗ of every input's annotation, aggregated with ⊕; one (expression, alias)
/// pair per annotation column.
std::vector<std::pair<std::string, std::string>> aggregates(const SemiringSpec& spec, std::size_t n) {
  std::vector<std::pair<std::string, std::string>> out;
  auto all = [&](const std::string& c) {
    std::vector<std::string> f;
    for (std::size_t i = 0; i < n; ++i) f.push_back(col(i, c));
    return f;
  };
  // Product of the counts of every input outside `skip`.
  auto counts_except = [&](std::vector<std::size_t> skip, const std::string& c) {
    std::vector<std::string> f;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::find(skip.begin(), skip.end(), i) == skip.end()) f.push_back(col(i, c));
    }
    return f;
  };
  switch (spec.kind) {
    case SemiringKind::kNaturalCount:
      out.emplace_back("SUM(" + product(all("cnt")) + ")", "cnt");
      break;
    case SemiringKind::kRealSum:
      out.emplace_back("SUM(" + product(all("val")) + ")", "val");
      break;
    case SemiringKind::kCountSumPair: {
      out.emplace_back("SUM(" + product(all("cnt")) + ")", "cnt");
      std::vector<std::string> terms;
      for (std::size_t i = 0; i < n; ++i) {
        auto f = counts_except({i}, "cnt");
        f.insert(f.begin(), col(i, "val"));
        terms.push_back(product(f));
      }
      out.emplace_back("SUM(" + sum_terms(terms) + ")", "val");
      break;
    }
    case SemiringKind::kTropicalMin:
    case SemiringKind::kTropicalMax: {
      const char* fn = spec.kind == SemiringKind::kTropicalMin ? "MIN" : "MAX";
      out.emplace_back(std::string(fn) + "(" + sum_terms(all("val")) + ")", "val");
      break;
    }
    case SemiringKind::kGram: {
      const std::size_t d = spec.gram_dim();
      out.emplace_back("SUM(" + product(all(gram_col(0, 0))) + ")", gram_col(0, 0));
      for (std::size_t a = 1; a < d; ++a) {
        std::vector<std::string> terms;
        for (std::size_t i = 0; i < n; ++i) {
          auto f = counts_except({i}, gram_col(0, 0));
          f.insert(f.begin(), col(i, gram_col(0, a)));
          terms.push_back(product(f));
        }
        out.emplace_back("SUM(" + sum_terms(terms) + ")", gram_col(0, a));
      }
      for (std::size_t a = 1; a < d; ++a) {
        for (std::size_t b = a; b < d; ++b) {
          std::vector<std::string> terms;
          for (std::size_t i = 0; i < n; ++i) {
            auto f = counts_except({i}, gram_col(0, 0));
            f.insert(f.begin(), col(i, gram_col(a, b)));
            terms.push_back(product(f));
          }
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
              if (i == j) continue;
              auto f = counts_except({i, j}, gram_col(0, 0));
              f.insert(f.begin(), col(j, gram_col(0, b)));
              f.insert(f.begin(), col(i, gram_col(0, a)));
              terms.push_back(product(f));
            }
          }
          out.emplace_back("SUM(" + sum_terms(terms) + ")", gram_col(a, b));
        }
      }
      break;
    }
  }
  return out;
}

std::vector<std::string> unit_values(const SemiringSpec& spec) {
  std::vector<std::string> out;
  for (const auto& c : annotation_columns(spec)) {
    const bool one = c == "cnt" || c == "g_0_0" || (c == "val" && spec.kind == SemiringKind::kRealSum);
    out.push_back(std::string(one ? "1" : "0") + " AS " + c);
  }
  return out;
}

std::string render(const SemiringSpec& spec, const Dictionary& dict, const Query& q) {
  if (q.inputs.empty()) {
    auto units = unit_values(spec);
    std::string s = "SELECT ";
    for (std::size_t i = 0; i < units.size(); ++i) s += (i ? ", " : "") + units[i];
    return s;
  }
  std::map<std::string, std::size_t> owner;
  std::vector<std::string> conds;
  for (std::size_t i = 0; i < q.inputs.size(); ++i) {
    for (const auto& a : q.inputs[i].attrs) {
      auto [it, inserted] = owner.emplace(a, i);
      if (!inserted) conds.push_back(col(it->second, ident(a)) + " = " + col(i, ident(a)));
    }
  }
  auto ref = [&](const std::string& a) {
    auto it = owner.find(a);
    if (it == owner.end()) raise(ErrorCode::kInternal, "attribute '" + a + "' has no SQL input");
    return col(it->second, ident(a));
  };
  for (const auto& p : q.predicates) {
    for (const auto& atom : p.atoms) {
      std::string c = ref(atom.attr);
      if (atom.op == CompareOp::kIn) {
        c += " IN (";
        for (std::size_t i = 0; i < atom.literals.size(); ++i) {
          c += (i ? ", " : "") + literal(dict, atom.attr, atom.literals[i]);
        }
        c += ")";
      } else {
        const std::string op = atom.op == CompareOp::kNe ? "<>" : std::string(to_string(atom.op));
        c += " " + op + " " + literal(dict, atom.attr, atom.literals.front());
      }
      conds.push_back(std::move(c));
    }
  }

  std::string s = "SELECT ";
  bool first = true;
  for (const auto& a : q.output) {
    s += (first ? "" : ", ") + ref(a) + " AS " + ident(a);
    first = false;
  }
  for (const auto& [expr, alias] : aggregates(spec, q.inputs.size())) {
    s += (first ? "" : ", ") + expr + " AS " + alias;
    first = false;
  }
  s += "\nFROM ";
  for (std::size_t i = 0; i < q.inputs.size(); ++i) {
    s += (i ? ", " : "") + q.inputs[i].table + " AS t" + std::to_string(i);
  }
  if (!conds.empty()) {
    s += "\nWHERE ";
    for (std::size_t i = 0; i < conds.size(); ++i) s += (i ? " AND " : "") + conds[i];
  }
  if (!q.output.empty()) {
    s += "\nGROUP BY ";
    for (std::size_t i = 0; i < q.output.size(); ++i) s += (i ? ", " : "") + ref(q.output[i]);
  }
  return s;
}

bool identity_rec(const AnnotatedTree& tree, DirectedEdge e, std::map<DirectedEdge, bool>& memo) {
  if (auto it = memo.find(e); it != memo.end()) return it->second;
  bool id = tree.active(e.from).empty();
  for (BagId n : tree.jt().neighbors(e.from)) {
    if (!id) break;
    if (n != e.to) id = identity_rec(tree, {n, e.from}, memo);
  }
  memo[e] = id;
  return id;
}

/// Inputs of a bag: its active relations, then non-identity incoming
/// messages except the one from `skip`.
Query bag_query(const AnnotatedTree& tree, BagId bag, std::optional<BagId> skip, const SqlNaming& naming) {
  Query q;
  for (const auto& r : tree.active(bag)) {
    q.inputs.push_back({relation_table(tree.graph(), r.name, r.version), r.data->attrs()});
  }
  for (BagId n : tree.jt().neighbors(bag)) {
    if (skip && n == *skip) continue;
    const DirectedEdge in{n, bag};
    if (is_identity_message(tree, in)) continue;
    q.inputs.push_back({message_table(tree, in, naming), tree.kept(in)});
  }
  q.predicates = tree.selections(bag);
  return q;
}

}  // namespace

std::vector<std::string> annotation_columns(const SemiringSpec& spec) {
  switch (spec.kind) {
    case SemiringKind::kNaturalCount: return {"cnt"};
    case SemiringKind::kRealSum:
    case SemiringKind::kTropicalMin:
    case SemiringKind::kTropicalMax: return {"val"};
    case SemiringKind::kCountSumPair: return {"cnt", "val"};
    case SemiringKind::kGram: {
      std::vector<std::string> out;
      for (std::size_t i = 0; i < spec.gram_dim(); ++i) {
        for (std::size_t j = i; j < spec.gram_dim(); ++j) out.push_back(gram_col(i, j));
      }
      return out;
    }
  }
  raise(ErrorCode::kUnsupportedSemiring, "no SQL columns for this semiring");
}

std::string relation_table(const JoinGraph& g, const std::string& relation, const std::string& version) {
  const auto& entry = g.relation(relation);
  if (version == entry.current_version) return ident(relation);
  return ident(relation + "__" + version);
}

std::string message_table(const AnnotatedTree& tree, DirectedEdge e, const SqlNaming& naming) {
  return naming.prefix + std::to_string(e.from) + "_" + std::to_string(e.to) + "_" + tree.fingerprint(e);
}

bool is_identity_message(const AnnotatedTree& tree, DirectedEdge e) {
  std::map<DirectedEdge, bool> memo;
  return identity_rec(tree, e, memo);
}

std::string emit_message_sql(const AnnotatedTree& tree, DirectedEdge e, const SqlNaming& naming) {
  if (is_identity_message(tree, e)) return {};
  Query q = bag_query(tree, e.from, e.to, naming);
  q.output = tree.kept(e);
  return "CREATE TABLE " + message_table(tree, e, naming) + " AS\n" +
         render(tree.spec(), tree.graph().dictionary(), q) + ";";
}

std::string emit_absorption_sql(const AnnotatedTree& tree, BagId root, const SqlNaming& naming) {
  if (!tree.feasible_root(root)) raise(ErrorCode::kInvalidArgument, "root cannot produce the query output");
  Query q = bag_query(tree, root, std::nullopt, naming);
  q.output = tree.annotations().output;
  return render(tree.spec(), tree.graph().dictionary(), q) + ";";
}

std::vector<std::string> emit_plan_sql(const AnnotatedTree& tree, const SteinerPlan& plan, const SqlNaming& naming) {
  std::vector<std::string> out;
  for (const auto& e : plan.schedule) {
    auto s = emit_message_sql(tree, e, naming);
    if (!s.empty()) out.push_back(std::move(s));
  }
  out.push_back(emit_absorption_sql(tree, plan.root, naming));
  return out;
}

std::string emit_naive_sql(const JoinGraph& g, const QuerySpec& spec) {
  Query q;
  for (const auto& e : g.relations()) {
    if (std::find(spec.excluded.begin(), spec.excluded.end(), e.name) != spec.excluded.end()) continue;
    auto it = spec.updates.find(e.name);
    const std::string& version = it == spec.updates.end() ? e.current_version : it->second;
    q.inputs.push_back({relation_table(g, e.name, version), e.at(version).attrs()});
  }
  q.predicates = spec.predicates;
  q.output = sorted_attrs(spec.group_by);
  return render(g.spec(), g.dictionary(), q) + ";";
}

std::string emit_table_sql(const std::string& table, const AnnotatedRelation& r, const Dictionary& dict) {
  const auto cols = annotation_columns(r.spec());
  std::string s = "CREATE TABLE " + table + " (";
  bool first = true;
  for (const auto& a : r.attrs()) {
    s += (first ? "" : ", ") + ident(a) + (dict.type(a) == AttrType::kNumeric ? " REAL" : " TEXT");
    first = false;
  }
  for (const auto& c : cols) {
    s += (first ? "" : ", ") + c + (c == "cnt" ? " INTEGER" : " REAL");
    first = false;
  }
  s += ");\n";
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r.annotation(i).is_infinite()) continue;
    s += "INSERT INTO " + table + " VALUES (";
    first = true;
    for (std::size_t c = 0; c < r.arity(); ++c) {
      const auto& a = r.attrs()[c];
      const std::string text = dict.decode(a, r.row(i)[c]);
      s += (first ? "" : ", ") + (dict.type(a) == AttrType::kNumeric ? text : quote(text));
      first = false;
    }
    const Annotation& ann = r.annotation(i);
    for (const auto& c : cols) {
      std::string v;
      if (c == "cnt") {
        v = std::to_string(ann.count_value());
      } else if (c == "val") {
        v = number(ann.real_value());
      } else {
        const auto u = c.find('_', 2);
        v = number(ann.gram_at(std::stoul(c.substr(2, u - 2)), std::stoul(c.substr(u + 1))));
      }
      s += (first ? "" : ", ") + v;
      first = false;
    }
    s += ");\n";
  }
  return s;
}

std::string emit_graph_tables_sql(const JoinGraph& g) {
  std::string out;
  for (const auto& e : g.relations()) {
    for (const auto& [version, rel] : e.versions) out += emit_table_sql(relation_table(g, e.name, version), *rel, g.dictionary());
  }
  return out;
}

std::string join_statements(const std::vector<std::string>& statements) {
  std::string out;
  for (std::size_t i = 0; i < statements.size(); ++i) {
    if (i) out += "\n\n";
    out += statements[i];
  }
  return out + "\n";
}

}  // namespace cjt
