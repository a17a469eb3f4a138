#include "cjt/predicate.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>

#include "cjt/error.hpp"

namespace cjt {

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::kEq: return "=";
    case CompareOp::kNe: return "<>";
    case CompareOp::kLt: return "<";
    case CompareOp::kLe: return "<=";
    case CompareOp::kGt: return ">";
    case CompareOp::kGe: return ">=";
    case CompareOp::kIn: return "IN";
  }
  return "?";
}

CompareOp compare_op_from_string(std::string_view text) {
  if (text == "=" || text == "==") return CompareOp::kEq;
  if (text == "<>" || text == "!=") return CompareOp::kNe;
  if (text == "<") return CompareOp::kLt;
  if (text == "<=") return CompareOp::kLe;
  if (text == ">") return CompareOp::kGt;
  if (text == ">=") return CompareOp::kGe;
  if (text == "IN" || text == "in") return CompareOp::kIn;
  raise(ErrorCode::kParse, "unknown comparison operator '" + std::string(text) + "'");
}

Predicate Predicate::eq(std::string attr, std::string literal) {
  return {{Atom{std::move(attr), CompareOp::kEq, {std::move(literal)}}}};
}

Predicate Predicate::in(std::string attr, std::vector<std::string> literals) {
  return {{Atom{std::move(attr), CompareOp::kIn, std::move(literals)}}};
}

Predicate Predicate::cmp(std::string attr, CompareOp op, std::string literal) {
  return {{Atom{std::move(attr), op, {std::move(literal)}}}};
}

std::vector<std::string> Predicate::attributes() const {
  std::vector<std::string> out;
  for (const auto& a : atoms) out.push_back(a.attr);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string Predicate::canonical() const {
  std::vector<std::string> parts;
  for (const auto& a : atoms) {
    std::vector<std::string> lits = a.literals;
    if (a.op == CompareOp::kIn) {
      std::sort(lits.begin(), lits.end());
      lits.erase(std::unique(lits.begin(), lits.end()), lits.end());
    }
    std::string s = a.attr;
    s += ' ';
    s += to_string(a.op);
    s += ' ';
    for (std::size_t i = 0; i < lits.size(); ++i) {
      if (i) s += '|';
      s += lits[i];
    }
    parts.push_back(std::move(s));
  }
  std::sort(parts.begin(), parts.end());
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += " AND ";
    out += parts[i];
  }
  return out;
}

Predicate Predicate::conjoin(const Predicate& other) const {
  Predicate out = *this;
  out.atoms.insert(out.atoms.end(), other.atoms.begin(), other.atoms.end());
  return out;
}

void to_json(nlohmann::json& j, const Predicate& p) {
  j = nlohmann::json::array();
  for (const auto& a : p.atoms) {
    nlohmann::json atom{{"attr", a.attr}, {"op", std::string(to_string(a.op))}};
    if (a.op == CompareOp::kIn) {
      atom["values"] = a.literals;
    } else {
      atom["value"] = a.literals.empty() ? std::string() : a.literals.front();
    }
    j.push_back(std::move(atom));
  }
}

namespace {

std::string literal_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return v.dump();
  raise(ErrorCode::kParse, "predicate literal must be a string or number");
}

Atom atom_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("attr")) raise(ErrorCode::kParse, "predicate atom needs 'attr'");
  Atom a;
  a.attr = j.at("attr").get<std::string>();
  a.op = compare_op_from_string(j.value("op", std::string("=")));
  if (j.contains("values")) {
    for (const auto& v : j.at("values")) a.literals.push_back(literal_text(v));
    if (a.op == CompareOp::kEq) a.op = CompareOp::kIn;
  } else if (j.contains("value")) {
    a.literals.push_back(literal_text(j.at("value")));
  }
  if (a.literals.empty()) raise(ErrorCode::kParse, "predicate on '" + a.attr + "' has no literal");
  if (a.op != CompareOp::kIn && a.literals.size() != 1) {
    raise(ErrorCode::kParse, "comparison on '" + a.attr + "' takes exactly one literal");
  }
  return a;
}

}  // namespace

void from_json(const nlohmann::json& j, Predicate& p) {
  p.atoms.clear();
  if (j.is_array()) {
    for (const auto& a : j) p.atoms.push_back(atom_from_json(a));
  } else {
    p.atoms.push_back(atom_from_json(j));
  }
}

CompiledPredicate::CompiledPredicate(const Predicate& pred, const std::vector<std::string>& attrs,
                                     const Dictionary& dict) {
  for (const auto& a : pred.atoms) {
    auto it = std::find(attrs.begin(), attrs.end(), a.attr);
    if (it == attrs.end()) {
      raise(ErrorCode::kUnknownAttribute, "predicate attribute '" + a.attr + "' not in relation schema");
    }
    Term t;
    t.column = static_cast<std::size_t>(it - attrs.begin());
    t.op = a.op;
    t.numeric = dict.type(a.attr) == AttrType::kNumeric;
    bool ordering = a.op == CompareOp::kLt || a.op == CompareOp::kLe || a.op == CompareOp::kGt ||
                    a.op == CompareOp::kGe;
    if (ordering && !t.numeric) {
      raise(ErrorCode::kTypeMismatch, "ordering comparison on categorical attribute '" + a.attr + "'");
    }
    for (const auto& lit : a.literals) {
      if (t.numeric) {
        t.numbers.push_back(decode_numeric(dict.lookup(a.attr, lit)));
      } else {
        t.ids.push_back(dict.lookup(a.attr, lit));
      }
    }
    terms_.push_back(std::move(t));
  }
}

bool CompiledPredicate::matches(const Value* row) const {
  for (const auto& t : terms_) {
    const Value v = row[t.column];
    bool ok = false;
    if (t.numeric) {
      const double x = decode_numeric(v);
      switch (t.op) {
        case CompareOp::kEq: ok = x == t.numbers[0]; break;
        case CompareOp::kNe: ok = x != t.numbers[0]; break;
        case CompareOp::kLt: ok = x < t.numbers[0]; break;
        case CompareOp::kLe: ok = x <= t.numbers[0]; break;
        case CompareOp::kGt: ok = x > t.numbers[0]; break;
        case CompareOp::kGe: ok = x >= t.numbers[0]; break;
        case CompareOp::kIn: ok = std::find(t.numbers.begin(), t.numbers.end(), x) != t.numbers.end(); break;
      }
    } else {
      switch (t.op) {
        case CompareOp::kEq: ok = v == t.ids[0]; break;
        case CompareOp::kNe: ok = v != t.ids[0]; break;
        case CompareOp::kIn: ok = std::find(t.ids.begin(), t.ids.end(), v) != t.ids.end(); break;
        default: break;
      }
    }
    if (!ok) return false;
  }
  return true;
}

}  // namespace cjt
