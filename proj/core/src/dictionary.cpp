#include "cjt/dictionary.hpp"

#include <bit>
#include <charconv>
#include <mutex>
#include <sstream>

#include "cjt/error.hpp"

namespace cjt {

std::string_view to_string(AttrType type) {
  return type == AttrType::kNumeric ? "numeric" : "categorical";
}

AttrType attr_type_from_string(std::string_view name) {
  if (name == "categorical" || name == "string" || name == "cat") return AttrType::kCategorical;
  if (name == "numeric" || name == "number" || name == "double" || name == "int") return AttrType::kNumeric;
  raise(ErrorCode::kParse, "unknown attribute type '" + std::string(name) + "'");
}

Value encode_numeric(double v) {
  if (v == 0.0) v = 0.0;
  return std::bit_cast<Value>(v);
}

double decode_numeric(Value v) { return std::bit_cast<double>(v); }

namespace {

double parse_double(std::string_view attr, std::string_view text) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    raise(ErrorCode::kNonNumeric,
          "attribute '" + std::string(attr) + "' expects a number, got '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace

Dictionary::Dictionary(const Dictionary& other) {
  std::shared_lock lock(other.mu_);
  entries_ = other.entries_;
}

Dictionary& Dictionary::operator=(const Dictionary& other) {
  if (this == &other) return *this;
  std::map<std::string, Entry, std::less<>> copy;
  {
    std::shared_lock lock(other.mu_);
    copy = other.entries_;
  }
  std::unique_lock lock(mu_);
  entries_ = std::move(copy);
  return *this;
}

void Dictionary::declare(const std::string& name, AttrType type,
                         std::optional<std::vector<std::string>> domain) {
  std::unique_lock lock(mu_);
  auto [it, inserted] = entries_.try_emplace(name);
  Entry& e = it->second;
  if (inserted) {
    e.type = type;
  } else if (e.type != type) {
    raise(ErrorCode::kTypeMismatch, "attribute '" + name + "' declared as both " +
                                        std::string(to_string(e.type)) + " and " +
                                        std::string(to_string(type)));
  }
  if (domain && type == AttrType::kCategorical && !e.explicit_domain) {
    for (auto& v : *domain) {
      if (e.ids.try_emplace(v, static_cast<Value>(e.values.size())).second) e.values.push_back(v);
    }
    e.explicit_domain = true;
  }
}

const Dictionary::Entry& Dictionary::entry(std::string_view name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) raise(ErrorCode::kUnknownAttribute, "unknown attribute '" + std::string(name) + "'");
  return it->second;
}

bool Dictionary::has(std::string_view name) const {
  std::shared_lock lock(mu_);
  return entries_.find(name) != entries_.end();
}

AttrType Dictionary::type(std::string_view name) const {
  std::shared_lock lock(mu_);
  return entry(name).type;
}

Value Dictionary::intern(std::string_view name, std::string_view text) {
  {
    std::shared_lock lock(mu_);
    const Entry& e = entry(name);
    if (e.type == AttrType::kNumeric) return encode_numeric(parse_double(name, text));
    auto it = e.ids.find(std::string(text));
    if (it != e.ids.end()) return it->second;
    if (e.explicit_domain) {
      raise(ErrorCode::kDomainViolation,
            "value '" + std::string(text) + "' outside the domain of '" + std::string(name) + "'");
    }
  }
  std::unique_lock lock(mu_);
  Entry& e = entries_.find(name)->second;
  auto [it, inserted] = e.ids.try_emplace(std::string(text), static_cast<Value>(e.values.size()));
  if (inserted) e.values.emplace_back(text);
  return it->second;
}

Value Dictionary::lookup(std::string_view name, std::string_view text) const {
  std::shared_lock lock(mu_);
  const Entry& e = entry(name);
  if (e.type == AttrType::kNumeric) return encode_numeric(parse_double(name, text));
  auto it = e.ids.find(std::string(text));
  return it == e.ids.end() ? kUnknownValue : it->second;
}

std::string Dictionary::decode(std::string_view name, Value v) const {
  std::shared_lock lock(mu_);
  const Entry& e = entry(name);
  if (e.type == AttrType::kNumeric) {
    std::ostringstream os;
    os.precision(17);
    os << decode_numeric(v);
    return os.str();
  }
  if (v < 0 || static_cast<std::size_t>(v) >= e.values.size()) {
    raise(ErrorCode::kDomainViolation, "no value with id " + std::to_string(v) + " for '" + std::string(name) + "'");
  }
  return e.values[static_cast<std::size_t>(v)];
}

std::size_t Dictionary::domain_size(std::string_view name) const {
  std::shared_lock lock(mu_);
  const Entry& e = entry(name);
  return e.type == AttrType::kNumeric ? 0 : e.values.size();
}

std::vector<std::string> Dictionary::attributes() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  for (const auto& [k, _] : entries_) out.push_back(k);
  return out;
}

}  // namespace cjt
