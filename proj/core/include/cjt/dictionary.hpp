#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cjt {

/// Cell value. Categorical cells hold an interned id; numeric cells hold the
/// bit pattern of a double.
using Value = std::int64_t;

/// Returned by `Dictionary::lookup` for categorical literals never seen in data.
inline constexpr Value kUnknownValue = -1;

enum class AttrType { kCategorical, kNumeric };

std::string_view to_string(AttrType type);
AttrType attr_type_from_string(std::string_view name);

Value encode_numeric(double v);
double decode_numeric(Value v);

/// Attribute catalog shared by all relations of a join graph: declared types,
/// optional explicit domains, and the per-attribute interning tables.
class Dictionary {
 public:
  Dictionary() = default;
  Dictionary(const Dictionary& other);
  Dictionary& operator=(const Dictionary& other);

  /// Declares `name`. Redeclaring with the same type is a no-op (a domain may
  /// be added once); a different type raises kTypeMismatch.
  void declare(const std::string& name, AttrType type,
               std::optional<std::vector<std::string>> domain = std::nullopt);

  bool has(std::string_view name) const;
  AttrType type(std::string_view name) const;

  /// Value for ingestion; grows the domain unless it is explicit.
  Value intern(std::string_view name, std::string_view text);
  /// Value for query literals; unknown categorical text maps to kUnknownValue.
  Value lookup(std::string_view name, std::string_view text) const;
  std::string decode(std::string_view name, Value v) const;

  /// Explicit domain size if declared, otherwise the number of observed values.
  /// Numeric attributes report 0.
  std::size_t domain_size(std::string_view name) const;

  std::vector<std::string> attributes() const;

 private:
  struct Entry {
    AttrType type = AttrType::kCategorical;
    bool explicit_domain = false;
    std::vector<std::string> values;
    std::unordered_map<std::string, Value> ids;
  };

  const Entry& entry(std::string_view name) const;

  mutable std::shared_mutex mu_;
  std::map<std::string, Entry, std::less<>> entries_;
};

}  // namespace cjt
