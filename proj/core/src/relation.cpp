#include "cjt/relation.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "cjt/error.hpp"

namespace cjt {

namespace {

std::size_t mix(std::size_t h, std::uint64_t v) {
  v *= 0x9E3779B97F4A7C15ULL;
  v ^= v >> 32;
  return (h ^ v) * 0x100000001B3ULL + 0x7F4A7C15;
}

std::size_t hash_values(const Value* row, std::size_t n) {
  std::size_t h = 0xCBF29CE484222325ULL;
  for (std::size_t i = 0; i < n; ++i) h = mix(h, static_cast<std::uint64_t>(row[i]));
  return h;
}

void require_compatible(const SemiringSpec& a, const SemiringSpec& b) {
  if (a.kind != b.kind || (a.kind == SemiringKind::kGram && a.gram_dim() != b.gram_dim())) {
    raise(ErrorCode::kKindMismatch, "cannot combine relations annotated with " + a.canonical() + " and " +
                                        b.canonical());
  }
}

// Sorts rows lexicographically and drops zero annotations.
void canonicalize(std::size_t arity, std::vector<Value>& cells, std::vector<Annotation>& anns) {
  const std::size_t n = anns.size();
  std::vector<std::uint32_t> order;
  order.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!anns[i].is_zero()) order.push_back(static_cast<std::uint32_t>(i));
  }
  if (arity > 0) {
    const Value* base = cells.data();
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      return std::lexicographical_compare(base + a * arity, base + (a + 1) * arity, base + b * arity,
                                          base + (b + 1) * arity);
    });
  }
  bool identity = order.size() == n;
  for (std::size_t i = 0; identity && i < n; ++i) identity = order[i] == i;
  if (identity) return;
  std::vector<Value> out_cells;
  out_cells.reserve(order.size() * arity);
  std::vector<Annotation> out_anns;
  out_anns.reserve(order.size());
  for (auto i : order) {
    out_cells.insert(out_cells.end(), cells.begin() + static_cast<std::ptrdiff_t>(i * arity),
                     cells.begin() + static_cast<std::ptrdiff_t>((i + 1) * arity));
    out_anns.push_back(std::move(anns[i]));
  }
  cells = std::move(out_cells);
  anns = std::move(out_anns);
}

}  // namespace

std::vector<std::string> sorted_attrs(std::vector<std::string> attrs) {
  std::sort(attrs.begin(), attrs.end());
  attrs.erase(std::unique(attrs.begin(), attrs.end()), attrs.end());
  return attrs;
}

std::vector<std::string> attr_union(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::string> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return sorted_attrs(std::move(out));
}

std::vector<std::string> attr_intersection(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::string> out;
  for (const auto& x : a) {
    if (std::find(b.begin(), b.end(), x) != b.end()) out.push_back(x);
  }
  return sorted_attrs(std::move(out));
}

std::vector<std::string> attr_difference(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::string> out;
  for (const auto& x : a) {
    if (std::find(b.begin(), b.end(), x) == b.end()) out.push_back(x);
  }
  return sorted_attrs(std::move(out));
}

AnnotatedRelation::AnnotatedRelation(std::vector<std::string> attrs, SemiringSpec spec)
    : attrs_(std::move(attrs)), spec_(std::move(spec)) {
  if (!std::is_sorted(attrs_.begin(), attrs_.end()) ||
      std::adjacent_find(attrs_.begin(), attrs_.end()) != attrs_.end()) {
    raise(ErrorCode::kInvalidArgument, "relation attributes must be sorted and unique");
  }
}

AnnotatedRelation AnnotatedRelation::unit(const SemiringSpec& spec) {
  AnnotatedRelation r({}, spec);
  r.annotations_.push_back(Annotation::one(spec));
  return r;
}

bool AnnotatedRelation::has_attr(std::string_view name) const { return column(name).has_value(); }

std::optional<std::size_t> AnnotatedRelation::column(std::string_view name) const {
  auto it = std::lower_bound(attrs_.begin(), attrs_.end(), name,
                             [](const std::string& a, std::string_view b) { return a < b; });
  if (it == attrs_.end() || *it != name) return std::nullopt;
  return static_cast<std::size_t>(it - attrs_.begin());
}

std::optional<Annotation> AnnotatedRelation::find(std::span<const Value> tuple) const {
  if (tuple.size() != arity()) raise(ErrorCode::kInvalidArgument, "tuple arity mismatch");
  std::size_t lo = 0;
  std::size_t hi = size();
  while (lo < hi) {
    std::size_t mid = (lo + hi) / 2;
    auto r = row(mid);
    if (std::lexicographical_compare(r.begin(), r.end(), tuple.begin(), tuple.end())) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  if (lo < size() && std::equal(tuple.begin(), tuple.end(), row(lo).begin())) return annotations_[lo];
  return std::nullopt;
}

Annotation AnnotatedRelation::total() const {
  Annotation acc = Annotation::zero(spec_);
  for (const auto& a : annotations_) combine_into(acc, a);
  return acc;
}

std::string AnnotatedRelation::canonical_bytes() const {
  std::string out;
  out += spec_.canonical();
  out += '\n';
  for (const auto& a : attrs_) {
    out += a;
    out += '\x1f';
  }
  out += '\n';
  out.reserve(out.size() + cells_.size() * 8 + annotations_.size() * 16);
  for (std::size_t i = 0; i < size(); ++i) {
    for (Value v : row(i)) {
      char buf[8];
      std::memcpy(buf, &v, 8);
      out.append(buf, 8);
    }
    annotations_[i].append_canonical(out);
  }
  return out;
}

bool AnnotatedRelation::operator==(const AnnotatedRelation& other) const {
  return attrs_ == other.attrs_ && spec_.kind == other.spec_.kind && cells_ == other.cells_ &&
         annotations_ == other.annotations_;
}

RelationBuilder::RelationBuilder(std::vector<std::string> attrs, SemiringSpec spec)
    : attrs_(std::move(attrs)), spec_(std::move(spec)) {
  rehash(16);
}

void RelationBuilder::rehash(std::size_t capacity) {
  slots_.assign(capacity, 0);
  mask_ = capacity - 1;
  const std::size_t k = attrs_.size();
  for (std::size_t i = 0; i < annotations_.size(); ++i) {
    std::size_t h = hash_values(cells_.data() + i * k, k) & mask_;
    while (slots_[h] != 0) h = (h + 1) & mask_;
    slots_[h] = static_cast<std::uint32_t>(i + 1);
  }
}

void RelationBuilder::add(std::span<const Value> tuple, const Annotation& a) {
  const std::size_t k = attrs_.size();
  if (tuple.size() != k) raise(ErrorCode::kInvalidArgument, "tuple arity mismatch");
  std::size_t h = hash_values(tuple.data(), k) & mask_;
  while (slots_[h] != 0) {
    std::size_t idx = slots_[h] - 1;
    if (std::equal(tuple.begin(), tuple.end(), cells_.begin() + static_cast<std::ptrdiff_t>(idx * k))) {
      combine_into(annotations_[idx], a);
      return;
    }
    h = (h + 1) & mask_;
  }
  cells_.insert(cells_.end(), tuple.begin(), tuple.end());
  annotations_.push_back(a);
  slots_[h] = static_cast<std::uint32_t>(annotations_.size());
  if (annotations_.size() * 2 > slots_.size()) rehash(slots_.size() * 2);
}

AnnotatedRelation RelationBuilder::build() && {
  AnnotatedRelation r(std::move(attrs_), std::move(spec_));
  canonicalize(r.attrs_.size(), cells_, annotations_);
  r.cells_ = std::move(cells_);
  r.annotations_ = std::move(annotations_);
  return r;
}

AnnotatedRelation join(const AnnotatedRelation& r, const AnnotatedRelation& s) {
  require_compatible(r.spec(), s.spec());
  const bool r_builds = r.size() <= s.size();
  const AnnotatedRelation& build = r_builds ? r : s;
  const AnnotatedRelation& probe = r_builds ? s : r;

  std::vector<std::string> out_attrs = attr_union(r.attrs(), s.attrs());
  std::vector<std::string> shared = attr_intersection(r.attrs(), s.attrs());
  std::vector<std::size_t> build_key;
  std::vector<std::size_t> probe_key;
  for (const auto& a : shared) {
    build_key.push_back(*build.column(a));
    probe_key.push_back(*probe.column(a));
  }
  // Each output column is read from the probe side when present there.
  struct Src {
    bool from_probe;
    std::size_t col;
  };
  std::vector<Src> src;
  for (const auto& a : out_attrs) {
    if (auto c = probe.column(a)) {
      src.push_back({true, *c});
    } else {
      src.push_back({false, *build.column(a)});
    }
  }

  const std::size_t kk = shared.size();
  std::size_t buckets = 1;
  while (buckets < build.size() * 2) buckets <<= 1;
  std::vector<std::int64_t> head(buckets, -1);
  std::vector<std::int64_t> next(build.size(), -1);
  std::vector<Value> key(kk);
  auto key_of = [&](const AnnotatedRelation& rel, std::size_t i, const std::vector<std::size_t>& cols) {
    auto row = rel.row(i);
    for (std::size_t j = 0; j < kk; ++j) key[j] = row[cols[j]];
    return hash_values(key.data(), kk) & (buckets - 1);
  };
  for (std::size_t i = 0; i < build.size(); ++i) {
    std::size_t b = key_of(build, i, build_key);
    next[i] = head[b];
    head[b] = static_cast<std::int64_t>(i);
  }

  std::vector<Value> cells;
  std::vector<Annotation> anns;
  for (std::size_t p = 0; p < probe.size(); ++p) {
    std::size_t b = key_of(probe, p, probe_key);
    auto prow = probe.row(p);
    for (std::int64_t i = head[b]; i >= 0; i = next[static_cast<std::size_t>(i)]) {
      auto brow = build.row(static_cast<std::size_t>(i));
      bool match = true;
      for (std::size_t j = 0; j < kk && match; ++j) match = brow[build_key[j]] == prow[probe_key[j]];
      if (!match) continue;
      for (const auto& sc : src) cells.push_back(sc.from_probe ? prow[sc.col] : brow[sc.col]);
      anns.push_back(r_builds ? multiply(build.annotation(static_cast<std::size_t>(i)), probe.annotation(p))
                              : multiply(probe.annotation(p), build.annotation(static_cast<std::size_t>(i))));
    }
  }
  RelationBuilder out(out_attrs, r.spec());
  // Join output is duplicate-free; reuse the builder only for canonical order.
  for (std::size_t i = 0; i < anns.size(); ++i) {
    out.add(std::span<const Value>(cells.data() + i * out_attrs.size(), out_attrs.size()), anns[i]);
  }
  return std::move(out).build();
}

AnnotatedRelation marginalize(const AnnotatedRelation& r, const std::vector<std::string>& out_attrs) {
  for (const auto& a : out_attrs) {
    if (!r.has_attr(a)) raise(ErrorCode::kUnknownAttribute, "cannot marginalize unknown attribute '" + a + "'");
  }
  if (out_attrs.empty()) return r;
  std::vector<std::string> keep = attr_difference(r.attrs(), out_attrs);
  std::vector<std::size_t> cols;
  for (const auto& a : keep) cols.push_back(*r.column(a));
  RelationBuilder b(keep, r.spec());
  std::vector<Value> tuple(keep.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    auto row = r.row(i);
    for (std::size_t j = 0; j < cols.size(); ++j) tuple[j] = row[cols[j]];
    b.add(tuple, r.annotation(i));
  }
  return std::move(b).build();
}

AnnotatedRelation project(const AnnotatedRelation& r, const std::vector<std::string>& keep) {
  std::vector<std::string> drop;
  for (const auto& a : r.attrs()) {
    if (std::find(keep.begin(), keep.end(), a) == keep.end()) drop.push_back(a);
  }
  return marginalize(r, drop);
}

AnnotatedRelation select(const AnnotatedRelation& r, const Predicate& pred, const Dictionary& dict) {
  if (pred.empty()) return r;
  CompiledPredicate cp(pred, r.attrs(), dict);
  RelationBuilder b(r.attrs(), r.spec());
  for (std::size_t i = 0; i < r.size(); ++i) {
    auto row = r.row(i);
    if (cp.matches(row.data())) b.add(row, r.annotation(i));
  }
  return std::move(b).build();
}

namespace {

// Splits one CSV record; supports double-quoted fields with "" escapes.
std::vector<std::string> split_record(std::string_view line, char delim, std::size_t line_no,
                                      const std::string& origin) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty() && !was_quoted) {
      quoted = true;
      was_quoted = true;
    } else if (c == delim) {
      out.push_back(std::move(cur));
      cur.clear();
      was_quoted = false;
    } else {
      cur += c;
    }
  }
  if (quoted) raise(ErrorCode::kParse, origin + ":" + std::to_string(line_no) + ": unterminated quote");
  out.push_back(std::move(cur));
  return out;
}

}  // namespace

AnnotatedRelation parse_csv(std::string_view text, const TableSchema& schema, const SemiringSpec& spec,
                            Dictionary& dict, const CsvOptions& options, const std::string& origin) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = end + 1;
  }
  if (lines.empty()) raise(ErrorCode::kParse, origin + ":1: missing header");
  if (lines[0].size() >= 3 && lines[0].substr(0, 3) == "\xEF\xBB\xBF") lines[0].remove_prefix(3);

  std::vector<std::string> header = split_record(lines[0], options.delimiter, 1, origin);
  std::vector<std::size_t> col_index(schema.columns.size());
  for (std::size_t c = 0; c < schema.columns.size(); ++c) {
    const auto& name = schema.columns[c].name;
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) raise(ErrorCode::kMissingColumn, origin + ": missing column '" + name + "'");
    col_index[c] = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<std::string> attrs;
  for (const auto& col : schema.columns) {
    const bool lifted =
        std::find(spec.lift_attrs.begin(), spec.lift_attrs.end(), col.name) != spec.lift_attrs.end();
    if (col.measure && !lifted) continue;
    if (!col.measure) {
      dict.declare(col.name, col.type, col.domain);
      attrs.push_back(col.name);
    }
  }
  attrs = sorted_attrs(std::move(attrs));
  std::vector<std::size_t> attr_schema_col(attrs.size());
  for (std::size_t a = 0; a < attrs.size(); ++a) {
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      if (schema.columns[c].name == attrs[a] && !schema.columns[c].measure) attr_schema_col[a] = c;
    }
  }
  std::vector<std::optional<std::size_t>> lift_col(spec.lift_attrs.size());
  for (std::size_t l = 0; l < spec.lift_attrs.size(); ++l) {
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      if (schema.columns[c].name == spec.lift_attrs[l]) lift_col[l] = c;
    }
  }

  RelationBuilder b(attrs, spec);
  std::vector<Value> tuple(attrs.size());
  std::vector<std::optional<double>> lift_values(spec.lift_attrs.size());
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    const std::size_t line_no = ln + 1;
    std::vector<std::string> fields = split_record(lines[ln], options.delimiter, line_no, origin);
    if (fields.size() != header.size()) {
      raise(ErrorCode::kParse, origin + ":" + std::to_string(line_no) + ": expected " +
                                   std::to_string(header.size()) + " fields, found " +
                                   std::to_string(fields.size()));
    }
    try {
      for (std::size_t a = 0; a < attrs.size(); ++a) {
        tuple[a] = dict.intern(attrs[a], fields[col_index[attr_schema_col[a]]]);
      }
      for (std::size_t l = 0; l < lift_col.size(); ++l) {
        if (!lift_col[l]) {
          lift_values[l].reset();
          continue;
        }
        const std::string& f = fields[col_index[*lift_col[l]]];
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
        if (f.empty() || ec != std::errc() || ptr != f.data() + f.size()) {
          raise(ErrorCode::kNonNumeric, "lift attribute '" + spec.lift_attrs[l] + "' is not numeric: '" + f + "'");
        }
        lift_values[l] = v;
      }
    } catch (const Error& e) {
      raise(e.code(), origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
    b.add(tuple, lift(lift_values, spec));
  }
  return std::move(b).build();
}

AnnotatedRelation load_csv(const std::string& path, const TableSchema& schema, const SemiringSpec& spec,
                           Dictionary& dict, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::kIo, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), schema, spec, dict, options, path);
}

std::string to_csv(const AnnotatedRelation& r, const Dictionary& dict) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& a : r.attrs()) os << a << ',';
  os << "annotation\n";
  for (std::size_t i = 0; i < r.size(); ++i) {
    auto row = r.row(i);
    for (std::size_t c = 0; c < r.arity(); ++c) os << dict.decode(r.attrs()[c], row[c]) << ',';
    const Annotation& a = r.annotation(i);
    if (a.kind() == SemiringKind::kGram || a.kind() == SemiringKind::kCountSumPair) {
      os << '"' << a.to_string() << '"';
    } else {
      os << a.to_string();
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace cjt
