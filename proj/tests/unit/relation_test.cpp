#include <gtest/gtest.h>

#include <map>

#include "cjt/error.hpp"
#include "cjt/relation.hpp"
#include "fixtures.hpp"
#include "gen.hpp"

namespace cjt {
namespace {

using testing::counts;
using testing::Gen;

std::vector<Value> ids(Dictionary& d, const std::vector<std::string>& attrs, const std::vector<std::string>& vals) {
  std::vector<Value> out;
  for (std::size_t i = 0; i < attrs.size(); ++i) out.push_back(d.lookup(attrs[i], vals[i]));
  return out;
}

TEST(Relation, JoinMultipliesMessageIntoRows) {
  Dictionary d;
  auto s = counts(d, {"A", "C"}, {{{"a1", "c1"}, 3}, {{"a1", "c2"}, 5}});
  auto m = counts(d, {"A"}, {{{"a1"}, 5}});
  auto j = join(s, m);
  EXPECT_EQ(j, counts(d, {"A", "C"}, {{{"a1", "c1"}, 15}, {{"a1", "c2"}, 25}}));
}

TEST(Relation, JoinWithEmptyIsEmpty) {
  Dictionary d;
  auto s = counts(d, {"A", "C"}, {{{"a1", "c1"}, 3}});
  auto e = counts(d, {"A"}, {});
  EXPECT_TRUE(join(s, e).empty());
  EXPECT_TRUE(join(e, s).empty());
}

TEST(Relation, DisjointSchemasGiveCartesianProduct) {
  Dictionary d;
  auto r = counts(d, {"A"}, {{{"a1"}, 2}, {{"a2"}, 3}});
  auto s = counts(d, {"B"}, {{{"b1"}, 5}, {{"b2"}, 7}});
  auto j = join(r, s);
  EXPECT_EQ(j, counts(d, {"A", "B"},
                      {{{"a1", "b1"}, 10}, {{"a1", "b2"}, 14}, {{"a2", "b1"}, 15}, {{"a2", "b2"}, 21}}));
}

TEST(Relation, UnitIsJoinNeutral) {
  Dictionary d;
  auto r = counts(d, {"A", "B"}, {{{"a1", "b1"}, 2}, {{"a1", "b2"}, 3}});
  EXPECT_EQ(join(r, AnnotatedRelation::unit(SemiringSpec::count())), r);
}

TEST(Relation, MarginalizeSumsGroups) {
  Dictionary d;
  auto r = counts(d, {"A", "B"}, {{{"a1", "b1"}, 2}, {{"a1", "b2"}, 3}});
  EXPECT_EQ(marginalize(r, {"B"}), counts(d, {"A"}, {{{"a1"}, 5}}));
  EXPECT_EQ(marginalize(r, {}), r);
  auto all = marginalize(r, {"A", "B"});
  ASSERT_EQ(all.size(), 1u);
  EXPECT_EQ(all.annotation(0), r.total());
  EXPECT_THROW(marginalize(r, {"Z"}), Error);
}

TEST(Relation, SelectFiltersRows) {
  Dictionary d;
  auto s = counts(d, {"A", "C"}, {{{"a1", "c1"}, 3}, {{"a1", "c2"}, 5}});
  EXPECT_EQ(select(s, Predicate::eq("C", "c1"), d), counts(d, {"A", "C"}, {{{"a1", "c1"}, 3}}));
  EXPECT_EQ(select(s, Predicate{}, d), s);
  EXPECT_EQ(select(s, Predicate::cmp("C", CompareOp::kNe, "zzz"), d), s);
  EXPECT_TRUE(select(s, Predicate::eq("C", "zzz"), d).empty());
  EXPECT_EQ(select(s, Predicate::in("C", {"c2", "c9"}), d), counts(d, {"A", "C"}, {{{"a1", "c2"}, 5}}));
  try {
    select(s, Predicate::cmp("C", CompareOp::kLt, "c2"), d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTypeMismatch);
  }
  EXPECT_THROW(select(s, Predicate::eq("Q", "x"), d), Error);
}

TEST(Relation, NumericPredicates) {
  Dictionary d;
  TableSchema schema{{{"k", AttrType::kCategorical, false, {}}, {"price", AttrType::kNumeric, false, {}}}};
  auto r = parse_csv("k,price\na,1.5\nb,3\nc,10\n", schema, SemiringSpec::count(), d);
  EXPECT_EQ(select(r, Predicate::cmp("price", CompareOp::kGe, "3"), d).size(), 2u);
  EXPECT_EQ(select(r, Predicate::cmp("price", CompareOp::kLt, "3"), d).size(), 1u);
  EXPECT_EQ(select(r, Predicate::in("price", {"1.5", "10"}), d).size(), 2u);
}

TEST(Relation, CsvFoldsDuplicates) {
  Dictionary d;
  TableSchema schema{{{"A", AttrType::kCategorical, false, {}}, {"B", AttrType::kCategorical, false, {}}}};
  auto r = parse_csv("A,B\na1,b1\na1,b1\na1,b1\n", schema, SemiringSpec::count(), d);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r.annotation(0), Annotation::count(3));
  EXPECT_TRUE(parse_csv("A,B\n", schema, SemiringSpec::count(), d).empty());
}

TEST(Relation, CsvSumsMeasure) {
  Dictionary d;
  TableSchema schema{{{"A", AttrType::kCategorical, false, {}}, {"amount", AttrType::kNumeric, true, {}}}};
  auto r = parse_csv("A,amount\na1,2\na1,3\n", schema, SemiringSpec::sum("amount"), d);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r.annotation(0), Annotation::real(5.0));
  EXPECT_EQ(r.attrs(), std::vector<std::string>{"A"});
}

TEST(Relation, CsvErrors) {
  Dictionary d;
  TableSchema schema{{{"A", AttrType::kCategorical, false, std::vector<std::string>{"x", "y"}},
                      {"n", AttrType::kNumeric, true, {}}}};
  auto code = [&](const std::string& text) {
    try {
      parse_csv(text, schema, SemiringSpec::sum("n"), d, {}, "t.csv");
    } catch (const Error& e) {
      return std::make_pair(e.code(), std::string(e.what()));
    }
    return std::make_pair(ErrorCode::kInternal, std::string());
  };
  auto [c1, m1] = code("A\nx\n");
  EXPECT_EQ(c1, ErrorCode::kMissingColumn);
  auto [c2, m2] = code("A,n\nx,1\nz,2\n");
  EXPECT_EQ(c2, ErrorCode::kDomainViolation);
  EXPECT_NE(m2.find("t.csv:3"), std::string::npos) << m2;
  auto [c3, m3] = code("A,n\nx,abc\n");
  EXPECT_EQ(c3, ErrorCode::kNonNumeric);
  EXPECT_NE(m3.find(":2"), std::string::npos);
  auto [c4, m4] = code("A,n\nx\n");
  EXPECT_EQ(c4, ErrorCode::kParse);
  try {
    load_csv("/nonexistent/file.csv", schema, SemiringSpec::count(), d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(Relation, CsvQuotedFieldsAndDelimiter) {
  Dictionary d;
  TableSchema schema{{{"A", AttrType::kCategorical, false, {}}, {"B", AttrType::kCategorical, false, {}}}};
  CsvOptions opt;
  opt.delimiter = ';';
  auto r = parse_csv("A;B\r\n\"x;1\";\"say \"\"hi\"\"\"\r\n", schema, SemiringSpec::count(), d, opt);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(d.decode("A", r.row(0)[0]), "x;1");
  EXPECT_EQ(d.decode("B", r.row(0)[1]), "say \"hi\"");
}

// Independent nested-loop join over decoded tuples.
using Table = std::map<std::map<std::string, std::string>, std::uint64_t>;

Table decode(const AnnotatedRelation& r, const Dictionary& d) {
  Table t;
  for (std::size_t i = 0; i < r.size(); ++i) {
    std::map<std::string, std::string> row;
    for (std::size_t c = 0; c < r.arity(); ++c) row[r.attrs()[c]] = d.decode(r.attrs()[c], r.row(i)[c]);
    t[row] += r.annotation(i).count_value();
  }
  return t;
}

Table naive_join(const Table& a, const Table& b) {
  Table out;
  for (const auto& [ra, ca] : a) {
    for (const auto& [rb, cb] : b) {
      bool ok = true;
      for (const auto& [k, v] : ra) {
        auto it = rb.find(k);
        if (it != rb.end() && it->second != v) ok = false;
      }
      if (!ok) continue;
      auto row = ra;
      row.insert(rb.begin(), rb.end());
      out[row] += ca * cb;
    }
  }
  return out;
}

AnnotatedRelation random_counts(Gen& g, Dictionary& d, const std::vector<std::string>& attrs, int max_rows) {
  std::vector<std::pair<std::vector<std::string>, std::uint64_t>> rows;
  int n = g.uniform(0, max_rows);
  for (int i = 0; i < n; ++i) {
    std::vector<std::string> vals;
    for (std::size_t a = 0; a < attrs.size(); ++a) vals.push_back("v" + std::to_string(g.uniform(0, 3)));
    rows.push_back({vals, static_cast<std::uint64_t>(g.uniform(1, 4))});
  }
  return counts(d, attrs, rows);
}

TEST(RelationProperty, JoinMatchesNestedLoopAndCommutes) {
  Gen g(5);
  for (int trial = 0; trial < 100; ++trial) {
    Dictionary d;
    auto r = random_counts(g, d, {"A", "B"}, 10);
    auto s = random_counts(g, d, {"B", "C"}, 10);
    auto t = random_counts(g, d, {"C", "A"}, 10);
    EXPECT_EQ(decode(join(r, s), d), naive_join(decode(r, d), decode(s, d)));
    EXPECT_EQ(join(r, s), join(s, r));
    EXPECT_EQ(join(join(r, s), t), join(r, join(s, t)));
  }
}

TEST(RelationProperty, EarlyMarginalization) {
  Gen g(6);
  for (int trial = 0; trial < 100; ++trial) {
    Dictionary d;
    auto r = random_counts(g, d, {"A", "B"}, 12);
    auto s = random_counts(g, d, {"B", "C"}, 12);
    // A appears only in r.
    EXPECT_EQ(marginalize(join(r, s), {"A"}), join(marginalize(r, {"A"}), s));
  }
}

TEST(RelationProperty, SelectCommutesWithJoin) {
  Gen g(8);
  for (int trial = 0; trial < 100; ++trial) {
    Dictionary d;
    auto r = random_counts(g, d, {"A", "B"}, 12);
    auto s = random_counts(g, d, {"B", "C"}, 12);
    Predicate p = Predicate::eq("A", "v" + std::to_string(g.uniform(0, 3)));
    EXPECT_EQ(select(join(r, s), p, d), join(select(r, p, d), s));
  }
}

TEST(Relation, FindAndCanonicalBytes) {
  Dictionary d;
  auto r = counts(d, {"B", "A"}, {{{"b2", "a1"}, 3}, {{"b1", "a1"}, 2}});
  EXPECT_EQ(r.attrs(), (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(r.find(ids(d, {"A", "B"}, {"a1", "b2"})), Annotation::count(3));
  EXPECT_FALSE(r.find(ids(d, {"A", "B"}, {"a1", "zz"})).has_value());
  auto r2 = counts(d, {"A", "B"}, {{{"a1", "b1"}, 2}, {{"a1", "b2"}, 3}});
  EXPECT_EQ(r.canonical_bytes(), r2.canonical_bytes());
}

TEST(Relation, ZeroRowsAreDropped) {
  Dictionary d;
  auto r = testing::make_relation(d, SemiringSpec::sum("v"), {"A"},
                                  {{{"a"}, Annotation::real(2)}, {{"a"}, Annotation::real(-2)}, {{"b"}, Annotation::real(1)}});
  EXPECT_EQ(r.size(), 1u);
}

}  // namespace
}  // namespace cjt
