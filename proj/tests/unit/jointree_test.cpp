#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "cjt/annotations.hpp"
#include "cjt/error.hpp"
#include "cjt/jointree.hpp"
#include "fixtures.hpp"
#include "gen.hpp"
#include "random_db.hpp"
#include "worked_example.hpp"

namespace cjt {
namespace {

using testing::counts;
using testing::Gen;

TEST(Gyo, ChainEliminationOrder) {
  auto r = gyo_check({{"A", "B"}, {"B", "C"}, {"C", "D"}});
  EXPECT_TRUE(r.acyclic);
  EXPECT_EQ(r.elimination_order, (std::vector<std::string>{"A", "D", "B", "C"}));
}

TEST(Gyo, SingleRelation) {
  auto r = gyo_check({{"A", "B"}});
  EXPECT_TRUE(r.acyclic);
  EXPECT_EQ(r.elimination_order, (std::vector<std::string>{"A", "B"}));
}

TEST(Gyo, TriangleIsCyclic) {
  EXPECT_FALSE(gyo_check({{"A", "B"}, {"B", "C"}, {"A", "C"}}).acyclic);
}

TEST(BuildJt, SharedKeyGivesThreeBagTree) {
  auto g = testing::three_relations(false);
  auto jt = build_jt(*g);
  EXPECT_EQ(jt.size(), 3u);
  EXPECT_EQ(jt.edges().size(), 2u);
  EXPECT_TRUE(validate_jt(jt).ok());
  for (const auto& b : jt.bags()) EXPECT_TRUE(std::binary_search(b.attrs.begin(), b.attrs.end(), "A"));
}

TEST(BuildJt, ExplicitLayoutIsPath) {
  auto jt = build_jt(*testing::three_relations(true));
  EXPECT_EQ(jt.neighbors(1), (std::vector<BagId>{0, 2}));
  EXPECT_TRUE(jt.is_leaf(0));
}

TEST(BuildJt, OneRelation) {
  auto g = std::make_shared<JoinGraph>("one", SemiringSpec::count());
  g->add_relation("R", counts(g->dictionary(), {"A"}, {{{"a"}, 1}}));
  auto jt = build_jt(*g);
  EXPECT_EQ(jt.size(), 1u);
  EXPECT_TRUE(jt.edges().empty());
}

TEST(BuildJt, ChainOfEightIsPath) {
  auto jt = build_jt(*testing::chain_graph(std::vector<int>(8, 3)));
  EXPECT_EQ(jt.size(), 8u);
  EXPECT_TRUE(validate_jt(jt).ok());
  std::size_t leaves = 0;
  for (const auto& b : jt.bags()) {
    EXPECT_LE(jt.neighbors(b.id).size(), 2u);
    leaves += jt.is_leaf(b.id);
  }
  EXPECT_EQ(leaves, 2u);
}

TEST(BuildJt, RejectsCycleAndDisconnection) {
  auto g = std::make_shared<JoinGraph>("tri", SemiringSpec::count());
  g->add_relation("R", counts(g->dictionary(), {"A", "B"}, {}));
  g->add_relation("S", counts(g->dictionary(), {"B", "C"}, {}));
  g->add_relation("T", counts(g->dictionary(), {"A", "C"}, {}));
  try {
    build_jt(*g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCyclicGraph);
  }
  auto h = std::make_shared<JoinGraph>("split", SemiringSpec::count());
  h->add_relation("R", counts(h->dictionary(), {"A"}, {}));
  h->add_relation("S", counts(h->dictionary(), {"B"}, {}));
  try {
    build_jt(*h);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDisconnectedGraph);
  }
}

TEST(ValidateJt, RunningIntersectionViolationNamesAttribute) {
  JunctionHypertree jt;
  jt.set_relation_info({"R", {"A", "B"}, 1, "v1"});
  jt.set_relation_info({"S", {"B"}, 1, "v1"});
  jt.set_relation_info({"T", {"A", "C"}, 1, "v1"});
  jt.add_bag({"A", "B"}, {"R"});
  jt.add_bag({"B"}, {"S"});
  jt.add_bag({"A", "C"}, {"T"});
  jt.add_edge(0, 1);
  jt.add_edge(1, 2);
  auto v = validate_jt(jt);
  EXPECT_EQ(v.kind, JtViolation::Kind::kRunningIntersection);
  EXPECT_EQ(v.witness, "A");
}

TEST(ValidateJt, MissingMappingIsReported) {
  JunctionHypertree jt;
  jt.set_relation_info({"R", {"A", "B"}, 1, "v1"});
  jt.add_bag({"A", "B"}, {});
  auto v = validate_jt(jt);
  EXPECT_FALSE(v.ok());
  EXPECT_EQ(v.witness, "R");
}

TEST(ValidateJt, CycleIsNotATree) {
  JunctionHypertree jt;
  jt.add_bag({"A"}, {});
  jt.add_bag({"A"}, {});
  jt.add_bag({"A"}, {});
  jt.add_edge(0, 1);
  jt.add_edge(1, 2);
  jt.add_edge(2, 0);
  EXPECT_EQ(validate_jt(jt).kind, JtViolation::Kind::kNotATree);
}

TEST(EmptyBag, SplicedBetweenNeighbors) {
  auto g = std::make_shared<JoinGraph>("sales", SemiringSpec::count());
  auto& d = g->dictionary();
  g->add_relation("sales", counts(d, {"time", "store", "item"}, {}));
  g->add_relation("times", counts(d, {"time", "month"}, {}));
  g->add_relation("stores", counts(d, {"store", "city"}, {}));
  auto jt = build_jt(*g);
  BagId id = 0;
  auto jt2 = add_empty_bag(jt, {"time", "store"}, {*jt.bag_of("sales"), *jt.bag_of("times"), *jt.bag_of("stores")}, &id);
  EXPECT_TRUE(validate_jt(jt2).ok());
  EXPECT_TRUE(jt2.bag(id).empty_bag);
  EXPECT_EQ(jt2.neighbors(id).size(), 3u);
  EXPECT_FALSE(jt2.adjacent(*jt.bag_of("sales"), *jt.bag_of("times")));
}

TEST(EmptyBag, DuplicateOfExistingBagIsValid) {
  auto jt = build_jt(*testing::three_relations());
  auto jt2 = add_empty_bag(jt, {"A", "B"}, {0});
  EXPECT_TRUE(validate_jt(jt2).ok());
}

TEST(EmptyBag, BrokenRunningIntersectionRaises) {
  auto jt = build_jt(*testing::three_relations());
  try {
    add_empty_bag(jt, {"B"}, {2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidJoinTree);
  }
}

TEST(JtProperty, RandomAcyclicGraphsValidate) {
  Gen gen(3);
  for (int i = 0; i < 200; ++i) {
    auto g = testing::random_db(gen, SemiringSpec::count());
    auto jt = build_jt(*g);
    EXPECT_TRUE(validate_jt(jt).ok()) << jt.describe();
    EXPECT_TRUE(gyo_check(*g).acyclic);
  }
}

TEST(Bind, GroupByOnLeafAndSelectionOnCoveringBag) {
  auto g = testing::three_relations();
  auto jt = build_jt(*g);
  QuerySpec q;
  q.group_by = {"B"};
  q.predicates = {Predicate::eq("C", "c1")};
  auto a = bind_annotations(*g, jt, q);
  ASSERT_EQ(a.placements.size(), 2u);
  EXPECT_EQ(a.signature(0), (std::vector<std::string>{"gamma(B)"}));
  EXPECT_EQ(a.signature(1).size(), 1u);
  EXPECT_EQ(a.output, (std::vector<std::string>{"B"}));
}

TEST(Bind, EmptyQueryHasNoPlacements) {
  auto g = testing::three_relations();
  auto a = bind_annotations(*g, build_jt(*g), {});
  EXPECT_TRUE(a.placements.empty());
  EXPECT_TRUE(a.output.empty());
}

TEST(Bind, ExclusionOnlyOnLeaf) {
  auto g = testing::three_relations();
  auto jt = build_jt(*g);
  QuerySpec q;
  q.excluded = {"T"};
  auto a = bind_annotations(*g, jt, q);
  ASSERT_EQ(a.placements.size(), 1u);
  EXPECT_EQ(a.placements[0].bag, *jt.bag_of("T"));
  q.excluded = {"S"};
  try {
    bind_annotations(*g, jt, q);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAnnotationPlacement);
  }
}

TEST(Bind, PushdownPlacesSelectionFarthest) {
  auto g = testing::chain_graph({9, 9, 30}, 6);
  auto jt = build_jt(*g);
  QuerySpec q;
  q.predicates = {Predicate::eq("X1", "v1")};
  BindOptions near;
  BindOptions deep;
  deep.selection = SelectionPlacement::kPushDown;
  // Reference root is R2 (most rows); X1 is covered by R0 and R1.
  EXPECT_EQ(bind_annotations(*g, jt, q, near).placements[0].bag, *jt.bag_of("R1"));
  EXPECT_EQ(bind_annotations(*g, jt, q, deep).placements[0].bag, *jt.bag_of("R0"));
}

TEST(Bind, UnknownAttributeRaises) {
  auto g = testing::three_relations();
  QuerySpec q;
  q.group_by = {"Z"};
  try {
    bind_annotations(*g, build_jt(*g), q);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownAttribute);
  }
}

TEST(BindProperty, PlacementsRespectApplicability) {
  Gen gen(11);
  for (int i = 0; i < 200; ++i) {
    auto g = testing::random_db(gen, SemiringSpec::count());
    auto jt = build_jt(*g);
    auto q = testing::random_query(gen, *g, jt);
    auto a = bind_annotations(*g, jt, q);
    for (const auto& p : a.placements) {
      const auto& attrs = jt.bag(p.bag).attrs;
      for (const auto& x : p.annotation.attributes()) {
        EXPECT_TRUE(std::binary_search(attrs.begin(), attrs.end(), x));
      }
      if (p.annotation.kind == AnnotationKind::kExclude || p.annotation.kind == AnnotationKind::kUpdate) {
        EXPECT_EQ(p.bag, *jt.bag_of(p.annotation.relation));
      }
      if (p.annotation.kind == AnnotationKind::kExclude) {
        EXPECT_TRUE(exclusion_allowed(jt, p.annotation.relation, q.excluded));
      }
    }
  }
}

TEST(QueryDelta, AddAndRemove) {
  QuerySpec q;
  q.group_by = {"B"};
  auto next = apply_delta(q, nlohmann::json::parse(R"({"add_group_by":["C"],
      "add_predicates":[{"attr":"D","op":"=","value":"d1"}]})"));
  EXPECT_EQ(next.group_by, (std::vector<std::string>{"B", "C"}));
  ASSERT_EQ(next.predicates.size(), 1u);
  auto back = apply_delta(next, nlohmann::json::parse(R"({"remove_group_by":["C"],"remove_predicates":["D"]})"));
  EXPECT_EQ(back, q);
  auto replaced = apply_delta(next, nlohmann::json::parse(R"({"add_predicates":[{"attr":"D","op":"=","value":"d2"}]})"));
  ASSERT_EQ(replaced.predicates.size(), 1u);
  EXPECT_EQ(replaced.predicates[0], Predicate::eq("D", "d2"));
}

}  // namespace
}  // namespace cjt
