#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <memory>
#include <regex>
#include <sstream>

#include "augment_db.hpp"
#include "cjt/engine.hpp"
#include "cjt/error.hpp"
#include "cjt/sqlgen.hpp"
#include "fixtures.hpp"
#include "gen.hpp"
#include "random_db.hpp"
#include "sql_shim.hpp"
#include "worked_example.hpp"

namespace cjt {
namespace {

namespace sql = testing::sql;

/// Compares against tests/golden/<name>; CJT_UPDATE_GOLDEN=1 rewrites it.
void expect_golden(const std::string& name, const std::string& text) {
  const std::string path = std::string(CJT_GOLDEN_DIR) + "/" + name;
  if (const char* u = std::getenv("CJT_UPDATE_GOLDEN"); u && std::string(u) == "1") {
    std::ofstream(path) << text;
    return;
  }
  std::ifstream in(path);
  ASSERT_TRUE(in) << "missing golden file " << path;
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), text) << "golden mismatch: " << name;
}

struct Fixture {
  std::shared_ptr<JoinGraph> g;
  std::shared_ptr<const JunctionHypertree> jt;

  explicit Fixture(std::shared_ptr<JoinGraph> graph)
      : g(std::move(graph)), jt(std::make_shared<const JunctionHypertree>(build_jt(*g))) {}

  AnnotatedTree tree(const QuerySpec& q = {}) const { return AnnotatedTree(g, jt, bind_annotations(*g, *jt, q)); }
};

std::shared_ptr<JoinGraph> pair_graph(const SemiringSpec& spec, const std::vector<Annotation>& r, const std::vector<Annotation>& s) {
  auto g = std::make_shared<JoinGraph>("pair", spec);
  auto& d = g->dictionary();
  g->add_relation("R", testing::make_relation(d, spec, {"A", "B"}, {{{"a1", "b1"}, r[0]}, {{"a2", "b1"}, r[1]}}));
  g->add_relation("S", testing::make_relation(d, spec, {"A", "C"}, {{{"a1", "c1"}, s[0]}, {{"a1", "c2"}, s[1]}}));
  return g;
}

TEST(SqlGolden, CountMessage) {
  Fixture f(testing::three_relations());
  expect_golden("count_message.sql", emit_message_sql(f.tree(), {0, 1}) + "\n");
}

TEST(SqlGolden, SelectionAppearsInWhere) {
  Fixture f(testing::three_relations());
  QuerySpec q;
  q.predicates = {Predicate::in("B", {"b1", "b'2"})};
  q.group_by = {"D"};
  const auto text = emit_message_sql(f.tree(q), {0, 1});
  EXPECT_NE(text.find("WHERE t0.B IN ('b1', 'b''2')"), std::string::npos);
  expect_golden("selection_message.sql", text + "\n");
}

TEST(SqlGolden, WorkedExamplePlanIsTwoCreatesAndOneSelect) {
  Fixture f(testing::three_relations());
  QuerySpec q;
  q.group_by = {"B"};
  q.predicates = {Predicate::eq("C", "c1")};
  auto plan = plan_single(f.g, f.jt, q, CostModel(*f.g));
  auto script = emit_plan_sql(AnnotatedTree(f.g, f.jt, plan.annotations), plan);
  ASSERT_EQ(script.size(), 3u);
  EXPECT_EQ(script[0].rfind("CREATE TABLE ", 0), 0u);
  EXPECT_EQ(script[1].rfind("CREATE TABLE ", 0), 0u);
  EXPECT_EQ(script[2].rfind("SELECT ", 0), 0u);
  expect_golden("worked_plan.sql", join_statements(script));
}

TEST(SqlGolden, GramMessageExpandsEveryEntry) {
  auto db = testing::augment_db(1, 8, 3, 2);
  Fixture f(db.graph);
  const BagId fb = *f.jt->bag_of("F"), db_bag = *f.jt->bag_of("D");
  const auto text = emit_message_sql(f.tree(), {db_bag, fb});
  // k = 2 variables: k(k+3)/2 + 1 = 6 annotation sums.
  EXPECT_EQ(annotation_columns(db.graph->spec()).size(), 6u);
  std::size_t sums = 0;
  for (auto p = text.find("SUM("); p != std::string::npos; p = text.find("SUM(", p + 1)) ++sums;
  EXPECT_EQ(sums, 6u);
  expect_golden("gram_message.sql", text + "\n");
  QuerySpec q;
  q.group_by = {"z"};
  const auto abs = emit_absorption_sql(f.tree(q), db_bag);
  EXPECT_NE(abs.find("t0.g_0_1 * t1.g_0_2"), std::string::npos);
  expect_golden("gram_absorption.sql", abs + "\n");
}

TEST(SqlGolden, CountSumAndTropicalMessages) {
  auto cs = pair_graph(SemiringSpec::count_sum("v"), {Annotation::count_sum(2, 3), Annotation::count_sum(1, 4)},
                       {Annotation::count_sum(1, 1), Annotation::count_sum(3, 2)});
  auto mn = pair_graph(SemiringSpec::min("v"), {Annotation::tropical_min(2), Annotation::tropical_min(5)},
                       {Annotation::tropical_min(1), Annotation::tropical_min(7)});
  Fixture a(cs), b(mn);
  QuerySpec q;
  q.group_by = {"C"};
  expect_golden("count_sum_absorption.sql", emit_absorption_sql(a.tree(q), *a.jt->bag_of("S")) + "\n");
  const auto text = emit_message_sql(b.tree(), {*b.jt->bag_of("R"), *b.jt->bag_of("S")});
  EXPECT_NE(text.find("MIN("), std::string::npos);
  expect_golden("min_message.sql", text + "\n");
}

TEST(SqlGolden, NaiveQuery) {
  Fixture f(testing::three_relations());
  QuerySpec q;
  q.group_by = {"A"};
  q.predicates = {Predicate::eq("D", "d2")};
  expect_golden("naive.sql", emit_naive_sql(*f.g, q) + "\n");
}

TEST(Sqlgen, LeafEmptyBagEmitsNothing) {
  Fixture f(testing::three_relations());
  BagId id = 0;
  auto jt2 = std::make_shared<const JunctionHypertree>(add_empty_bag(*f.jt, {"A"}, {2}, &id));
  AnnotatedTree t(f.g, jt2, {});
  EXPECT_TRUE(is_identity_message(t, {id, 2}));
  EXPECT_EQ(emit_message_sql(t, {id, 2}), "");
}

TEST(Sqlgen, EmptyScheduleIsSingleSelect) {
  Fixture f(testing::three_relations());
  auto t = f.tree();
  SteinerPlan plan;
  plan.annotations = t.annotations();
  plan.root = 1;
  auto script = emit_plan_sql(t, plan);
  ASSERT_EQ(script.size(), 1u);
  EXPECT_EQ(script[0].rfind("SELECT ", 0), 0u);
}

TEST(Sqlgen, PrefixIsConfigurable) {
  Fixture f(testing::three_relations());
  SqlNaming n{"cjt_msg_"};
  EXPECT_EQ(emit_message_sql(f.tree(), {0, 1}, n).rfind("CREATE TABLE cjt_msg_0_1_", 0), 0u);
}

TEST(Sqlgen, WorkedExampleScriptReproducesEngine) {
  Fixture f(testing::three_relations());
  QuerySpec q;
  q.group_by = {"B"};
  q.predicates = {Predicate::eq("C", "c1")};
  auto plan = plan_single(f.g, f.jt, q, CostModel(*f.g));
  AnnotatedTree t(f.g, f.jt, plan.annotations);
  sql::Database db;
  db.execute_script(emit_graph_tables_sql(*f.g));
  auto table = db.run_plan(emit_plan_sql(t, plan));
  auto engine = execute_plan(t, plan, store_source(MessageStore{})).answer;
  EXPECT_EQ(sql::compare(sql::answer_of(engine, f.g->dictionary()), sql::answer_of(table, {"B"}, {"cnt"})), "");
  EXPECT_EQ(table.rows.size(), 2u);
}

// Calibrates a random CJT entirely through emitted SQL, then runs a reuse plan
// for a second query against those tables.
TEST(SqlgenProperty, ScriptsReproduceEngineAnswers) {
  testing::Gen gen(77);
  std::size_t multi_input = 0;
  for (int i = 0; i < 120; ++i) {
    const SemiringSpec spec = gen.pick(testing::all_specs());
    Fixture f(testing::random_db(gen, spec, {4, 12, 4, 0.3}));
    const auto& dict = f.g->dictionary();
    const auto cols = annotation_columns(spec);
    auto prev_q = testing::random_query(gen, *f.g, *f.jt);
    auto prev = f.tree(prev_q);

    sql::Database db;
    db.execute_script(emit_graph_tables_sql(*f.g));
    MessageStore store;
    calibrate(prev, store);
    for (const auto& e : upward_order(*f.jt, 0)) {
      if (auto s = emit_message_sql(prev, e); !s.empty()) db.execute_script(s);
    }
    for (const auto& e : downward_order(*f.jt, 0)) {
      if (auto s = emit_message_sql(prev, e); !s.empty()) db.execute_script(s);
    }
    for (const auto& m : store.all()) {
      ASSERT_EQ(m->identity, is_identity_message(prev, m->edge));
      if (m->identity) continue;
      const auto& t = db.table(message_table(prev, m->edge));
      ASSERT_EQ(sql::compare(sql::answer_of(*m->content, dict), sql::answer_of(t, m->kept, cols)), "")
          << "instance " << i << " message " << m->edge.from << "->" << m->edge.to;
    }

    auto next_q = testing::random_query(gen, *f.g, *f.jt);
    auto plan = plan_with_reuse(f.g, f.jt, prev.annotations(), next_q, store_source(store), CostModel(*f.g));
    AnnotatedTree next(f.g, f.jt, plan.annotations);
    auto engine = execute_plan(next, plan, store_source(store)).answer;
    const auto script = emit_plan_sql(next, plan);
    if (script.back().find("t1.") != std::string::npos) ++multi_input;
    auto table = db.run_plan(script);
    EXPECT_EQ(sql::compare(sql::answer_of(engine, dict), sql::answer_of(table, next.annotations().output, cols)), "")
        << "instance " << i << " " << next_q.canonical();

    auto naive = sql::Database();
    naive.execute_script(emit_graph_tables_sql(*f.g));
    auto direct = naive.query(emit_naive_sql(*f.g, next_q));
    EXPECT_EQ(sql::compare(sql::answer_of(engine, dict), sql::answer_of(direct, sorted_attrs(next_q.group_by), cols)), "")
        << "naive instance " << i;
  }
  EXPECT_GT(multi_input, 30u);
}

TEST(SqlgenProperty, DeterministicAndShortNames) {
  testing::Gen gen(12);
  const std::regex name(R"(CREATE TABLE (\S+) AS)");
  for (int i = 0; i < 40; ++i) {
    testing::Gen twin(1000 + static_cast<std::uint64_t>(i));
    testing::Gen twin2(1000 + static_cast<std::uint64_t>(i));
    Fixture a(testing::random_db(twin, SemiringSpec::count()));
    Fixture b(testing::random_db(twin2, SemiringSpec::count()));
    auto qa = testing::random_query(twin, *a.g, *a.jt);
    auto qb = testing::random_query(twin2, *b.g, *b.jt);
    auto pa = plan_single(a.g, a.jt, qa, CostModel(*a.g));
    auto pb = plan_single(b.g, b.jt, qb, CostModel(*b.g));
    auto sa = join_statements(emit_plan_sql(AnnotatedTree(a.g, a.jt, pa.annotations), pa));
    auto sb = join_statements(emit_plan_sql(AnnotatedTree(b.g, b.jt, pb.annotations), pb));
    EXPECT_EQ(sa, sb);
    for (std::sregex_iterator it(sa.begin(), sa.end(), name), end; it != end; ++it) {
      EXPECT_LE((*it)[1].length(), 63);
    }
  }
}

TEST(SqlgenProperty, NamesAreInjectiveOverFingerprints) {
  testing::Gen gen(4);
  std::map<std::string, std::string> by_name;
  for (int i = 0; i < 30; ++i) {
    Fixture f(testing::random_db(gen, SemiringSpec::count()));
    auto t = f.tree(testing::random_query(gen, *f.g, *f.jt));
    for (auto [u, v] : f.jt->edges()) {
      for (DirectedEdge e : {DirectedEdge{u, v}, DirectedEdge{v, u}}) {
        auto [it, fresh] = by_name.emplace(message_table(t, e), t.fingerprint(e));
        if (!fresh) EXPECT_EQ(it->second, t.fingerprint(e));
      }
    }
  }
}

}  // namespace
}  // namespace cjt
