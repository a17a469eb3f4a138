#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include <nlohmann/json.hpp>

#include "brute.hpp"
#include "cjt/error.hpp"
#include "cjt/manager.hpp"
#include "fixtures.hpp"
#include "gen.hpp"
#include "random_db.hpp"
#include "worked_example.hpp"

namespace cjt {
namespace {

using testing::Gen;

MessagePtr one_row_message(const std::string& fp, Dictionary& d) {
  auto m = std::make_shared<Message>();
  m->edge = {0, 1};
  m->fingerprint = fp;
  m->kept = {"A"};
  m->content = std::make_shared<AnnotatedRelation>(testing::counts(d, {"A"}, {{{"a"}, 1}}));
  return m;
}

TEST(MessageCache, EvictsLeastRecentlyUsed) {
  Dictionary d;
  MessageCache c(2);
  c.put(one_row_message("a", d));
  c.put(one_row_message("b", d));
  c.put(one_row_message("c", d));
  EXPECT_FALSE(c.contains("a"));
  EXPECT_TRUE(c.contains("b"));
  EXPECT_TRUE(c.contains("c"));
  EXPECT_EQ(c.evictions(), 1u);
}

TEST(MessageCache, GetRefreshesRecency) {
  Dictionary d;
  MessageCache c(2);
  c.put(one_row_message("a", d));
  c.put(one_row_message("b", d));
  ASSERT_TRUE(c.get("a"));
  c.put(one_row_message("c", d));
  EXPECT_TRUE(c.contains("a"));
  EXPECT_FALSE(c.contains("b"));
}

TEST(MessageCache, PinnedEntriesExceedBudgetWithWarning) {
  Dictionary d;
  MessageCache c(1);
  c.set_pins("owner", {"a", "b"});
  c.put(one_row_message("a", d));
  c.put(one_row_message("b", d));
  EXPECT_TRUE(c.contains("a"));
  EXPECT_TRUE(c.contains("b"));
  EXPECT_EQ(c.rows(), 2u);
  EXPECT_GE(c.warnings(), 1u);
  c.release("owner");
  EXPECT_EQ(c.rows(), 1u);
}

TEST(MessageCache, DuplicatePutIsNoOp) {
  Dictionary d;
  MessageCache c(10);
  EXPECT_TRUE(c.put(one_row_message("a", d)));
  EXPECT_FALSE(c.put(one_row_message("a", d)));
  EXPECT_EQ(c.rows(), 1u);
  EXPECT_EQ(c.entries(), 1u);
}

ManagerConfig quiet() {
  ManagerConfig c;
  c.background = false;
  return c;
}

TEST(Manager, DashboardCalibratesAndAnswers) {
  Manager m(quiet());
  auto gid = m.register_graph(testing::three_relations());
  auto r = m.register_dashboard(gid, {});
  ASSERT_EQ(r.answer.size(), 1u);
  EXPECT_EQ(r.answer.annotation(0).count_value(), 120u);
  EXPECT_EQ(r.messages_computed, 4u);
  EXPECT_EQ(m.offline(r.viz)->status(), CalibrationStatus::kFull);
  for (const auto& msg : m.offline(r.viz)->store->all()) EXPECT_TRUE(m.cache().pinned(msg->fingerprint));
}

TEST(Manager, SingleRelationDashboard) {
  auto g = std::make_shared<JoinGraph>("one", SemiringSpec::count());
  g->add_relation("R", testing::counts(g->dictionary(), {"A"}, {{{"a"}, 2}, {{"b"}, 3}}));
  Manager m(quiet());
  QuerySpec q;
  q.group_by = {"A"};
  auto r = m.register_dashboard(m.register_graph(g), q);
  EXPECT_EQ(r.messages_computed, 0u);
  EXPECT_EQ(r.answer.size(), 2u);
}

TEST(Manager, RegistryErrors) {
  Manager m(quiet());
  auto gid = m.register_graph(testing::three_relations());
  try {
    m.register_graph(testing::three_relations());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConflict);
  }
  auto viz = m.register_dashboard(gid, {}).viz;
  try {
    m.interact("nope", viz, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownId);
  }
  auto s = m.open_session();
  try {
    m.interact(s, "nope", {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownId);
  }
  QuerySpec bad;
  bad.group_by = {"Z"};
  EXPECT_THROW(m.interact(s, viz, bad), Error);
  EXPECT_THROW(m.register_dashboard(gid, bad), Error);
}

TEST(Manager, FilterReusesDashboardMessages) {
  Manager m(quiet());
  auto g = testing::three_relations();
  auto viz = m.register_dashboard(m.register_graph(g), {}).viz;
  auto s = m.open_session();
  QuerySpec q2;
  q2.predicates = {Predicate::eq("D", "d1")};
  auto r = m.interact(s, viz, q2);
  EXPECT_EQ(testing::compare_relations(oracle_execute(*g, q2), r.answer), "");
  EXPECT_GT(r.stats.reused, 0u);
  auto again = m.interact(s, viz, q2);
  EXPECT_EQ(again.stats.computed, 0u);
  EXPECT_EQ(testing::compare_relations(oracle_execute(*g, q2), again.answer), "");
}

TEST(Manager, CalibratedSessionShrinksNextPlan) {
  auto g = testing::chain_graph({6, 6, 6, 6, 6}, 3);
  QuerySpec q2;
  q2.predicates = {Predicate::eq("X5", "v1")};
  QuerySpec q3 = q2;
  q3.group_by = {"X4"};

  Manager after_q2(quiet());
  auto viz = after_q2.register_dashboard(after_q2.register_graph(g), {}).viz;
  auto s = after_q2.open_session();
  after_q2.interact(s, viz, q2);
  after_q2.think(s, viz);
  auto via_q2 = after_q2.interact(s, viz, q3);

  ManagerConfig direct_cfg = quiet();
  direct_cfg.use_cache = false;
  Manager direct(direct_cfg);
  auto g2 = testing::chain_graph({6, 6, 6, 6, 6}, 3);
  auto viz2 = direct.register_dashboard(direct.register_graph(g2), {}).viz;
  auto via_q1 = direct.interact(direct.open_session(), viz2, q3);

  EXPECT_LE(via_q2.stats.computed, via_q1.stats.computed);
  EXPECT_EQ(testing::compare_relations(oracle_execute(*g, q3), via_q2.answer), "");
  EXPECT_EQ(testing::compare_relations(oracle_execute(*g2, q3), via_q1.answer), "");
}

TEST(Manager, CrossSessionCacheHits) {
  Manager m(quiet());
  auto g = testing::chain_graph({6, 6, 6, 6}, 3);
  auto viz = m.register_dashboard(m.register_graph(g), {}).viz;
  QuerySpec q;
  q.predicates = {Predicate::eq("X0", "v2")};
  q.group_by = {"X4"};
  auto a = m.interact(m.open_session(), viz, q);
  EXPECT_GT(a.stats.computed, 0u);
  auto b = m.interact(m.open_session(), viz, q);
  EXPECT_EQ(b.stats.computed, 0u);
  EXPECT_GT(b.stats.cache_hits, 0u);
  EXPECT_EQ(testing::compare_relations(a.answer, b.answer), "");
}

TEST(Manager, BackgroundCalibrationReachesFull) {
  Manager m;
  auto g = testing::chain_graph({6, 6, 6, 6}, 3);
  auto viz = m.register_dashboard(m.register_graph(g), {}).viz;
  auto s = m.open_session();
  QuerySpec q;
  q.predicates = {Predicate::eq("X2", "v0")};
  m.interact(s, viz, q);
  m.wait_background(s, viz);
  EXPECT_EQ(m.latest(s, viz)->status(), CalibrationStatus::kFull);
  EXPECT_EQ(m.stats(s, viz)["calibration"]["status"], "full");
  // Grouping by an attribute of the filtered bag only needs an absorption.
  QuerySpec next = q;
  next.group_by = {"X2"};
  auto r = m.interact(s, viz, next);
  EXPECT_EQ(r.stats.computed, 0u);
  EXPECT_EQ(testing::compare_relations(oracle_execute(*g, next), r.answer), "");
}

TEST(Manager, DeltaAppliesToLatestQuery) {
  Manager m(quiet());
  auto g = testing::three_relations();
  auto viz = m.register_dashboard(m.register_graph(g), {}).viz;
  auto s = m.open_session();
  m.interact_delta(s, viz, nlohmann::json::parse(R"({"add_group_by":["B"]})"));
  auto r = m.interact_delta(s, viz, nlohmann::json::parse(R"({"add_predicates":[{"attr":"C","op":"=","value":"c1"}]})"));
  EXPECT_EQ(r.query.group_by, (std::vector<std::string>{"B"}));
  EXPECT_EQ(testing::compare_relations(oracle_execute(*g, r.query), r.answer), "");
  auto st = m.stats(s, viz);
  EXPECT_EQ(st["interactions"], 2);
}

TEST(Preemption, AtMostTheInFlightMessageCompletes) {
  auto g = testing::chain_graph(std::vector<int>(6, 6), 3);
  auto jt = std::make_shared<const JunctionHypertree>(build_jt(*g));
  AnnotatedTree tree(g, jt, bind_annotations(*g, *jt, {}));
  MessageStore store;
  std::stop_source stop;
  CalibrateOptions o;
  o.cancel = stop.get_token();
  // The stop arrives while the first message is being published.
  o.on_message = [&](const MessagePtr&) { stop.request_stop(); };
  auto r = calibrate(tree, store, o);
  EXPECT_FALSE(r.completed);
  EXPECT_EQ(r.messages_done, 1u);
  EXPECT_EQ(store.size(), 1u);
}

TEST(ManagerProperty, ConcurrentSessionsStayCorrect) {
  Gen gen(77);
  for (int round = 0; round < 6; ++round) {
    auto g = testing::random_db(gen, SemiringSpec::count(), {4, 30, 5, 0.3});
    auto jt = build_jt(*g);
    ManagerConfig cfg;
    cfg.cache_rows = static_cast<std::size_t>(gen.uniform(0, 40));
    Manager m(cfg);
    auto viz = m.register_dashboard(m.register_graph(g), {}).viz;
    std::vector<std::vector<QuerySpec>> scripts(3);
    for (auto& s : scripts) {
      for (int i = 0; i < 6; ++i) s.push_back(testing::random_query(gen, *g, jt));
    }
    std::atomic<int> failures{0};
    std::vector<std::thread> threads;
    for (const auto& script : scripts) {
      threads.emplace_back([&, script] {
        auto s = m.open_session();
        for (const auto& q : script) {
          auto r = m.interact(s, viz, q);
          if (!testing::compare_groups(testing::brute_force(*g, q), testing::groups_of(r.answer)).empty()) ++failures;
        }
      });
    }
    for (auto& t : threads) t.join();
    EXPECT_EQ(failures.load(), 0);
  }
}

TEST(ManagerProperty, SameSlotRequestsAreSerialized) {
  auto g = testing::chain_graph({6, 6, 6, 6}, 3);
  Manager m;
  auto viz = m.register_dashboard(m.register_graph(g), {}).viz;
  auto s = m.open_session();
  std::atomic<int> failures{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 5; ++i) {
        QuerySpec q;
        q.predicates = {Predicate::eq("X" + std::to_string((t + i) % 5), "v" + std::to_string(i % 3))};
        auto r = m.interact(s, viz, q);
        if (!testing::compare_relations(oracle_execute(*g, q), r.answer).empty()) ++failures;
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(failures.load(), 0);
  EXPECT_EQ(m.stats(s, viz)["interactions"], 20);
}

TEST(ManagerProperty, LatestAndOfflineMessagesArePinned) {
  Gen gen(5);
  for (int round = 0; round < 20; ++round) {
    auto g = testing::random_db(gen, SemiringSpec::count());
    auto jt = build_jt(*g);
    ManagerConfig cfg = quiet();
    cfg.cache_rows = 0;
    Manager m(cfg);
    auto viz = m.register_dashboard(m.register_graph(g), {}).viz;
    auto s = m.open_session();
    for (int i = 0; i < 4; ++i) {
      m.interact(s, viz, testing::random_query(gen, *g, jt));
      if (gen.coin()) m.think(s, viz, static_cast<std::size_t>(gen.uniform(0, 4)));
      for (const auto& msg : m.latest(s, viz)->store->all()) EXPECT_TRUE(m.cache().contains(msg->fingerprint));
      for (const auto& msg : m.offline(viz)->store->all()) EXPECT_TRUE(m.cache().contains(msg->fingerprint));
    }
  }
}

TEST(ManagerProperty, CalibrationNeverIncreasesComputedMessages) {
  Gen gen(19);
  ManagerConfig offline_only = quiet();
  offline_only.session_reuse = false;
  offline_only.use_cache = false;
  for (int round = 0; round < 40; ++round) {
    Gen twin = gen;
    auto g = testing::random_db(gen, SemiringSpec::count());
    auto copy = testing::random_db(twin, SemiringSpec::count());
    auto jt = build_jt(*g);
    Manager online(quiet());
    Manager offline_same(offline_only);
    auto v1 = online.register_dashboard(online.register_graph(g), {}).viz;
    auto v3 = offline_same.register_dashboard(offline_same.register_graph(copy), {}).viz;
    auto s1 = online.open_session();
    auto s3 = offline_same.open_session();
    for (int i = 0; i < 5; ++i) {
      auto q = testing::random_query(gen, *g, jt);
      auto a = online.interact(s1, v1, q);
      auto b = offline_same.interact(s3, v3, q);
      EXPECT_LE(a.stats.computed, b.stats.computed) << q.canonical();
      EXPECT_EQ(testing::compare_relations(b.answer, a.answer), "");
      online.think(s1, v1);
    }
  }
}

}  // namespace
}  // namespace cjt
