#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "brute.hpp"
#include "cjt/engine.hpp"
#include "cjt/error.hpp"
#include "cjt/harness.hpp"

namespace cjt {
namespace {

std::uint64_t total_count(const JoinGraph& g) {
  auto r = oracle_execute(g, {});
  return r.size() ? r.annotation(0).count_value() : 0;
}

TEST(Chain, OneToOneJoinHasDomainSize) {
  auto c = gen_chain({4, 1, 7});
  EXPECT_EQ(total_count(*c.graph), 7u);
}

TEST(Chain, TinyInstanceMatchesEnumeration) {
  auto c = gen_chain({3, 2, 3, std::nullopt, 5});
  auto expected = testing::brute_force(*c.graph, {});
  ASSERT_EQ(expected.size(), 1u);
  EXPECT_EQ(expected.begin()->second.count_value(), total_count(*c.graph));
  EXPECT_EQ(total_count(*c.graph), 3u * 2 * 2 * 2);
}

TEST(Chain, HighFanoutConfigurationsShareTotalJoinSize) {
  EXPECT_DOUBLE_EQ(chain_join_size(8, 10, 10), 1e9);
  EXPECT_DOUBLE_EQ(chain_join_size(8, 5, 2560), 1e9);
  EXPECT_DOUBLE_EQ(chain_join_size(8, 2, 3906250), 1e9);
}

TEST(Chain, FanoutHoldsInBothDirections) {
  auto c = gen_chain({2, 3, 6});
  const auto& r1 = c.graph->relation("R1").current();
  std::map<Value, int> out_degree, in_degree;
  for (std::size_t i = 0; i < r1.size(); ++i) {
    ++out_degree[r1.row(i)[0]];
    ++in_degree[r1.row(i)[1]];
  }
  for (auto [v, n] : out_degree) EXPECT_EQ(n, 3);
  for (auto [v, n] : in_degree) EXPECT_EQ(n, 3);
}

TEST(Chain, SeedOnlyRelabels) {
  auto a = gen_chain({3, 2, 5, std::nullopt, 1});
  auto b = gen_chain({3, 2, 5, std::nullopt, 1});
  auto c = gen_chain({3, 2, 5, std::nullopt, 2});
  EXPECT_EQ(a.csv, b.csv);
  EXPECT_NE(a.csv, c.csv);
  EXPECT_EQ(total_count(*a.graph), total_count(*c.graph));
}

TEST(Chain, TruncationAndInvalidParameters) {
  auto c = gen_chain({2, 4, 4, std::size_t{5}});
  EXPECT_EQ(c.graph->relation("R1").current().size(), 5u);
  EXPECT_THROW(gen_chain({1, 2, 2}), Error);
  EXPECT_THROW(gen_chain({3, 0, 2}), Error);
}

TEST(Chain, WrittenFilesReload) {
  auto dir = std::filesystem::temp_directory_path() / "cjt_chain_test";
  std::filesystem::remove_all(dir);
  auto c = gen_chain({3, 2, 4});
  write_chain(c, dir.string());
  auto g = load_join_graph((dir / "graph.json").string());
  EXPECT_EQ(total_count(*g), total_count(*c.graph));
  std::filesystem::remove_all(dir);
}

TEST(ChainBench, FactorizedStaysLinearNaiveFollowsFormula) {
  ChainBenchOptions o;
  o.r_min = 2;
  o.r_max = 6;
  o.f = 3;
  o.d = 4;
  auto points = bench_chain(o);
  ASSERT_EQ(points.size(), 5u);
  for (const auto& p : points) {
    EXPECT_TRUE(p.naive_measured);
    EXPECT_TRUE(p.answers_agree);
    EXPECT_DOUBLE_EQ(p.naive_rows, chain_join_size(p.r, o.f, o.d));
    EXPECT_LE(p.factorized_max_rows, static_cast<std::size_t>(o.f * p.r * o.d));
    EXPECT_EQ(p.factorized_messages, static_cast<std::size_t>(p.r - 1));
  }
}

nlohmann::json progressive_workload() {
  return nlohmann::json::parse(R"({
    "name": "progressive",
    "chain": {"r": 5, "f": 3, "d": 6, "seed": 3},
    "visualizations": [{"id": "v1", "query": {"group_by": ["A1"]}}],
    "interactions": [
      {"viz": "v1", "delta": {"add_predicates": [{"attr": "A6", "op": "=", "value": "v1"}]}, "think": 0},
      {"viz": "v1", "delta": {"add_predicates": [{"attr": "A4", "op": "in", "values": ["v1", "v2", "v3"]}]}},
      {"viz": "v1", "delta": {}},
      {"viz": "v1", "delta": {"add_predicates": [{"attr": "A3", "op": "<>", "value": "v0"}]}},
      {"viz": "v1", "delta": {"remove_predicates": ["A6"]}}
    ]
  })");
}

TEST(Workload, ModesAgreeAndOnlineNeverExceedsOffline) {
  auto w = parse_workload(progressive_workload(), ".");
  auto report = run_workload(w);
  EXPECT_TRUE(report.answers_agree);
  std::map<std::pair<Mode, std::size_t>, StepRecord> records;
  for (const auto& s : report.steps) records[{s.mode, s.step}] = s;
  auto by = [&](Mode m, std::size_t i) { return records.at({m, i}).computed; };
  ASSERT_EQ(report.steps.size(), 4 * w.steps.size());
  std::size_t offline = 0, online = 0;
  for (std::size_t i = 0; i < w.steps.size(); ++i) {
    EXPECT_LE(by(Mode::kOnline, i), by(Mode::kOffline, i)) << "step " << i;
    offline += by(Mode::kOffline, i);
    online += by(Mode::kOnline, i);
  }
  EXPECT_LT(online, offline);
  // Step 2 repeats step 1.
  EXPECT_EQ(by(Mode::kOnline, 2), 0u);
}

TEST(Workload, ReportIsDeterministicApartFromWallTime) {
  auto w = parse_workload(progressive_workload(), ".");
  auto strip = [](nlohmann::json j) {
    for (auto& s : j["steps"]) s.erase("wall_ms");
    return j;
  };
  EXPECT_EQ(strip(run_workload(w).to_json()), strip(run_workload(w).to_json()));
  const auto csv = run_workload(w).to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "mode,step,viz,wall_ms,computed,reused,max_intermediate_rows,steiner_bags,answer_rows,matches_naive");
}

TEST(Workload, MalformedDocumentsAreRejected) {
  auto doc = progressive_workload();
  doc["interactions"][0]["viz"] = "nope";
  try {
    parse_workload(doc, ".");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
  }
  EXPECT_THROW(parse_workload(nlohmann::json::object(), "."), Error);
  auto bad_mode = progressive_workload();
  bad_mode["modes"] = {"fast"};
  EXPECT_THROW(parse_workload(bad_mode, "."), Error);
}

TEST(ThinkSweep, MonotoneAndCorrectAtEveryBudget) {
  auto g = gen_chain({5, 2, 5, std::nullopt, 9}).graph;
  QuerySpec dash, first, next;
  dash.group_by = {"A1"};
  first = dash;
  first.predicates = {Predicate::eq("A6", "v2")};
  next = first;
  next.predicates.push_back(Predicate::eq("A3", "v1"));
  auto points = think_sweep(g, dash, first, next);
  ASSERT_EQ(points.size(), 2 * 4 + 1u);
  for (std::size_t i = 0; i < points.size(); ++i) {
    EXPECT_TRUE(points[i].correct);
    if (i) EXPECT_LE(points[i].computed, points[i - 1].computed);
  }
  EXPECT_LT(points.back().computed, points.front().computed);
}

TEST(Reports, CsvAndSvg) {
  nlohmann::json rows = nlohmann::json::array({{{"a", 1}, {"b", "x,y"}}, {{"a", 2}, {"b", "z"}}});
  EXPECT_EQ(json_rows_to_csv(rows), "a,b\n1,\"x,y\"\n2,z\n");
  auto svg = plot_svg("t<1>", "budget", "ms", {{"online", {{0, 3}, {1, 2}, {2, 0}}}});
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("t&lt;1&gt;"), std::string::npos);
  EXPECT_NE(svg.find("<path d=\"M"), std::string::npos);
}

}  // namespace
}  // namespace cjt
