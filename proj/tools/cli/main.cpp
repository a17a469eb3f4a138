#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "cjt/error.hpp"
#include "cjt/harness.hpp"
#include "cjt/sqlgen.hpp"
#include "server.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) cjt::raise(cjt::ErrorCode::kIo, "cannot write " + p.string());
  out << text;
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) cjt::raise(cjt::ErrorCode::kIo, "cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    cjt::raise(cjt::ErrorCode::kParse, path + ": " + e.what());
  }
}

/// Writes <out>/<stem>.json and <out>/<stem>.csv and prints where they went.
void emit_report(const std::string& out, const std::string& stem, const json& report, const json& rows) {
  const auto j = fs::path(out) / (stem + ".json");
  const auto c = fs::path(out) / (stem + ".csv");
  write_file(j, report.dump(2) + "\n");
  write_file(c, cjt::json_rows_to_csv(rows));
  std::cout << json{{"report", j.string()}, {"csv", c.string()}}.dump() << std::endl;
}

cjt::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Calibrated junction hypertree query engine"};
  app.require_subcommand(1);

  // load
  std::string load_path;
  auto* load = app.add_subcommand("load", "Ingest a graph document and its CSV files");
  load->add_option("graph", load_path, "Graph JSON document")->required();

  // serve
  cjt::ServerOptions sopt;
  std::string serve_graph;
  auto* serve = app.add_subcommand("serve", "Start the HTTP service");
  serve->add_option("--host", sopt.host, "Bind address");
  serve->add_option("--port", sopt.port, "Port; 0 picks an ephemeral one");
  serve->add_option("--static", sopt.static_dir, "UI bundle directory");
  serve->add_option("--data-dir", sopt.data_dir, "Base directory for CSV paths in posted graphs");
  serve->add_option("--graph", serve_graph, "Graph document to register at startup");
  serve->add_option("--answer-limit", sopt.answer_limit, "Groups per answer; 0 keeps all");

  // bench
  auto* bench = app.add_subcommand("bench", "Run a benchmark suite");
  bench->require_subcommand(1);
  std::string out_dir = "reports";
  bench->add_option("--out", out_dir, "Report directory")->capture_default_str();

  cjt::ChainBenchOptions chain;
  auto* bchain = bench->add_subcommand("chain", "Factorized vs naive over growing chains");
  bchain->add_option("--r", chain.r_max, "Largest relation count")->capture_default_str();
  bchain->add_option("--r-min", chain.r_min, "Smallest relation count")->capture_default_str();
  bchain->add_option("--f", chain.f, "Fanout")->capture_default_str();
  bchain->add_option("--d", chain.d, "Domain size")->capture_default_str();
  bchain->add_option("--n", chain.n, "Rows kept per relation");
  bchain->add_option("--seed", chain.seed, "Label seed");
  bchain->add_option("--naive-cap", chain.naive_cap, "Largest join executed naively")->capture_default_str();

  std::string workload_path;
  auto* bwork = bench->add_subcommand("workload", "Replay an interaction workload in every mode");
  bwork->add_option("workload", workload_path, "Workload JSON")->required();

  cjt::CubeBenchOptions cube;
  auto* bcube = bench->add_subcommand("cube", "Pivot sets of growing arity");
  bcube->add_option("--r", cube.r)->capture_default_str();
  bcube->add_option("--f", cube.f)->capture_default_str();
  bcube->add_option("--d", cube.d)->capture_default_str();
  bcube->add_option("--k-max", cube.k_max)->capture_default_str();
  bcube->add_option("--queries", cube.queries)->capture_default_str();
  bcube->add_option("--arity", cube.query_arity, "Group-by attributes per query")->capture_default_str();
  bcube->add_option("--seed", cube.seed)->capture_default_str();

  cjt::AugmentBaseOptions abase;
  cjt::CandidateGenOptions acand;
  acand.planted = 7;
  auto* baug = bench->add_subcommand("augment", "Rank synthetic augmentation candidates");
  baug->add_option("--seed", abase.seed)->capture_default_str();
  baug->add_option("--facts", abase.facts)->capture_default_str();
  baug->add_option("--keys", abase.keys)->capture_default_str();
  baug->add_option("--candidates", acand.count)->capture_default_str();
  baug->add_option("--planted", acand.planted, "Index of the candidate copying the per-key mean");

  int think_r = 6, think_f = 3, think_d = 6;
  std::uint64_t think_seed = 1;
  auto* bthink = bench->add_subcommand("think", "Next-query cost against think-time budget");
  bthink->add_option("--r", think_r)->capture_default_str();
  bthink->add_option("--f", think_f)->capture_default_str();
  bthink->add_option("--d", think_d)->capture_default_str();
  bthink->add_option("--seed", think_seed)->capture_default_str();

  // gen
  cjt::ChainOptions gen_opt{8, 10, 10};
  std::string gen_out = "chain";
  auto* gen = app.add_subcommand("gen", "Write a synthetic chain database");
  gen->add_option("--r", gen_opt.r)->capture_default_str();
  gen->add_option("--f", gen_opt.f)->capture_default_str();
  gen->add_option("--d", gen_opt.d)->capture_default_str();
  gen->add_option("--n", gen_opt.n);
  gen->add_option("--seed", gen_opt.seed);
  gen->add_option("--out", gen_out)->capture_default_str();

  // sqlgen
  std::string sql_graph, sql_query, sql_out = "sql";
  cjt::SqlNaming naming;
  auto* sqlgen = app.add_subcommand("sqlgen", "Emit SQL scripts for a query plan");
  sqlgen->add_option("graph", sql_graph, "Graph JSON document")->required();
  sqlgen->add_option("--query", sql_query, "Query spec JSON file");
  sqlgen->add_option("--prefix", naming.prefix, "Message table prefix")->capture_default_str();
  sqlgen->add_option("--out", sql_out)->capture_default_str();

  // plot
  std::string plot_in, plot_out;
  auto* plot = app.add_subcommand("plot", "Render a think or chain report as SVG");
  plot->add_option("report", plot_in, "Report JSON")->required();
  plot->add_option("--out", plot_out, "SVG path (default: report path with .svg)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << cjt::error_body(cjt::ErrorCode::kInvalidArgument, e.what()).dump() << std::endl;
    return 2;
  }

  try {
    if (*load) {
      auto g = cjt::load_join_graph(load_path);
      auto jt = cjt::build_jt(*g);
      json rels = json::array();
      for (const auto& r : g->relations()) {
        rels.push_back({{"name", r.name}, {"attrs", r.attrs}, {"rows", r.current().size()}, {"versions", r.versions.size()}});
      }
      std::cout << json{{"graph", g->id()}, {"semiring", cjt::to_json(g->spec())}, {"relations", rels}, {"bags", jt.size()}}.dump(2)
                << std::endl;
    } else if (*serve) {
      cjt::Manager manager(cjt::config_from_env());
      if (!serve_graph.empty()) manager.register_graph(cjt::load_join_graph(serve_graph));
      cjt::Server server(manager, sopt);
      const int port = server.bind();
      std::cout << json{{"port", port}, {"host", sopt.host}}.dump() << std::endl;
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      server.listen();
      g_server = nullptr;
    } else if (*bchain) {
      auto points = cjt::bench_chain(chain);
      json rows = json::array();
      for (const auto& p : points) rows.push_back(cjt::to_json(p));
      json report{{"kind", "chain"}, {"f", chain.f}, {"d", chain.d}, {"points", rows}};
      emit_report(out_dir, "chain", report, rows);
    } else if (*bwork) {
      auto report = cjt::run_workload(cjt::load_workload(workload_path));
      const auto j = fs::path(out_dir) / "workload.json";
      const auto c = fs::path(out_dir) / "workload.csv";
      write_file(j, report.to_json().dump(2) + "\n");
      write_file(c, report.to_csv());
      std::cout << json{{"report", j.string()}, {"csv", c.string()}, {"answers_agree", report.answers_agree}}.dump() << std::endl;
      if (!report.answers_agree) return 1;
    } else if (*bcube) {
      auto points = cjt::bench_cube(cube);
      json rows = json::array();
      for (const auto& p : points) rows.push_back(cjt::to_json(p));
      emit_report(out_dir, "cube", {{"kind", "cube"}, {"r", cube.r}, {"f", cube.f}, {"d", cube.d}, {"points", rows}}, rows);
    } else if (*baug) {
      auto report = cjt::to_json(cjt::bench_augment(abase, acand));
      json rows = json::array();
      for (const auto& r : report.at("ranked")) {
        rows.push_back({{"name", r.at("name")}, {"phi", r.at("phi")}, {"r2_train", r.at("r2_train")},
                        {"messages_computed", r.at("messages_computed")}});
      }
      report["kind"] = "augment";
      emit_report(out_dir, "augment", report, rows);
    } else if (*bthink) {
      auto g = cjt::gen_chain({think_r, think_f, think_d, std::nullopt, think_seed}).graph;
      cjt::QuerySpec dash, first, next;
      dash.group_by = {"A1"};
      first = dash;
      first.predicates = {cjt::Predicate::eq("A" + std::to_string(think_r + 1), "v1")};
      next = first;
      next.predicates.push_back(cjt::Predicate::eq("A" + std::to_string(think_r / 2 + 1), "v1"));
      auto points = cjt::think_sweep(g, dash, first, next);
      json rows = json::array();
      cjt::PlotSeries latency{"latency (ms)", {}}, computed{"messages computed", {}};
      for (const auto& p : points) {
        rows.push_back(cjt::to_json(p));
        latency.points.emplace_back(static_cast<double>(p.budget), p.latency_ms);
        computed.points.emplace_back(static_cast<double>(p.budget), static_cast<double>(p.computed));
      }
      emit_report(out_dir, "think", {{"kind", "think"}, {"r", think_r}, {"f", think_f}, {"d", think_d}, {"points", rows}}, rows);
      write_file(fs::path(out_dir) / "think.svg",
                 cjt::plot_svg("Next query vs think-time budget", "budget (messages)", "value", {latency, computed}));
    } else if (*gen) {
      auto data = cjt::gen_chain(gen_opt);
      cjt::write_chain(data, gen_out);
      std::cout << json{{"graph", (fs::path(gen_out) / "graph.json").string()},
                        {"join_size", gen_opt.n ? -1.0 : cjt::chain_join_size(gen_opt.r, gen_opt.f, gen_opt.d)}}
                       .dump()
                << std::endl;
    } else if (*sqlgen) {
      auto g = cjt::load_join_graph(sql_graph);
      auto cg = std::shared_ptr<const cjt::JoinGraph>(g);
      auto jt = std::make_shared<const cjt::JunctionHypertree>(cjt::build_jt(*g));
      cjt::QuerySpec q;
      if (!sql_query.empty()) q = read_json(sql_query).get<cjt::QuerySpec>();
      auto plan = cjt::plan_single(cg, jt, q, cjt::CostModel(*g));
      cjt::AnnotatedTree tree(cg, jt, plan.annotations);
      const auto script = cjt::emit_plan_sql(tree, plan, naming);
      write_file(fs::path(sql_out) / "tables.sql", cjt::emit_graph_tables_sql(*g));
      write_file(fs::path(sql_out) / "plan.sql", cjt::join_statements(script));
      write_file(fs::path(sql_out) / "naive.sql", cjt::emit_naive_sql(*g, q) + "\n");
      std::cout << json{{"dir", sql_out}, {"statements", script.size()}, {"root", plan.root}}.dump() << std::endl;
    } else if (*plot) {
      auto report = read_json(plot_in);
      const std::string kind = report.value("kind", std::string());
      std::vector<cjt::PlotSeries> series;
      std::string title, x, y;
      if (kind == "think") {
        cjt::PlotSeries lat{"latency (ms)", {}}, comp{"messages computed", {}};
        for (const auto& p : report.at("points")) {
          lat.points.emplace_back(p.at("budget").get<double>(), p.at("latency_ms").get<double>());
          comp.points.emplace_back(p.at("budget").get<double>(), p.at("computed").get<double>());
        }
        series = {lat, comp};
        title = "Next query vs think-time budget";
        x = "budget (messages)";
        y = "value";
      } else if (kind == "chain") {
        cjt::PlotSeries fac{"factorized max rows (log10)", {}}, nai{"naive join rows (log10)", {}};
        for (const auto& p : report.at("points")) {
          const double r = p.at("r").get<double>();
          fac.points.emplace_back(r, std::log10(std::max(1.0, p.at("factorized_max_rows").get<double>())));
          nai.points.emplace_back(r, std::log10(std::max(1.0, p.at("naive_rows").get<double>())));
        }
        series = {fac, nai};
        title = "Intermediate rows by chain length";
        x = "relations";
        y = "log10 rows";
      } else {
        cjt::raise(cjt::ErrorCode::kInvalidArgument, "plot supports think and chain reports");
      }
      if (plot_out.empty()) plot_out = fs::path(plot_in).replace_extension(".svg").string();
      write_file(plot_out, cjt::plot_svg(title, x, y, series));
      std::cout << json{{"svg", plot_out}}.dump() << std::endl;
    }
  } catch (const cjt::Error& e) {
    std::cerr << cjt::error_body(e.code(), e.what()).dump() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << cjt::error_body(cjt::ErrorCode::kInternal, e.what()).dump() << std::endl;
    return 2;
  }
  return 0;
}
