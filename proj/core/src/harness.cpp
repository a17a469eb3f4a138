#include "cjt/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "cjt/engine.hpp"
#include "cjt/olap.hpp"
#include "cjt/error.hpp"

namespace cjt {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string attr_name(int i) { return "A" + std::to_string(i); }

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) raise(ErrorCode::kIo, "cannot write " + p.string());
  out << text;
}

bool close(double a, double b, double rel) { return std::fabs(a - b) <= rel * std::max(1.0, std::max(std::fabs(a), std::fabs(b))); }

bool annotation_close(const Annotation& a, const Annotation& b, double rel) {
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case SemiringKind::kNaturalCount: return a.count_value() == b.count_value();
    case SemiringKind::kCountSumPair: return a.count_value() == b.count_value() && close(a.real_value(), b.real_value(), rel);
    case SemiringKind::kRealSum: return close(a.real_value(), b.real_value(), rel);
    case SemiringKind::kTropicalMin:
    case SemiringKind::kTropicalMax:
      return a.is_infinite() == b.is_infinite() && (a.is_infinite() || close(a.real_value(), b.real_value(), rel));
    case SemiringKind::kGram: {
      auto x = a.gram_entries(), y = b.gram_entries();
      if (x.size() != y.size()) return false;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (!close(x[i], y[i], rel)) return false;
      }
      return true;
    }
  }
  return false;
}

std::map<std::vector<std::string>, Annotation> decoded(const AnnotatedRelation& r, const Dictionary& dict) {
  std::map<std::vector<std::string>, Annotation> out;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r.annotation(i).is_zero()) continue;
    std::vector<std::string> key;
    for (std::size_t c = 0; c < r.arity(); ++c) key.push_back(r.attrs()[c] + "=" + dict.decode(r.attrs()[c], r.row(i)[c]));
    out.emplace(std::move(key), r.annotation(i));
  }
  return out;
}

std::string csv_cell(const nlohmann::json& v) {
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

ChainData gen_chain(const ChainOptions& o) {
  if (o.r < 2 || o.f < 1 || o.d < 1) raise(ErrorCode::kInvalidArgument, "chain needs r >= 2, f >= 1, d >= 1");
  std::mt19937_64 rng(o.seed);
  std::vector<std::vector<int>> labels(static_cast<std::size_t>(o.r) + 2);
  for (int i = 1; i <= o.r + 1; ++i) {
    auto& perm = labels[static_cast<std::size_t>(i)];
    perm.resize(static_cast<std::size_t>(o.d));
    std::iota(perm.begin(), perm.end(), 0);
    if (o.seed != 0) std::shuffle(perm.begin(), perm.end(), rng);
  }
  auto label = [&](int attr, int v) { return "v" + std::to_string(labels[static_cast<std::size_t>(attr)][static_cast<std::size_t>(v)]); };

  ChainData data;
  nlohmann::json inline_doc;
  const std::string name = "chain_r" + std::to_string(o.r) + "_f" + std::to_string(o.f) + "_d" + std::to_string(o.d);
  data.document = {{"name", name}, {"semiring", "count"}, {"relations", nlohmann::json::array()}};
  inline_doc = data.document;
  for (int i = 1; i <= o.r; ++i) {
    const std::string rel = "R" + std::to_string(i);
    std::string text = attr_name(i) + "," + attr_name(i + 1) + "\n";
    std::size_t rows = 0;
    for (int a = 0; a < o.d; ++a) {
      for (int j = 0; j < o.f; ++j) {
        if (o.n && rows >= *o.n) break;
        const int b = static_cast<int>((static_cast<long long>(a) * o.f + j) % o.d);
        text += label(i, a) + "," + label(i + 1, b) + "\n";
        ++rows;
      }
    }
    data.csv[rel] = text;
    data.document["relations"].push_back({{"name", rel}, {"csv", rel + ".csv"}});
    inline_doc["relations"].push_back({{"name", rel}, {"data", text}});
  }
  data.graph = join_graph_from_json(inline_doc, ".");
  return data;
}

void write_chain(const ChainData& data, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_text(std::filesystem::path(dir) / "graph.json", data.document.dump(2) + "\n");
  for (const auto& [rel, text] : data.csv) write_text(std::filesystem::path(dir) / (rel + ".csv"), text);
}

double chain_join_size(int r, int f, int d) { return static_cast<double>(d) * std::pow(static_cast<double>(f), r); }

std::vector<ChainPoint> bench_chain(const ChainBenchOptions& o) {
  std::vector<ChainPoint> out;
  for (int r = o.r_min; r <= o.r_max; ++r) {
    auto data = gen_chain({r, o.f, o.d, o.n, o.seed});
    auto g = std::shared_ptr<const JoinGraph>(data.graph);
    auto jt = std::make_shared<const JunctionHypertree>(build_jt(*g));
    ChainPoint p;
    p.r = r;
    for (const auto& e : g->relations()) p.relation_rows += e.current().size();

    const QuerySpec q;
    auto t0 = Clock::now();
    auto plan = plan_single(g, jt, q, CostModel(*g));
    AnnotatedTree tree(g, jt, plan.annotations);
    auto exec = execute_plan(tree, plan, store_source(MessageStore{}));
    p.factorized_ms = ms_since(t0);
    p.factorized_messages = exec.computed.size();
    p.factorized_max_rows = exec.stats.max_intermediate_rows;

    const double formula = o.n ? -1.0 : chain_join_size(r, o.f, o.d);
    if (formula >= 0 && formula > o.naive_cap) {
      p.naive_rows = formula;
    } else {
      ExecStats st;
      t0 = Clock::now();
      auto naive = oracle_execute(*g, q, static_cast<std::size_t>(o.naive_cap), &st);
      p.naive_ms = ms_since(t0);
      p.naive_rows = static_cast<double>(st.max_intermediate_rows);
      p.naive_measured = true;
      p.answers_agree = answers_equal(naive, exec.answer, g->dictionary());
    }
    out.push_back(p);
  }
  return out;
}

nlohmann::json to_json(const ChainPoint& p) {
  return {{"r", p.r},
          {"relation_rows", p.relation_rows},
          {"factorized_messages", p.factorized_messages},
          {"factorized_max_rows", p.factorized_max_rows},
          {"factorized_ms", p.factorized_ms},
          {"naive_rows", p.naive_rows},
          {"naive_measured", p.naive_measured},
          {"naive_ms", p.naive_ms},
          {"answers_agree", p.answers_agree}};
}

std::string to_string(Mode m) {
  switch (m) {
    case Mode::kNaive: return "naive";
    case Mode::kFactorized: return "factorized";
    case Mode::kOffline: return "offline";
    case Mode::kOnline: return "online";
  }
  return "?";
}

Mode mode_from_string(const std::string& s) {
  for (Mode m : {Mode::kNaive, Mode::kFactorized, Mode::kOffline, Mode::kOnline}) {
    if (to_string(m) == s) return m;
  }
  raise(ErrorCode::kInvalidArgument, "unknown mode '" + s + "'");
}

Workload parse_workload(const nlohmann::json& doc, const std::string& base_dir) {
  Workload w;
  try {
    w.name = doc.value("name", std::string("workload"));
    w.seed = doc.value("seed", std::uint64_t{0});
    if (doc.contains("chain")) {
      const auto& c = doc.at("chain");
      ChainOptions co;
      co.r = c.value("r", 2);
      co.f = c.value("f", 1);
      co.d = c.value("d", 1);
      if (c.contains("n")) co.n = c.at("n").get<std::size_t>();
      co.seed = c.value("seed", w.seed);
      w.graph = gen_chain(co).graph;
    } else if (doc.contains("graph") && doc.at("graph").is_string()) {
      auto p = std::filesystem::path(doc.at("graph").get<std::string>());
      if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
      w.graph = load_join_graph(p.string());
    } else if (doc.contains("graph")) {
      w.graph = join_graph_from_json(doc.at("graph"), base_dir);
    } else {
      raise(ErrorCode::kParse, "workload needs 'graph' or 'chain'");
    }
    for (const auto& v : doc.at("visualizations")) {
      w.visualizations.emplace_back(v.at("id").get<std::string>(), v.value("query", nlohmann::json::object()).get<QuerySpec>());
    }
    for (const auto& s : doc.value("interactions", nlohmann::json::array())) {
      WorkloadStep step;
      step.viz = s.at("viz").get<std::string>();
      step.delta = s.value("delta", nlohmann::json::object());
      if (s.contains("think") && !s.at("think").is_null()) step.think = s.at("think").get<std::size_t>();
      w.steps.push_back(std::move(step));
    }
    if (doc.contains("modes")) {
      w.modes.clear();
      for (const auto& m : doc.at("modes")) w.modes.push_back(mode_from_string(m.get<std::string>()));
    }
    if (doc.contains("think_ms") && !doc.at("think_ms").is_null()) w.think_ms = doc.at("think_ms").get<double>();
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::kParse, std::string("malformed workload: ") + e.what());
  }
  for (const auto& s : w.steps) {
    auto it = std::find_if(w.visualizations.begin(), w.visualizations.end(), [&](const auto& v) { return v.first == s.viz; });
    if (it == w.visualizations.end()) raise(ErrorCode::kParse, "interaction names unknown visualization '" + s.viz + "'");
  }
  return w;
}

Workload load_workload(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::kIo, "cannot read " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::kParse, path + ": " + e.what());
  }
  return parse_workload(doc, std::filesystem::path(path).parent_path().string());
}

bool answers_equal(const AnnotatedRelation& a, const AnnotatedRelation& b, const Dictionary& dict, double rel) {
  auto x = decoded(a, dict), y = decoded(b, dict);
  if (x.size() != y.size()) return false;
  for (const auto& [k, v] : x) {
    auto it = y.find(k);
    if (it == y.end() || !annotation_close(v, it->second, rel)) return false;
  }
  return true;
}

WorkloadReport run_workload(const Workload& w) {
  WorkloadReport report;
  report.name = w.name;
  std::map<std::string, QuerySpec> dashboards(w.visualizations.begin(), w.visualizations.end());
  auto g = std::shared_ptr<const JoinGraph>(w.graph);
  auto jt = std::make_shared<const JunctionHypertree>(build_jt(*g));
  const CostModel cm(*g);

  // Per-step naive answers anchor every mode.
  std::vector<AnnotatedRelation> truth;
  {
    std::map<std::string, QuerySpec> current = dashboards;
    for (const auto& s : w.steps) {
      current[s.viz] = apply_delta(current[s.viz], s.delta);
      truth.push_back(oracle_execute(*g, current[s.viz]));
    }
  }

  for (Mode mode : w.modes) {
    std::map<std::string, QuerySpec> current = dashboards;
    std::unique_ptr<Manager> manager;
    std::string session;
    if (mode == Mode::kOffline || mode == Mode::kOnline) {
      ManagerConfig cfg;
      cfg.background = mode == Mode::kOnline && w.think_ms.has_value();
      if (mode == Mode::kOffline) {
        cfg.session_reuse = false;
        cfg.use_cache = false;
      }
      manager = std::make_unique<Manager>(cfg);
      const auto gid = manager->register_graph(w.graph);
      for (const auto& [id, q] : w.visualizations) manager->register_dashboard(gid, q, id);
      session = manager->open_session();
    }
    for (std::size_t i = 0; i < w.steps.size(); ++i) {
      const auto& s = w.steps[i];
      current[s.viz] = apply_delta(current[s.viz], s.delta);
      const QuerySpec& q = current[s.viz];
      StepRecord rec;
      rec.mode = mode;
      rec.step = i;
      rec.viz = s.viz;
      AnnotatedRelation answer;
      const auto t0 = Clock::now();
      switch (mode) {
        case Mode::kNaive: {
          ExecStats st;
          answer = oracle_execute(*g, q, 50'000'000, &st);
          rec.max_intermediate_rows = st.max_intermediate_rows;
          break;
        }
        case Mode::kFactorized: {
          auto plan = plan_single(g, jt, q, cm);
          AnnotatedTree tree(g, jt, plan.annotations);
          auto exec = execute_plan(tree, plan, store_source(MessageStore{}));
          answer = std::move(exec.answer);
          rec.computed = exec.computed.size();
          rec.max_intermediate_rows = exec.stats.max_intermediate_rows;
          rec.steiner_bags = jt->size();
          break;
        }
        case Mode::kOffline:
        case Mode::kOnline: {
          auto r = manager->interact(session, s.viz, q);
          answer = std::move(r.answer);
          rec.computed = r.stats.computed;
          rec.reused = r.stats.reused;
          rec.max_intermediate_rows = r.stats.max_intermediate_rows;
          rec.steiner_bags = r.stats.steiner_bags;
          break;
        }
      }
      rec.wall_ms = ms_since(t0);
      rec.answer_rows = answer.size();
      rec.matches_naive = answers_equal(truth[i], answer, g->dictionary());
      report.answers_agree = report.answers_agree && rec.matches_naive;
      report.steps.push_back(rec);

      if (mode == Mode::kOnline) {
        if (w.think_ms) {
          std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(*w.think_ms));
        } else {
          manager->think(session, s.viz, s.think);
        }
      }
    }
  }
  return report;
}

nlohmann::json WorkloadReport::to_json() const {
  nlohmann::json steps_json = nlohmann::json::array();
  for (const auto& s : steps) {
    steps_json.push_back({{"mode", to_string(s.mode)},
                          {"step", s.step},
                          {"viz", s.viz},
                          {"wall_ms", s.wall_ms},
                          {"computed", s.computed},
                          {"reused", s.reused},
                          {"max_intermediate_rows", s.max_intermediate_rows},
                          {"steiner_bags", s.steiner_bags},
                          {"answer_rows", s.answer_rows},
                          {"matches_naive", s.matches_naive}});
  }
  return {{"name", name}, {"answers_agree", answers_agree}, {"steps", steps_json}};
}

std::string WorkloadReport::to_csv() const {
  return json_rows_to_csv(to_json().at("steps"), {"mode", "step", "viz", "wall_ms", "computed", "reused", "max_intermediate_rows",
                                                  "steiner_bags", "answer_rows", "matches_naive"});
}

std::vector<ThinkPoint> think_sweep(const std::shared_ptr<JoinGraph>& g, const QuerySpec& dashboard,
                                    const QuerySpec& first, const QuerySpec& next) {
  const auto expected = oracle_execute(*g, next);
  std::vector<ThinkPoint> out;
  std::size_t total = 0;
  for (std::size_t budget = 0;; ++budget) {
    ManagerConfig cfg;
    cfg.background = false;
    Manager m(cfg);
    const auto gid = m.register_graph(g);
    const auto viz = m.register_dashboard(gid, dashboard).viz;
    const auto session = m.open_session();
    m.interact(session, viz, first);
    m.think(session, viz, budget);
    const auto t0 = Clock::now();
    auto r = m.interact(session, viz, next);
    ThinkPoint p;
    p.budget = budget;
    p.latency_ms = ms_since(t0);
    p.computed = r.stats.computed;
    p.calibration = m.latest(session, viz) ? r.stats.calibration : CalibrationStatus::kNone;
    p.correct = answers_equal(expected, r.answer, g->dictionary());
    out.push_back(p);
    total = 2 * (m.jointree(gid)->size() - 1);
    if (budget >= total) break;
  }
  return out;
}

nlohmann::json to_json(const ThinkPoint& p) {
  return {{"budget", p.budget},
          {"computed", p.computed},
          {"latency_ms", p.latency_ms},
          {"calibration", std::string(to_string(p.calibration))},
          {"correct", p.correct}};
}

std::vector<CubePoint> bench_cube(const CubeBenchOptions& o) {
  auto g = std::shared_ptr<const JoinGraph>(gen_chain({o.r, o.f, o.d, std::nullopt, o.seed}).graph);
  auto jt = std::make_shared<const JunctionHypertree>(build_jt(*g));
  const auto universe = categorical_attributes(*g);
  std::mt19937_64 rng(o.seed);
  std::vector<std::vector<std::string>> queries;
  const std::size_t arity = std::min(o.query_arity, universe.size());
  for (std::size_t i = 0; i < o.queries; ++i) {
    auto pool = universe;
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(arity);
    queries.push_back(sorted_attrs(pool));
  }
  const CostModel cm(*g);
  std::vector<CubePoint> out;
  for (std::size_t k = 0; k <= std::min(o.k_max, universe.size()); ++k) {
    CubePoint p;
    p.k = k;
    PivotOptions po;
    po.row_budget = o.row_budget;
    auto t0 = Clock::now();
    auto set = build_pivots(g, jt, k, po);
    p.build_ms = ms_since(t0);
    p.pivots = set.pivots.size();
    p.pivot_messages = set.messages_computed;
    p.materialized_rows = set.materialized_rows;
    std::size_t computed = 0;
    t0 = Clock::now();
    for (const auto& q : queries) computed += answer_cuboid(set, q, cm).computed;
    const double n = std::max<double>(1.0, static_cast<double>(queries.size()));
    p.avg_query_ms = ms_since(t0) / n;
    p.avg_computed = static_cast<double>(computed) / n;
    out.push_back(p);
  }
  return out;
}

nlohmann::json to_json(const CubePoint& p) {
  return {{"k", p.k},
          {"pivots", p.pivots},
          {"pivot_messages", p.pivot_messages},
          {"materialized_rows", p.materialized_rows},
          {"build_ms", p.build_ms},
          {"avg_computed", p.avg_computed},
          {"avg_query_ms", p.avg_query_ms}};
}

std::shared_ptr<JoinGraph> gen_augment_base(const AugmentBaseOptions& o) {
  if (o.facts < 1 || o.keys < 1 || o.dims < 1) raise(ErrorCode::kInvalidArgument, "augment base needs positive sizes");
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> effect(0.0, 3.0);
  std::normal_distribution<double> noise(0.0, 0.5);
  std::uniform_real_distribution<double> ux(-2.0, 2.0);
  std::vector<double> effects;
  for (int k = 0; k < o.keys; ++k) effects.push_back(effect(rng));
  std::string facts = "k,j,x,y\n";
  for (int i = 0; i < o.facts; ++i) {
    const int k = static_cast<int>(rng() % static_cast<unsigned>(o.keys));
    const int j = static_cast<int>(rng() % static_cast<unsigned>(o.dims));
    const double x = ux(rng);
    const double y = 1.5 * x + effects[static_cast<std::size_t>(k)] + noise(rng);
    char buf[96];
    std::snprintf(buf, sizeof buf, "k%d,j%d,%.17g,%.17g\n", k, j, x, y);
    facts += buf;
  }
  std::string dims = "j,z\n";
  for (int j = 0; j < o.dims; ++j) {
    const int copies = 1 + static_cast<int>(rng() % 2);
    for (int c = 0; c < copies; ++c) dims += "j" + std::to_string(j) + ",z" + std::to_string(c) + "\n";
  }
  nlohmann::json doc{{"name", "augment_base"},
                     {"semiring", {{"kind", "gram"}, {"attrs", {"x", "y"}}}},
                     {"relations", {{{"name", "F"}, {"data", facts}}, {{"name", "D"}, {"data", dims}}}}};
  return join_graph_from_json(doc, ".");
}

AugmentBenchReport bench_augment(const AugmentBaseOptions& base, const CandidateGenOptions& cands) {
  AugmentBenchReport report;
  ManagerConfig cfg;
  cfg.background = false;
  Manager m(cfg);
  auto t0 = Clock::now();
  const auto viz = m.register_dashboard(m.register_graph(gen_augment_base(base)), {}).viz;
  report.calibrate_ms = ms_since(t0);
  auto cjt = m.offline(viz);
  auto gen = generate_candidates(*cjt, {"k"}, "y", cands);
  std::vector<AugmentationCandidate> list;
  for (std::size_t i = 0; i < gen.size(); ++i) {
    report.phi[gen[i].candidate.name] = gen[i].phi;
    if (cands.planted && *cands.planted == i) report.planted = gen[i].candidate.name;
    list.push_back(gen[i].candidate);
  }
  t0 = Clock::now();
  report.ranked = evaluate_candidates(*cjt, list);
  report.evaluate_ms = ms_since(t0);
  for (const auto& r : report.ranked) report.messages += r.messages_computed;
  return report;
}

nlohmann::json to_json(const AugmentBenchReport& r) {
  nlohmann::json ranked = nlohmann::json::array();
  for (const auto& a : r.ranked) {
    auto j = to_json(a);
    j["phi"] = r.phi.count(a.name) ? r.phi.at(a.name) : 0.0;
    ranked.push_back(std::move(j));
  }
  return {{"ranked", ranked},
          {"planted", r.planted},
          {"messages", r.messages},
          {"calibrate_ms", r.calibrate_ms},
          {"evaluate_ms", r.evaluate_ms}};
}

nlohmann::json answer_to_json(const AnnotatedRelation& r, const Dictionary& dict, std::size_t limit) {
  const SemiringSpec& spec = r.spec();
  nlohmann::json rows = nlohmann::json::array();
  std::vector<std::string> names{"intercept"};
  for (std::size_t i = 0; i + 1 < spec.lift_attrs.size(); ++i) names.push_back(spec.lift_attrs[i]);
  bool truncated = false;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const Annotation& a = r.annotation(i);
    if (a.is_zero()) continue;
    if (limit && rows.size() >= limit) {
      truncated = true;
      break;
    }
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < r.arity(); ++c) {
      const auto& attr = r.attrs()[c];
      const std::string text = dict.decode(attr, r.row(i)[c]);
      if (dict.type(attr) == AttrType::kNumeric) row.push_back(std::stod(text));
      else row.push_back(text);
    }
    switch (spec.kind) {
      case SemiringKind::kNaturalCount: row.push_back(a.count_value()); break;
      case SemiringKind::kRealSum: row.push_back(a.real_value()); break;
      case SemiringKind::kCountSumPair: row.push_back({{"count", a.count_value()}, {"sum", a.real_value()}}); break;
      case SemiringKind::kTropicalMin:
      case SemiringKind::kTropicalMax: row.push_back(a.real_value()); break;
      case SemiringKind::kGram: {
        nlohmann::json fit{{"count", a.gram_at(0, 0)}};
        try {
          auto lr = solve_linreg(a);
          nlohmann::json coef = nlohmann::json::object();
          for (std::size_t k = 0; k < names.size() && k < lr.coefficients.size(); ++k) coef[names[k]] = lr.coefficients[k];
          fit["coefficients"] = coef;
          fit["r2"] = lr.r2;
        } catch (const Error& e) {
          fit["error"] = std::string(to_string(e.code()));
        }
        row.push_back(fit);
        break;
      }
    }
    rows.push_back(std::move(row));
  }
  return {{"columns", r.attrs()},
          {"aggregate", std::string(to_string(spec.kind))},
          {"rows", rows},
          {"truncated", truncated}};
}

std::string json_rows_to_csv(const nlohmann::json& rows, std::vector<std::string> cols) {
  if (!rows.is_array() || rows.empty()) return "";
  if (cols.empty()) {
    for (const auto& [k, v] : rows.front().items()) cols.push_back(k);
  }
  std::string out;
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + csv_cell(cols[i]);
  out += "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      out += (i ? "," : "") + (row.contains(cols[i]) ? csv_cell(row.at(cols[i])) : std::string());
    }
    out += "\n";
  }
  return out;
}

std::string plot_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                     const std::vector<PlotSeries>& series) {
  constexpr double W = 640, H = 400, L = 70, R = 150, T = 40, B = 50;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool any = false;
  for (const auto& s : series) {
    for (auto [x, y] : s.points) {
      if (!any) {
        x0 = x1 = x;
        y1 = y;
        any = true;
      }
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (x1 == x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

  std::ostringstream svg;
  svg.precision(6);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(title) << "</text>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4, yv = y0 + (y1 - y0) * i / 4;
    svg << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << xv << "</text>\n";
    svg << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << yv << "</text>\n";
  }
  svg << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">" << xml_escape(x_label) << "</text>\n";
  svg << "<text transform=\"translate(16," << (T + H - B) / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << xml_escape(y_label)
      << "</text>\n";
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = colors[si % 6];
    std::string path;
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      const auto [x, y] = s.points[i];
      std::ostringstream seg;
      seg.precision(6);
      if (i == 0) {
        seg << "M" << px(x) << "," << py(y);
      } else {
        seg << " H" << px(x) << " V" << py(y);
      }
      path += seg.str();
    }
    svg << "<path d=\"" << path << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * (si + 1) << "\" fill=\"" << color << "\">" << xml_escape(s.label)
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace cjt
