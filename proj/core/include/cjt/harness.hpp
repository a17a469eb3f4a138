#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cjt/augment.hpp"
#include "cjt/manager.hpp"

namespace cjt {

struct ChainOptions {
  int r = 2;
  int f = 1;
  int d = 1;
  /// Keep only the first n rows of each relation.
  std::optional<std::size_t> n;
  /// Shuffles value labels; the join structure does not depend on it.
  std::uint64_t seed = 0;
};

struct ChainData {
  std::shared_ptr<JoinGraph> graph;
  /// Graph document referring to <relation>.csv files.
  nlohmann::json document;
  std::map<std::string, std::string> csv;
};

/// Relations R1(A1, A2) ... Rr(Ar, Ar+1); every value a of A_i is paired
/// with the f values (a*f + j) % d of A_i+1, j < f.
ChainData gen_chain(const ChainOptions& options);
/// Writes graph.json and one CSV per relation into `dir`.
void write_chain(const ChainData& data, const std::string& dir);
/// Full join cardinality of an untruncated chain: d * f^r.
double chain_join_size(int r, int f, int d);

struct ChainPoint {
  int r = 0;
  std::size_t relation_rows = 0;
  std::size_t factorized_messages = 0;
  std::size_t factorized_max_rows = 0;
  double factorized_ms = 0.0;
  double naive_rows = 0.0;
  /// Naive rows come from executing the join rather than the formula.
  bool naive_measured = false;
  double naive_ms = 0.0;
  bool answers_agree = true;
};

struct ChainBenchOptions {
  int r_min = 2;
  int r_max = 8;
  int f = 10;
  int d = 10;
  std::optional<std::size_t> n;
  std::uint64_t seed = 0;
  /// Naive execution runs only while the full join stays under this size.
  double naive_cap = 2'000'000;
};

std::vector<ChainPoint> bench_chain(const ChainBenchOptions& options);
nlohmann::json to_json(const ChainPoint& p);

enum class Mode { kNaive, kFactorized, kOffline, kOnline };
std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

struct WorkloadStep {
  std::string viz;
  nlohmann::json delta;
  /// Think-time after this step, in messages; unlimited when empty.
  std::optional<std::size_t> think;
};

struct Workload {
  std::string name;
  std::shared_ptr<JoinGraph> graph;
  std::vector<std::pair<std::string, QuerySpec>> visualizations;
  std::vector<WorkloadStep> steps;
  std::vector<Mode> modes{Mode::kNaive, Mode::kFactorized, Mode::kOffline, Mode::kOnline};
  /// Wall-clock think-time for Online instead of message budgets.
  std::optional<double> think_ms;
  std::uint64_t seed = 0;
};

/// Reads {name, graph (path, document) | chain {r, f, d, n, seed},
/// visualizations [{id, query}], interactions [{viz, delta, think}], modes,
/// think_ms, seed}.
Workload parse_workload(const nlohmann::json& doc, const std::string& base_dir);
Workload load_workload(const std::string& path);

struct StepRecord {
  Mode mode = Mode::kNaive;
  std::size_t step = 0;
  std::string viz;
  double wall_ms = 0.0;
  std::size_t computed = 0;
  std::size_t reused = 0;
  std::size_t max_intermediate_rows = 0;
  std::size_t steiner_bags = 0;
  std::size_t answer_rows = 0;
  /// Agrees with the naive answer of the same step.
  bool matches_naive = true;
};

struct WorkloadReport {
  std::string name;
  std::vector<StepRecord> steps;
  bool answers_agree = true;

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

WorkloadReport run_workload(const Workload& w);

/// Same groups and annotations (within `rel` for real values), ignoring zero rows.
bool answers_equal(const AnnotatedRelation& a, const AnnotatedRelation& b, const Dictionary& dict, double rel = 1e-9);

struct ThinkPoint {
  std::size_t budget = 0;
  std::size_t computed = 0;
  double latency_ms = 0.0;
  CalibrationStatus calibration = CalibrationStatus::kNone;
  bool correct = true;
};

/// For each budget 0..2(|V|-1): a fresh session runs `first`, thinks for
/// `budget` messages, then runs `next`.
std::vector<ThinkPoint> think_sweep(const std::shared_ptr<JoinGraph>& g, const QuerySpec& dashboard,
                                    const QuerySpec& first, const QuerySpec& next);
nlohmann::json to_json(const ThinkPoint& p);

struct CubeBenchOptions {
  int r = 8;
  int f = 10;
  int d = 10;
  std::size_t k_max = 2;
  std::size_t queries = 100;
  std::size_t query_arity = 4;
  std::uint64_t seed = 1;
  std::size_t row_budget = 50'000'000;
};

struct CubePoint {
  std::size_t k = 0;
  std::size_t pivots = 0;
  std::size_t pivot_messages = 0;
  std::size_t materialized_rows = 0;
  double build_ms = 0.0;
  double avg_computed = 0.0;
  double avg_query_ms = 0.0;
};

/// Pivot sets of arity 0..k_max over a chain, each answering the same random
/// group-by queries.
std::vector<CubePoint> bench_cube(const CubeBenchOptions& options);
nlohmann::json to_json(const CubePoint& p);

struct AugmentBaseOptions {
  std::uint64_t seed = 1;
  int facts = 2000;
  int keys = 50;
  int dims = 10;
};

/// Fact F(k, j; x, y) with y = 1.5x + effect(k) + noise, and dimension
/// D(j, z), annotated in the gram semiring over (x, y).
std::shared_ptr<JoinGraph> gen_augment_base(const AugmentBaseOptions& options);

struct AugmentBenchReport {
  std::vector<AugmentResult> ranked;
  std::map<std::string, double> phi;
  std::string planted;
  std::size_t messages = 0;
  double calibrate_ms = 0.0;
  double evaluate_ms = 0.0;
};

AugmentBenchReport bench_augment(const AugmentBaseOptions& base, const CandidateGenOptions& candidates);
nlohmann::json to_json(const AugmentBenchReport& r);

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

/// Step chart as a standalone SVG document.
std::string plot_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                     const std::vector<PlotSeries>& series);

/// Wire form of an answer: {columns, aggregate, rows, truncated}, one row per
/// group holding the group values then the aggregate. Gram groups carry the
/// solved regression instead of the matrix. `limit` 0 keeps every group.
nlohmann::json answer_to_json(const AnnotatedRelation& r, const Dictionary& dict, std::size_t limit = 0);

/// CSV from an array of flat JSON objects; without `columns`, the keys of
/// the first object.
std::string json_rows_to_csv(const nlohmann::json& rows, std::vector<std::string> columns = {});

}  // namespace cjt
