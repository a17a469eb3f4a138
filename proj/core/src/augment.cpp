#include "cjt/augment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "cjt/error.hpp"

namespace cjt {

AugmentationCandidate make_candidate(std::string name, std::vector<std::string> keys, std::string feature,
                                     const std::vector<std::pair<std::vector<std::string>, double>>& rows,
                                     Dictionary& dict) {
  if (keys.empty()) raise(ErrorCode::kInvalidArgument, "candidate '" + name + "' has no join keys");
  std::vector<std::string> sorted = sorted_attrs(keys);
  std::vector<std::size_t> pos(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    pos[i] = static_cast<std::size_t>(std::find(keys.begin(), keys.end(), sorted[i]) - keys.begin());
    if (!dict.has(sorted[i])) raise(ErrorCode::kUnknownAttribute, "candidate key '" + sorted[i] + "' is not in the graph");
  }
  const SemiringSpec spec = SemiringSpec::gram({feature});
  RelationBuilder b(sorted, spec);
  std::vector<Value> t(sorted.size());
  for (const auto& [vals, x] : rows) {
    if (vals.size() != keys.size()) raise(ErrorCode::kInvalidArgument, "candidate row has the wrong key count");
    for (std::size_t i = 0; i < sorted.size(); ++i) t[i] = dict.intern(sorted[i], vals[pos[i]]);
    const std::optional<double> v[] = {x};
    b.add(t, lift(v, spec));
  }
  AugmentationCandidate c;
  c.name = std::move(name);
  c.keys = std::move(sorted);
  c.feature = std::move(feature);
  c.data = std::move(b).build();
  return c;
}

AugmentationCandidate load_candidate(const nlohmann::json& descriptor, const std::string& base_dir, Dictionary& dict) {
  const auto keys = descriptor.at("keys").get<std::vector<std::string>>();
  const auto feature = descriptor.at("feature").get<std::string>();
  std::filesystem::path path = descriptor.at("csv").get<std::string>();
  if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
  TableSchema schema;
  for (const auto& k : keys) schema.columns.push_back({k, dict.has(k) ? dict.type(k) : AttrType::kCategorical, false, {}});
  schema.columns.push_back({feature, AttrType::kNumeric, true, {}});
  AugmentationCandidate c;
  c.name = descriptor.value("name", path.stem().string());
  c.keys = sorted_attrs(keys);
  c.feature = feature;
  c.data = load_csv(path.string(), schema, SemiringSpec::gram({feature}), dict);
  if (descriptor.contains("bag")) c.bag = descriptor.at("bag").get<BagId>();
  return c;
}

nlohmann::json to_json(const AugmentResult& r) {
  nlohmann::json coef = nlohmann::json::object();
  for (std::size_t i = 0; i < r.coefficients.size(); ++i) coef[r.coefficient_names[i]] = r.coefficients[i];
  return {{"name", r.name},
          {"bag", r.bag},
          {"coefficients", coef},
          {"r2_train", r.r2_train},
          {"r2_heldout", r.r2_heldout ? nlohmann::json(*r.r2_heldout) : nlohmann::json(nullptr)},
          {"messages_computed", r.messages_computed}};
}

namespace {

std::size_t target_index(const SemiringSpec& spec, const std::optional<std::string>& target) {
  if (spec.kind != SemiringKind::kGram) raise(ErrorCode::kUnsupportedSemiring, "augmentation needs a gram semiring");
  if (spec.lift_attrs.empty()) raise(ErrorCode::kInvalidArgument, "gram semiring has no variables");
  if (!target) return spec.lift_attrs.size() - 1;
  auto it = std::find(spec.lift_attrs.begin(), spec.lift_attrs.end(), *target);
  if (it == spec.lift_attrs.end()) raise(ErrorCode::kUnknownAttribute, "target '" + *target + "' is not a gram variable");
  return static_cast<std::size_t>(it - spec.lift_attrs.begin());
}

BagId key_bag(const JunctionHypertree& jt, const std::vector<std::string>& keys, std::optional<BagId> hint) {
  auto holds = [&](BagId b) {
    const auto& attrs = jt.bag(b).attrs;
    return std::all_of(keys.begin(), keys.end(),
                       [&](const std::string& k) { return std::binary_search(attrs.begin(), attrs.end(), k); });
  };
  if (hint) {
    if (*hint >= jt.size() || !holds(*hint)) {
      raise(ErrorCode::kAnnotationPlacement, "hinted bag does not contain every candidate key");
    }
    return *hint;
  }
  for (const auto& b : jt.bags()) {
    if (holds(b.id)) return b.id;
  }
  raise(ErrorCode::kAnnotationPlacement, "candidate keys span several bags; use a multi-key aggregate");
}

/// Message from `bag` into the overlaid candidate bag: the absorption at
/// `bag` marginalized onto the keys.
AnnotatedRelation key_message(const CjtState& cjt, BagId bag, const std::vector<std::string>& keys, ExecStats* stats) {
  return absorption(*cjt.tree, bag, store_source(*cjt.store), keys, stats);
}

AnnotatedRelation re_embed(const AnnotatedRelation& r, const SemiringSpec& spec, std::span<const std::size_t> placement) {
  RelationBuilder b(r.attrs(), spec);
  for (std::size_t i = 0; i < r.size(); ++i) b.add(r.row(i), r.annotation(i).embed_gram(spec.gram_dim(), placement));
  return std::move(b).build();
}

Annotation augmented_gram(const CjtState& cjt, BagId bag, const AugmentationCandidate& cand,
                          const SemiringSpec& joint, ExecStats* stats) {
  const SemiringSpec& base = cjt.graph->spec();
  auto msg = key_message(cjt, bag, cand.keys, stats);
  std::vector<std::size_t> old_place(base.lift_attrs.size());
  std::iota(old_place.begin(), old_place.end(), std::size_t{1});
  const std::size_t feature_place[] = {base.lift_attrs.size() + 1};
  auto joined = join(re_embed(msg, joint, old_place), re_embed(cand.data, joint, feature_place));
  return joined.total();
}

}  // namespace

AugmentResult attach_and_train(const CjtState& cjt, const AugmentationCandidate& cand, const AugmentOptions& options) {
  const SemiringSpec& base = cjt.graph->spec();
  const std::size_t target = target_index(base, options.target);
  if (std::find(base.lift_attrs.begin(), base.lift_attrs.end(), cand.feature) != base.lift_attrs.end()) {
    raise(ErrorCode::kInvalidArgument, "candidate feature '" + cand.feature + "' already is a gram variable");
  }
  AugmentResult r;
  r.name = cand.name;
  r.bag = key_bag(*cjt.jt, cand.keys, cand.bag);
  r.variables = base.lift_attrs;
  r.variables.push_back(cand.feature);
  const SemiringSpec joint = SemiringSpec::gram(r.variables);

  ExecStats stats;
  r.gram = augmented_gram(cjt, r.bag, cand, joint, &stats);
  r.messages_computed = 1;

  LinregOptions lo;
  lo.ridge = options.ridge;
  lo.target = target;
  auto fit = solve_linreg(r.gram, lo);
  r.coefficients = fit.coefficients;
  r.r2_train = fit.r2;
  r.coefficient_names.push_back("intercept");
  for (std::size_t i = 0; i < r.variables.size(); ++i) {
    if (i != target) r.coefficient_names.push_back(r.variables[i]);
  }
  if (options.heldout) {
    if (options.heldout->graph->spec() != base) {
      raise(ErrorCode::kKindMismatch, "held-out CJT uses a different semiring");
    }
    const BagId hb = key_bag(*options.heldout->jt, cand.keys, cand.bag);
    auto held = augmented_gram(*options.heldout, hb, cand, joint, nullptr);
    r.heldout_messages = 1;
    r.r2_heldout = r2_from_gram(held, r.coefficients, target);
  }
  return r;
}

std::vector<AugmentResult> evaluate_candidates(const CjtState& cjt, const std::vector<AugmentationCandidate>& cands,
                                               const AugmentOptions& options) {
  std::vector<AugmentResult> out;
  out.reserve(cands.size());
  for (const auto& c : cands) out.push_back(attach_and_train(cjt, c, options));
  std::stable_sort(out.begin(), out.end(), [](const AugmentResult& a, const AugmentResult& b) {
    const double ra = a.r2_heldout.value_or(a.r2_train);
    const double rb = b.r2_heldout.value_or(b.r2_train);
    if (ra != rb) return ra > rb;
    return a.name < b.name;
  });
  return out;
}

std::vector<std::pair<std::vector<std::string>, double>> per_key_target_mean(const CjtState& cjt,
                                                                             const std::vector<std::string>& keys,
                                                                             const std::string& target) {
  const std::size_t t = target_index(cjt.graph->spec(), target);
  const std::vector<std::string> sorted = sorted_attrs(keys);
  auto msg = key_message(cjt, key_bag(*cjt.jt, sorted, std::nullopt), sorted, nullptr);
  std::vector<std::pair<std::vector<std::string>, double>> out;
  const Dictionary& dict = cjt.graph->dictionary();
  for (std::size_t i = 0; i < msg.size(); ++i) {
    const Annotation& g = msg.annotation(i);
    const double c = g.gram_at(0, 0);
    if (c <= 0) continue;
    std::vector<std::string> vals;
    for (std::size_t k = 0; k < sorted.size(); ++k) vals.push_back(dict.decode(sorted[k], msg.row(i)[k]));
    out.emplace_back(std::move(vals), g.gram_at(0, t + 1) / c);
  }
  return out;
}

std::vector<GeneratedCandidate> generate_candidates(const CjtState& cjt, const std::vector<std::string>& keys,
                                                    const std::string& target, const CandidateGenOptions& options) {
  const auto means = per_key_target_mean(cjt, keys, target);
  double mu = 0.0;
  double sd = 1.0;
  if (!means.empty()) {
    for (const auto& [k, m] : means) mu += m;
    mu /= static_cast<double>(means.size());
    double var = 0.0;
    for (const auto& [k, m] : means) var += (m - mu) * (m - mu);
    var /= static_cast<double>(means.size());
    if (var > 0) sd = std::sqrt(var);
  }
  std::mt19937_64 rng(options.seed);
  std::exponential_distribution<double> expo(1.0 / options.exp_mean);
  std::normal_distribution<double> noise(mu, sd);
  std::vector<GeneratedCandidate> out;
  for (std::size_t i = 0; i < options.count; ++i) {
    const double draw = expo(rng);
    double phi = draw > 0 ? std::min(1.0, 1.0 / draw) : 1.0;
    if (options.planted && *options.planted == i) phi = 1.0;
    std::vector<std::pair<std::vector<std::string>, double>> rows;
    rows.reserve(means.size());
    for (const auto& [k, m] : means) rows.emplace_back(k, phi * m + (1.0 - phi) * noise(rng));
    std::string name = "cand_" + std::to_string(i);
    if (name.size() < 7) name.insert(5, 7 - name.size(), '0');
    GeneratedCandidate g;
    g.phi = phi;
    g.candidate = make_candidate(std::move(name), keys, "f_" + std::to_string(i), rows, cjt.graph->dictionary());
    out.push_back(std::move(g));
  }
  return out;
}

MultiKeyResult multi_key_aggregate(const CjtState& cjt, const std::vector<std::string>& keys, const CostModel& cm,
                                   const PlanOptions& options) {
  QuerySpec next = cjt.query;
  next.group_by = keys;
  auto usable = store_source(*cjt.store);
  auto plan = plan_with_reuse(cjt.graph, cjt.jt, cjt.annotations(), next, usable, cm, options);
  AnnotatedTree tree(cjt.graph, cjt.jt, plan.annotations);
  auto exec = execute_plan(tree, plan, usable);
  MultiKeyResult out;
  out.relation = std::move(exec.answer);
  out.computed = exec.computed.size();
  out.steiner_bags = plan.tree.size();
  return out;
}

}  // namespace cjt
