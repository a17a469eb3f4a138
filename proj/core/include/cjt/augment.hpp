#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cjt/manager.hpp"

namespace cjt {

/// A relation over join keys carrying one numeric feature, annotated in the
/// gram semiring over that single feature.
struct AugmentationCandidate {
  std::string name;
  std::vector<std::string> keys;
  std::string feature;
  AnnotatedRelation data;
  std::optional<BagId> bag;
};

AugmentationCandidate make_candidate(std::string name, std::vector<std::string> keys, std::string feature,
                                     const std::vector<std::pair<std::vector<std::string>, double>>& rows,
                                     Dictionary& dict);

/// Descriptor: {"name", "csv", "keys": [...], "feature", "bag"?}. The CSV has
/// one column per key plus the feature column.
AugmentationCandidate load_candidate(const nlohmann::json& descriptor, const std::string& base_dir, Dictionary& dict);

struct AugmentOptions {
  /// Regression target among the graph's lift attributes; defaults to the last.
  std::optional<std::string> target;
  double ridge = 1e-9;
  /// Calibrated CJT over held-out rows of the same schema.
  const CjtState* heldout = nullptr;
};

struct AugmentResult {
  std::string name;
  BagId bag = 0;
  /// Gram variable order: the graph's lift attributes, then the feature.
  std::vector<std::string> variables;
  std::vector<std::string> coefficient_names;
  std::vector<double> coefficients;
  double r2_train = 0.0;
  std::optional<double> r2_heldout;
  std::size_t messages_computed = 0;
  std::size_t heldout_messages = 0;
  Annotation gram;
};

nlohmann::json to_json(const AugmentResult& r);

/// Overlays the candidate as a new bag next to the lowest-id bag holding all
/// its keys, computes the one message into it and fits the regression. The
/// CJT must hold every message into that bag.
AugmentResult attach_and_train(const CjtState& cjt, const AugmentationCandidate& cand,
                               const AugmentOptions& options = {});

/// One result per candidate, best R2 first (held-out when available), ties by
/// name.
std::vector<AugmentResult> evaluate_candidates(const CjtState& cjt, const std::vector<AugmentationCandidate>& cands,
                                               const AugmentOptions& options = {});

struct CandidateGenOptions {
  std::size_t count = 30;
  /// Mean of the exponential draw whose reciprocal sets the blend weight.
  double exp_mean = 10.0;
  std::uint64_t seed = 1;
  /// Candidate index that copies the per-key target mean exactly.
  std::optional<std::size_t> planted;
};

struct GeneratedCandidate {
  AugmentationCandidate candidate;
  double phi = 0.0;
};

/// Per-key mean of the target over the CJT's join, computed from the gram
/// absorption at the bag holding `keys`.
std::vector<std::pair<std::vector<std::string>, double>> per_key_target_mean(const CjtState& cjt,
                                                                             const std::vector<std::string>& keys,
                                                                             const std::string& target);

/// Synthetic candidates: value = phi * mean(key) + (1 - phi) * noise with
/// phi = min(1, 1 / Exp(exp_mean)).
std::vector<GeneratedCandidate> generate_candidates(const CjtState& cjt, const std::vector<std::string>& keys,
                                                    const std::string& target, const CandidateGenOptions& options);

struct MultiKeyResult {
  AnnotatedRelation relation;
  std::size_t computed = 0;
  std::size_t steiner_bags = 0;
};

/// The CJT's query regrouped by `keys`, planned against its messages.
MultiKeyResult multi_key_aggregate(const CjtState& cjt, const std::vector<std::string>& keys, const CostModel& cm,
                                   const PlanOptions& options = {});

}  // namespace cjt
