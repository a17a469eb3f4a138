#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cjt/semiring.hpp"

namespace cjt::testing {

/// Seeded generator helpers shared by the property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  std::mt19937_64& rng() { return rng_; }

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }

  template <class T>
  const T& pick(const std::vector<T>& xs) {
    return xs[static_cast<std::size_t>(uniform(0, static_cast<int>(xs.size()) - 1))];
  }

  /// A random element of the semiring described by `spec`. Real values are
  /// small integers so sums stay exact.
  Annotation annotation(const SemiringSpec& spec) {
    switch (spec.kind) {
      case SemiringKind::kNaturalCount: return Annotation::count(static_cast<std::uint64_t>(uniform(0, 9)));
      case SemiringKind::kRealSum: return Annotation::real(uniform(-9, 9));
      case SemiringKind::kCountSumPair:
        return Annotation::count_sum(static_cast<std::uint64_t>(uniform(0, 9)), uniform(-9, 9));
      case SemiringKind::kTropicalMin:
        return coin(0.1) ? Annotation::tropical_infinity(spec.kind) : Annotation::tropical_min(uniform(-9, 9));
      case SemiringKind::kTropicalMax:
        return coin(0.1) ? Annotation::tropical_infinity(spec.kind) : Annotation::tropical_max(uniform(-9, 9));
      case SemiringKind::kGram: {
        Annotation acc = Annotation::zero(spec);
        int rows = uniform(0, 3);
        for (int r = 0; r < rows; ++r) {
          std::vector<std::optional<double>> xs;
          for (std::size_t i = 0; i < spec.lift_attrs.size(); ++i) {
            xs.emplace_back(coin(0.8) ? std::optional<double>(uniform(-5, 5)) : std::nullopt);
          }
          combine_into(acc, lift(xs, spec));
        }
        return acc;
      }
    }
    return Annotation::count(0);
  }

 private:
  std::mt19937_64 rng_;
};

inline std::vector<SemiringSpec> all_specs() {
  return {SemiringSpec::count(),         SemiringSpec::sum("v"), SemiringSpec::count_sum("v"),
          SemiringSpec::min("v"),        SemiringSpec::max("v"), SemiringSpec::gram({"x"}),
          SemiringSpec::gram({"x", "z", "y"})};
}

}  // namespace cjt::testing
