#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cjt {

enum class SemiringKind {
  kNaturalCount,
  kRealSum,
  kCountSumPair,
  kTropicalMin,
  kTropicalMax,
  kGram,
};

std::string_view to_string(SemiringKind kind);
SemiringKind semiring_kind_from_string(std::string_view name);

/// Which aggregate a relation's annotations carry, and which tuple attributes
/// feed the lift. RealSum, CountSumPair and the tropical kinds read a single
/// attribute; Gram reads an ordered list of variables whose last entry is the
/// regression target by convention.
struct SemiringSpec {
  SemiringKind kind = SemiringKind::kNaturalCount;
  std::vector<std::string> lift_attrs;

  static SemiringSpec count() { return {}; }
  static SemiringSpec sum(std::string attr) { return {SemiringKind::kRealSum, {std::move(attr)}}; }
  static SemiringSpec count_sum(std::string attr) {
    return {SemiringKind::kCountSumPair, {std::move(attr)}};
  }
  static SemiringSpec min(std::string attr) { return {SemiringKind::kTropicalMin, {std::move(attr)}}; }
  static SemiringSpec max(std::string attr) { return {SemiringKind::kTropicalMax, {std::move(attr)}}; }
  static SemiringSpec gram(std::vector<std::string> variables) {
    return {SemiringKind::kGram, std::move(variables)};
  }

  /// Side length of the gram matrix: one row for the count plus one per variable.
  std::size_t gram_dim() const { return lift_attrs.size() + 1; }

  /// Stable text form, used in fingerprints and reports.
  std::string canonical() const;

  bool operator==(const SemiringSpec&) const = default;
};

/// One semiring element. The active fields depend on `kind()`:
/// count for NaturalCount, real for RealSum, (count, real) for CountSumPair,
/// real or infinity for the tropical kinds, and a dense symmetric matrix for Gram.
class Annotation {
 public:
  Annotation() = default;

  static Annotation zero(const SemiringSpec& spec);
  static Annotation one(const SemiringSpec& spec);

  static Annotation count(std::uint64_t n);
  static Annotation real(double v);
  static Annotation count_sum(std::uint64_t n, double sum);
  static Annotation tropical_min(double v);
  static Annotation tropical_max(double v);
  static Annotation tropical_infinity(SemiringKind kind);
  /// Row-major, `dim * dim` entries; must be symmetric.
  static Annotation gram(std::size_t dim, std::vector<double> entries);

  SemiringKind kind() const { return kind_; }
  std::uint64_t count_value() const { return count_; }
  double real_value() const { return real_; }
  bool is_infinite() const { return infinite_; }
  std::size_t gram_dim() const { return dim_; }
  double gram_at(std::size_t row, std::size_t col) const { return gram_[row * dim_ + col]; }
  std::span<const double> gram_entries() const { return gram_; }

  bool is_zero() const;

  /// Numeric reading for reports and SQL parity: count, sum, or tropical value.
  double scalar() const;

  /// Gram padded with zero rows/cols so that old variable `i` lands at
  /// `placement[i]` (entry 0, the count, always stays at 0).
  Annotation embed_gram(std::size_t new_dim, std::span<const std::size_t> placement) const;

  void append_canonical(std::string& out) const;
  std::string to_string() const;

  bool operator==(const Annotation&) const = default;

  friend Annotation combine(const Annotation& a, const Annotation& b);
  friend Annotation multiply(const Annotation& a, const Annotation& b);
  friend void combine_into(Annotation& acc, const Annotation& b);

 private:
  SemiringKind kind_ = SemiringKind::kNaturalCount;
  bool infinite_ = false;
  std::uint32_t dim_ = 0;
  std::uint64_t count_ = 0;
  double real_ = 0.0;
  std::vector<double> gram_;
};

/// ⊕ of two annotations of the same kind.
Annotation combine(const Annotation& a, const Annotation& b);
/// ⊗ of two annotations of the same kind.
Annotation multiply(const Annotation& a, const Annotation& b);
/// In-place ⊕, avoiding a copy of gram storage.
void combine_into(Annotation& acc, const Annotation& b);

bool approx_equal(const Annotation& a, const Annotation& b, double rel_tol = 1e-9);

/// Lift a tuple given the lift attribute values aligned with `spec.lift_attrs`.
/// A missing entry means "not owned by this relation" and contributes the ⊗
/// identity component (count 1, zero sum, zero feature).
Annotation lift(std::span<const std::optional<double>> values, const SemiringSpec& spec);

/// Strict lift over named text fields: every lift attribute must be present
/// and parse as a number.
Annotation lift(const std::map<std::string, std::string, std::less<>>& tuple,
                const SemiringSpec& spec);

struct LinregOptions {
  double ridge = 1e-9;
  /// Index of the target among the gram variables; defaults to the last.
  std::optional<std::size_t> target;
};

struct LinregResult {
  /// Intercept first, then one weight per non-target variable in gram order.
  std::vector<double> coefficients;
  double r2 = 0.0;
  double count = 0.0;
};

/// Least-squares fit from the normal equations assembled out of a gram
/// annotation. Throws kSingular when the system is rank deficient after ridge.
LinregResult solve_linreg(const Annotation& gram, const LinregOptions& options = {});

/// Coefficient of determination of `coefficients` evaluated on the rows
/// summarised by `gram` (train or held-out).
double r2_from_gram(const Annotation& gram, std::span<const double> coefficients,
                    std::size_t target);

}  // namespace cjt
