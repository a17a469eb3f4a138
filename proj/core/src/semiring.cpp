#include "cjt/semiring.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "cjt/error.hpp"

namespace cjt {

namespace {

bool is_tropical(SemiringKind k) {
  return k == SemiringKind::kTropicalMin || k == SemiringKind::kTropicalMax;
}

void require_same(const Annotation& a, const Annotation& b) {
  if (a.kind() != b.kind()) {
    raise(ErrorCode::kKindMismatch, "semiring kinds differ: " + std::string(to_string(a.kind())) +
                                        " vs " + std::string(to_string(b.kind())));
  }
  if (a.kind() == SemiringKind::kGram && a.gram_dim() != b.gram_dim()) {
    raise(ErrorCode::kKindMismatch, "gram dimensions differ: " + std::to_string(a.gram_dim()) +
                                        " vs " + std::to_string(b.gram_dim()));
  }
}

bool close(double a, double b, double tol) {
  if (a == b) return true;
  double scale = std::max(std::fabs(a), std::fabs(b));
  return std::fabs(a - b) <= tol * scale + 1e-300;
}

void append_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

void append_double(std::string& out, double v) {
  // -0.0 and 0.0 must serialize identically.
  if (v == 0.0) v = 0.0;
  append_u64(out, std::bit_cast<std::uint64_t>(v));
}

}  // namespace

std::string_view to_string(SemiringKind kind) {
  switch (kind) {
    case SemiringKind::kNaturalCount: return "count";
    case SemiringKind::kRealSum: return "sum";
    case SemiringKind::kCountSumPair: return "count_sum";
    case SemiringKind::kTropicalMin: return "min";
    case SemiringKind::kTropicalMax: return "max";
    case SemiringKind::kGram: return "gram";
  }
  return "?";
}

SemiringKind semiring_kind_from_string(std::string_view name) {
  for (auto k : {SemiringKind::kNaturalCount, SemiringKind::kRealSum, SemiringKind::kCountSumPair,
                 SemiringKind::kTropicalMin, SemiringKind::kTropicalMax, SemiringKind::kGram}) {
    if (to_string(k) == name) return k;
  }
  raise(ErrorCode::kUnsupportedSemiring, "unknown semiring '" + std::string(name) + "'");
}

std::string SemiringSpec::canonical() const {
  std::string out(to_string(kind));
  out += '(';
  for (std::size_t i = 0; i < lift_attrs.size(); ++i) {
    if (i) out += ',';
    out += lift_attrs[i];
  }
  out += ')';
  return out;
}

Annotation Annotation::zero(const SemiringSpec& spec) {
  switch (spec.kind) {
    case SemiringKind::kNaturalCount: return count(0);
    case SemiringKind::kRealSum: return real(0.0);
    case SemiringKind::kCountSumPair: return count_sum(0, 0.0);
    case SemiringKind::kTropicalMin:
    case SemiringKind::kTropicalMax: return tropical_infinity(spec.kind);
    case SemiringKind::kGram: {
      std::size_t n = spec.gram_dim();
      return gram(n, std::vector<double>(n * n, 0.0));
    }
  }
  raise(ErrorCode::kInternal, "unreachable semiring kind");
}

Annotation Annotation::one(const SemiringSpec& spec) {
  switch (spec.kind) {
    case SemiringKind::kNaturalCount: return count(1);
    case SemiringKind::kRealSum: return real(1.0);
    case SemiringKind::kCountSumPair: return count_sum(1, 0.0);
    case SemiringKind::kTropicalMin: return tropical_min(0.0);
    case SemiringKind::kTropicalMax: return tropical_max(0.0);
    case SemiringKind::kGram: {
      std::size_t n = spec.gram_dim();
      std::vector<double> g(n * n, 0.0);
      g[0] = 1.0;
      return gram(n, std::move(g));
    }
  }
  raise(ErrorCode::kInternal, "unreachable semiring kind");
}

Annotation Annotation::count(std::uint64_t n) {
  Annotation a;
  a.kind_ = SemiringKind::kNaturalCount;
  a.count_ = n;
  return a;
}

Annotation Annotation::real(double v) {
  Annotation a;
  a.kind_ = SemiringKind::kRealSum;
  a.real_ = v;
  return a;
}

Annotation Annotation::count_sum(std::uint64_t n, double sum) {
  Annotation a;
  a.kind_ = SemiringKind::kCountSumPair;
  a.count_ = n;
  a.real_ = sum;
  return a;
}

Annotation Annotation::tropical_min(double v) {
  if (std::isinf(v)) {
    if (v > 0) return tropical_infinity(SemiringKind::kTropicalMin);
    raise(ErrorCode::kInvalidArgument, "tropical min values must be finite or the zero element");
  }
  Annotation a;
  a.kind_ = SemiringKind::kTropicalMin;
  a.real_ = v;
  return a;
}

Annotation Annotation::tropical_max(double v) {
  if (std::isinf(v)) {
    if (v < 0) return tropical_infinity(SemiringKind::kTropicalMax);
    raise(ErrorCode::kInvalidArgument, "tropical max values must be finite or the zero element");
  }
  Annotation a;
  a.kind_ = SemiringKind::kTropicalMax;
  a.real_ = v;
  return a;
}

Annotation Annotation::tropical_infinity(SemiringKind kind) {
  if (!is_tropical(kind)) raise(ErrorCode::kKindMismatch, "infinity is only defined for tropical kinds");
  Annotation a;
  a.kind_ = kind;
  a.infinite_ = true;
  return a;
}

Annotation Annotation::gram(std::size_t dim, std::vector<double> entries) {
  if (dim == 0 || entries.size() != dim * dim) {
    raise(ErrorCode::kInvalidArgument, "gram entries must be dim*dim with dim >= 1");
  }
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = i + 1; j < dim; ++j) {
      if (!close(entries[i * dim + j], entries[j * dim + i], 1e-12)) {
        raise(ErrorCode::kInvalidArgument, "gram matrix must be symmetric");
      }
    }
  }
  Annotation a;
  a.kind_ = SemiringKind::kGram;
  a.dim_ = static_cast<std::uint32_t>(dim);
  a.gram_ = std::move(entries);
  return a;
}

bool Annotation::is_zero() const {
  switch (kind_) {
    case SemiringKind::kNaturalCount: return count_ == 0;
    case SemiringKind::kRealSum: return real_ == 0.0;
    case SemiringKind::kCountSumPair: return count_ == 0 && real_ == 0.0;
    case SemiringKind::kTropicalMin:
    case SemiringKind::kTropicalMax: return infinite_;
    case SemiringKind::kGram:
      return std::all_of(gram_.begin(), gram_.end(), [](double v) { return v == 0.0; });
  }
  return false;
}

double Annotation::scalar() const {
  switch (kind_) {
    case SemiringKind::kNaturalCount: return static_cast<double>(count_);
    case SemiringKind::kRealSum:
    case SemiringKind::kCountSumPair: return real_;
    case SemiringKind::kTropicalMin:
      return infinite_ ? std::numeric_limits<double>::infinity() : real_;
    case SemiringKind::kTropicalMax:
      return infinite_ ? -std::numeric_limits<double>::infinity() : real_;
    case SemiringKind::kGram: return gram_.empty() ? 0.0 : gram_[0];
  }
  return 0.0;
}

Annotation Annotation::embed_gram(std::size_t new_dim, std::span<const std::size_t> placement) const {
  if (kind_ != SemiringKind::kGram) raise(ErrorCode::kKindMismatch, "embed_gram needs a gram annotation");
  if (placement.size() + 1 != dim_) raise(ErrorCode::kInvalidArgument, "placement must map every variable");
  std::vector<std::size_t> idx(dim_);
  idx[0] = 0;
  for (std::size_t i = 0; i < placement.size(); ++i) {
    if (placement[i] == 0 || placement[i] >= new_dim) {
      raise(ErrorCode::kInvalidArgument, "placement out of range");
    }
    idx[i + 1] = placement[i];
  }
  std::vector<double> g(new_dim * new_dim, 0.0);
  for (std::size_t i = 0; i < dim_; ++i) {
    for (std::size_t j = 0; j < dim_; ++j) g[idx[i] * new_dim + idx[j]] = gram_[i * dim_ + j];
  }
  return gram(new_dim, std::move(g));
}

void Annotation::append_canonical(std::string& out) const {
  out.push_back(static_cast<char>(kind_));
  switch (kind_) {
    case SemiringKind::kNaturalCount: append_u64(out, count_); break;
    case SemiringKind::kRealSum: append_double(out, real_); break;
    case SemiringKind::kCountSumPair:
      append_u64(out, count_);
      append_double(out, real_);
      break;
    case SemiringKind::kTropicalMin:
    case SemiringKind::kTropicalMax:
      out.push_back(infinite_ ? 1 : 0);
      if (!infinite_) append_double(out, real_);
      break;
    case SemiringKind::kGram:
      append_u64(out, dim_);
      for (double v : gram_) append_double(out, v);
      break;
  }
}

std::string Annotation::to_string() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case SemiringKind::kNaturalCount: os << count_; break;
    case SemiringKind::kRealSum: os << real_; break;
    case SemiringKind::kCountSumPair: os << '(' << count_ << ',' << real_ << ')'; break;
    case SemiringKind::kTropicalMin: infinite_ ? (os << "inf") : (os << real_); break;
    case SemiringKind::kTropicalMax: infinite_ ? (os << "-inf") : (os << real_); break;
    case SemiringKind::kGram:
      os << '[';
      for (std::size_t i = 0; i < gram_.size(); ++i) os << (i ? "," : "") << gram_[i];
      os << ']';
      break;
  }
  return os.str();
}

void combine_into(Annotation& acc, const Annotation& b) {
  require_same(acc, b);
  switch (acc.kind_) {
    case SemiringKind::kNaturalCount: acc.count_ += b.count_; break;
    case SemiringKind::kRealSum: acc.real_ += b.real_; break;
    case SemiringKind::kCountSumPair:
      acc.count_ += b.count_;
      acc.real_ += b.real_;
      break;
    case SemiringKind::kTropicalMin:
      if (b.infinite_) break;
      if (acc.infinite_ || b.real_ < acc.real_) {
        acc.infinite_ = false;
        acc.real_ = b.real_;
      }
      break;
    case SemiringKind::kTropicalMax:
      if (b.infinite_) break;
      if (acc.infinite_ || b.real_ > acc.real_) {
        acc.infinite_ = false;
        acc.real_ = b.real_;
      }
      break;
    case SemiringKind::kGram:
      for (std::size_t i = 0; i < acc.gram_.size(); ++i) acc.gram_[i] += b.gram_[i];
      break;
  }
}

Annotation combine(const Annotation& a, const Annotation& b) {
  Annotation out = a;
  combine_into(out, b);
  return out;
}

Annotation multiply(const Annotation& a, const Annotation& b) {
  require_same(a, b);
  Annotation out;
  out.kind_ = a.kind_;
  switch (a.kind_) {
    case SemiringKind::kNaturalCount: out.count_ = a.count_ * b.count_; break;
    case SemiringKind::kRealSum: out.real_ = a.real_ * b.real_; break;
    case SemiringKind::kCountSumPair:
      out.count_ = a.count_ * b.count_;
      out.real_ = static_cast<double>(b.count_) * a.real_ + static_cast<double>(a.count_) * b.real_;
      break;
    case SemiringKind::kTropicalMin:
    case SemiringKind::kTropicalMax:
      if (a.infinite_ || b.infinite_) {
        out.infinite_ = true;
      } else {
        out.real_ = a.real_ + b.real_;
      }
      break;
    case SemiringKind::kGram: {
      const std::size_t n = a.dim_;
      out.dim_ = a.dim_;
      out.gram_.assign(n * n, 0.0);
      const double c1 = a.gram_[0];
      const double c2 = b.gram_[0];
      const double* g1 = a.gram_.data();
      const double* g2 = b.gram_.data();
      double* g = out.gram_.data();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
          double v;
          if (i == 0 && j == 0) {
            v = c1 * c2;
          } else if (i == 0) {
            v = c2 * g1[j] + c1 * g2[j];
          } else {
            v = c2 * g1[i * n + j] + c1 * g2[i * n + j] + g1[i] * g2[j] + g2[i] * g1[j];
          }
          g[i * n + j] = v;
          g[j * n + i] = v;
        }
      }
      break;
    }
  }
  return out;
}

bool approx_equal(const Annotation& a, const Annotation& b, double rel_tol) {
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case SemiringKind::kNaturalCount: return a.count_value() == b.count_value();
    case SemiringKind::kRealSum: return close(a.real_value(), b.real_value(), rel_tol);
    case SemiringKind::kCountSumPair:
      return a.count_value() == b.count_value() && close(a.real_value(), b.real_value(), rel_tol);
    case SemiringKind::kTropicalMin:
    case SemiringKind::kTropicalMax:
      if (a.is_infinite() || b.is_infinite()) return a.is_infinite() == b.is_infinite();
      return close(a.real_value(), b.real_value(), rel_tol);
    case SemiringKind::kGram: {
      if (a.gram_dim() != b.gram_dim()) return false;
      auto ea = a.gram_entries();
      auto eb = b.gram_entries();
      for (std::size_t i = 0; i < ea.size(); ++i) {
        if (!close(ea[i], eb[i], rel_tol)) return false;
      }
      return true;
    }
  }
  return false;
}

Annotation lift(std::span<const std::optional<double>> values, const SemiringSpec& spec) {
  if (values.size() != spec.lift_attrs.size()) {
    raise(ErrorCode::kInvalidArgument, "lift expects one slot per lift attribute");
  }
  switch (spec.kind) {
    case SemiringKind::kNaturalCount: return Annotation::count(1);
    case SemiringKind::kRealSum: return Annotation::real(values[0] ? *values[0] : 1.0);
    case SemiringKind::kCountSumPair: return Annotation::count_sum(1, values[0] ? *values[0] : 0.0);
    case SemiringKind::kTropicalMin: return Annotation::tropical_min(values[0] ? *values[0] : 0.0);
    case SemiringKind::kTropicalMax: return Annotation::tropical_max(values[0] ? *values[0] : 0.0);
    case SemiringKind::kGram: {
      const std::size_t n = spec.gram_dim();
      std::vector<double> x(n, 0.0);
      x[0] = 1.0;
      for (std::size_t i = 0; i < values.size(); ++i) x[i + 1] = values[i].value_or(0.0);
      std::vector<double> g(n * n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) g[i * n + j] = x[i] * x[j];
      }
      return Annotation::gram(n, std::move(g));
    }
  }
  raise(ErrorCode::kInternal, "unreachable semiring kind");
}

Annotation lift(const std::map<std::string, std::string, std::less<>>& tuple, const SemiringSpec& spec) {
  std::vector<std::optional<double>> values;
  values.reserve(spec.lift_attrs.size());
  for (const auto& name : spec.lift_attrs) {
    auto it = tuple.find(name);
    if (it == tuple.end()) raise(ErrorCode::kMissingAttribute, "lift attribute '" + name + "' missing");
    const std::string& text = it->second;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
      raise(ErrorCode::kNonNumeric, "lift attribute '" + name + "' is not numeric: '" + text + "'");
    }
    values.emplace_back(v);
  }
  return lift(values, spec);
}

namespace {

struct NormalSystem {
  Eigen::MatrixXd xtx;
  Eigen::VectorXd xty;
  std::vector<std::size_t> columns;  // gram indices of design columns
  std::size_t target = 0;            // gram index of target
};

NormalSystem assemble(const Annotation& gram, std::size_t target_var) {
  if (gram.kind() != SemiringKind::kGram) raise(ErrorCode::kKindMismatch, "linear regression needs a gram annotation");
  const std::size_t n = gram.gram_dim();
  if (n < 2) raise(ErrorCode::kInvalidArgument, "gram has no target variable");
  if (target_var + 1 >= n) raise(ErrorCode::kInvalidArgument, "target index out of range");
  NormalSystem sys;
  sys.target = target_var + 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (i != sys.target) sys.columns.push_back(i);
  }
  const std::size_t p = sys.columns.size();
  sys.xtx.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  sys.xty.resize(static_cast<Eigen::Index>(p));
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b < p; ++b) {
      sys.xtx(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = gram.gram_at(sys.columns[a], sys.columns[b]);
    }
    sys.xty(static_cast<Eigen::Index>(a)) = gram.gram_at(sys.columns[a], sys.target);
  }
  return sys;
}

}  // namespace

LinregResult solve_linreg(const Annotation& gram, const LinregOptions& options) {
  const std::size_t target = options.target.value_or(gram.gram_dim() >= 2 ? gram.gram_dim() - 2 : 0);
  NormalSystem sys = assemble(gram, target);
  const double count = gram.gram_at(0, 0);
  const auto p = static_cast<Eigen::Index>(sys.columns.size());
  if (count < static_cast<double>(p)) {
    raise(ErrorCode::kSingular, "gram count " + std::to_string(count) + " below parameter count " +
                                    std::to_string(p));
  }
  Eigen::MatrixXd a = sys.xtx;
  a.diagonal().array() += options.ridge;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-13) {
    raise(ErrorCode::kSingular, "normal equations are singular");
  }
  Eigen::VectorXd beta = ldlt.solve(sys.xty);
  if (!beta.allFinite()) raise(ErrorCode::kSingular, "normal equations produced non-finite coefficients");

  LinregResult result;
  result.coefficients.assign(beta.data(), beta.data() + beta.size());
  result.count = count;
  result.r2 = r2_from_gram(gram, result.coefficients, target);
  return result;
}

double r2_from_gram(const Annotation& gram, std::span<const double> coefficients, std::size_t target) {
  NormalSystem sys = assemble(gram, target);
  if (coefficients.size() != sys.columns.size()) {
    raise(ErrorCode::kInvalidArgument, "coefficient count does not match gram");
  }
  Eigen::Map<const Eigen::VectorXd> beta(coefficients.data(), static_cast<Eigen::Index>(coefficients.size()));
  const double n = gram.gram_at(0, 0);
  const double yy = gram.gram_at(sys.target, sys.target);
  const double sy = gram.gram_at(0, sys.target);
  const double sse = yy - 2.0 * beta.dot(sys.xty) + beta.dot(sys.xtx * beta);
  const double sst = n > 0 ? yy - sy * sy / n : 0.0;
  if (sst <= 1e-12 * std::max(1.0, std::fabs(yy))) return std::fabs(sse) <= 1e-9 * std::max(1.0, yy) ? 1.0 : 0.0;
  return 1.0 - std::max(0.0, sse) / sst;
}

}  // namespace cjt
