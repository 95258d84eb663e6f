#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <variant>

#include "gtwo/errors.hpp"
#include "gtwo/units.hpp"

namespace gtwo {

/// Working precision for the constants chain. The 13-14 significant digit
/// moment values need headroom beyond double once 1 + a is formed.
using Real = long double;

/// A measured or derived quantity with its 1-sigma uncertainty.
///
/// Uncertainties are independent Gaussian; no covariances are tracked.
class UncVal {
public:
  UncVal() = default;
  UncVal(Real value, Real sigma, Unit unit = units::one,
         std::string source = "derived")
      : value_(value), sigma_(sigma), unit_(unit), source_(std::move(source)) {
    if (!(sigma >= 0))
      throw DomainError("negative or NaN sigma for quantity from '" + source_ +
                        "'");
  }

  static UncVal exact(Real value, Unit unit = units::one,
                      std::string source = "exact") {
    return UncVal(value, 0, unit, std::move(source));
  }

  Real value() const { return value_; }
  Real sigma() const { return sigma_; }
  const Unit &unit() const { return unit_; }
  const std::string &source() const { return source_; }

  /// sigma / |value|; zero for an exact zero.
  Real relative_sigma() const {
    if (value_ == 0)
      return sigma_ == 0 ? 0 : std::numeric_limits<Real>::infinity();
    return sigma_ / std::fabs(value_);
  }

  UncVal with_source(std::string s) const {
    UncVal r = *this;
    r.source_ = std::move(s);
    return r;
  }

  /// Re-express in a scale-related unit (MeV -> TeV, s -> hr, ...).
  UncVal convert_to(const Unit &target) const {
    auto s = unit_.scale_to(target);
    if (!s)
      throw UnitError("cannot convert " + unit_.str() + " to " + target.str());
    return UncVal(value_ * *s, sigma_ * *s, target, source_);
  }

  friend bool operator==(const UncVal &, const UncVal &) = default;

private:
  Real value_ = 0;
  Real sigma_ = 0;
  Unit unit_{};
  std::string source_ = "derived";
};

namespace detail {
inline void require_same_unit(const UncVal &a, const UncVal &b,
                              const char *op) {
  if (!(a.unit() == b.unit()))
    throw UnitError(std::string("unit mismatch in ") + op + ": " +
                    a.unit().str() + " vs " + b.unit().str());
}
} // namespace detail

// First-order propagation, inputs independent.

inline UncVal operator+(const UncVal &a, const UncVal &b) {
  detail::require_same_unit(a, b, "add");
  return {a.value() + b.value(), std::hypot(a.sigma(), b.sigma()), a.unit()};
}

inline UncVal operator-(const UncVal &a, const UncVal &b) {
  detail::require_same_unit(a, b, "sub");
  return {a.value() - b.value(), std::hypot(a.sigma(), b.sigma()), a.unit()};
}

inline UncVal operator*(const UncVal &a, const UncVal &b) {
  return {a.value() * b.value(),
          std::hypot(b.value() * a.sigma(), a.value() * b.sigma()),
          a.unit() * b.unit()};
}

inline UncVal operator/(const UncVal &a, const UncVal &b) {
  if (b.value() == 0)
    throw DomainError("division by zero-valued quantity");
  const Real q = a.value() / b.value();
  return {q,
          std::hypot(a.sigma() / b.value(), q * b.sigma() / b.value()),
          a.unit() / b.unit()};
}

inline UncVal scale(const UncVal &a, Real k) {
  return {k * a.value(), std::fabs(k) * a.sigma(), a.unit()};
}

inline UncVal operator*(Real k, const UncVal &a) { return scale(a, k); }
inline UncVal operator*(const UncVal &a, Real k) { return scale(a, k); }

inline UncVal pow_int(const UncVal &a, int n) {
  if (n < 0 && a.value() == 0)
    throw DomainError("negative power of zero-valued quantity");
  if (n == 0)
    return UncVal(1, 0, units::one);
  const Real v = std::pow(a.value(), static_cast<Real>(n));
  const Real d = n * std::pow(a.value(), static_cast<Real>(n - 1));
  return {v, std::fabs(d) * a.sigma(), a.unit().pow(n)};
}

inline UncVal sqrt(const UncVal &a) {
  if (a.value() < 0)
    throw DomainError("square root of negative quantity");
  const Real r = std::sqrt(a.value());
  // Only tag-even units have a square root in the closed set.
  Unit u;
  for (std::size_t i = 0; i < kUnitTagCount; ++i) {
    int e = a.unit().exponent(static_cast<UnitTag>(i));
    if (e % 2 != 0)
      throw UnitError("square root of unit " + a.unit().str());
    u = u * Unit(static_cast<UnitTag>(i), e / 2);
  }
  return {r, r == 0 ? a.sigma() == 0 ? 0 : std::numeric_limits<Real>::infinity()
                    : a.sigma() / (2 * r),
          u};
}

/// Reciprocal 1/a, used for alpha <-> alpha^-1.
inline UncVal inverse(const UncVal &a) {
  return UncVal::exact(1) / a;
}

enum class ArithOp { add, sub, mul, div, pow_int, scale };

/// Dispatch form of the arithmetic above. For pow_int the right operand must
/// be a real holding an integer; for scale it is the factor.
inline UncVal unc_arith(ArithOp op, const UncVal &a,
                        const std::variant<UncVal, Real> &b) {
  auto as_unc = [&]() -> UncVal {
    if (auto *u = std::get_if<UncVal>(&b))
      return *u;
    return UncVal::exact(std::get<Real>(b));
  };
  auto as_real = [&]() -> Real {
    if (auto *r = std::get_if<Real>(&b))
      return *r;
    const auto &u = std::get<UncVal>(b);
    if (u.sigma() != 0 || !u.unit().is_dimensionless())
      throw DomainError("exponent/scale operand must be an exact pure number");
    return u.value();
  };
  switch (op) {
  case ArithOp::add: return a + as_unc();
  case ArithOp::sub: return a - as_unc();
  case ArithOp::mul: return a * as_unc();
  case ArithOp::div: return a / as_unc();
  case ArithOp::scale: return scale(a, as_real());
  case ArithOp::pow_int: {
    Real n = as_real();
    if (n != std::trunc(n))
      throw DomainError("pow_int exponent is not an integer");
    return pow_int(a, static_cast<int>(n));
  }
  }
  throw DomainError("unknown arithmetic operation");
}

struct ComparisonResult {
  UncVal difference;           // a - b with combined sigma
  Real n_sigma = 0;            // |a - b| / combined sigma
  bool infinite = false;       // both exact and unequal
  Real fractional_difference_ppt = 0; // 1e12 (a - b) / b
  Real fractional_sigma_ppt = 0;      // 1e12 combined sigma / |b|
};

/// Statistical distance between two independent determinations.
inline ComparisonResult sigma_compare(const UncVal &a, const UncVal &b) {
  detail::require_same_unit(a, b, "compare");
  ComparisonResult r;
  r.difference = a - b;
  const Real diff = a.value() - b.value();
  const Real combined = r.difference.sigma();
  if (combined == 0) {
    r.infinite = diff != 0;
    r.n_sigma = r.infinite ? std::numeric_limits<Real>::infinity() : 0;
  } else {
    r.n_sigma = std::fabs(diff) / combined;
  }
  if (b.value() != 0) {
    r.fractional_difference_ppt = 1e12L * diff / b.value();
    r.fractional_sigma_ppt = 1e12L * combined / std::fabs(b.value());
  } else {
    r.fractional_difference_ppt =
        diff == 0 ? 0 : std::numeric_limits<Real>::infinity();
    r.fractional_sigma_ppt = std::numeric_limits<Real>::infinity();
  }
  return r;
}

} // namespace gtwo
