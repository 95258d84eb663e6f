#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "gtwo/constants.hpp"
#include "gtwo/errors.hpp"
#include "gtwo/uncval.hpp"

namespace gtwo {

/// QED coefficients C2..C10 of the (alpha/pi)^k series plus the hadronic and
/// weak contributions. Lepton-mass-ratio dependence is frozen into the values.
struct QedCoefficients {
  UncVal c2{0.5L, 0, units::one, "exact"};
  UncVal c4{-0.32847844400262L, 0.00000000000025L, units::one, "QED"};
  UncVal c6{1.1812340168183L, 0.0000000000079L, units::one, "QED"};
  UncVal c8{-1.9113213918L, 0.0000000012L, units::one, "QED"};
  UncVal c10{6.73L, 0.16L, units::one, "QED numerical"};
  UncVal a_hadronic{1.693e-12L, 0.011e-12L, units::one, "hadronic"};
  UncVal a_weak{0.03053e-12L, 0.00023e-12L, units::one, "electroweak"};

  static QedCoefficients defaults() { return {}; }

  static QedCoefficients zero() {
    QedCoefficients q;
    q.c2 = q.c4 = q.c6 = q.c8 = q.c10 = q.a_hadronic = q.a_weak =
        UncVal::exact(0);
    return q;
  }

  /// Defaults, overridden by any of C2..C10, a_hadronic, a_weak present in
  /// the registry.
  static QedCoefficients from_registry(const ConstantsRegistry &reg) {
    QedCoefficients q;
    auto take = [&](const char *name, UncVal &slot) {
      if (reg.contains(name)) {
        const auto &v = reg.get(name);
        if (!v.unit().is_dimensionless())
          throw UnitError(std::string(name) + " must be dimensionless");
        slot = v;
      }
    };
    take("C2", q.c2);
    take("C4", q.c4);
    take("C6", q.c6);
    take("C8", q.c8);
    take("C10", q.c10);
    take("a_hadronic", q.a_hadronic);
    take("a_weak", q.a_weak);
    return q;
  }

  /// C_{2k} for k = 1..5.
  std::array<const UncVal *, 5> series() const {
    return {&c2, &c4, &c6, &c8, &c10};
  }
};

struct MomentPrediction {
  UncVal anomaly_a;
  UncVal moment_over_muB; // 1 + a
  UncVal alpha_used;
  Real sigma_from_alpha = 0;
  Real sigma_from_theory = 0;
};

enum class BudgetLabel {
  dirac, order1, order2, order3, order4, order5, hadronic, weak
};

inline const char *to_string(BudgetLabel l) {
  switch (l) {
  case BudgetLabel::dirac: return "Dirac";
  case BudgetLabel::order1: return "(alpha/pi)^1";
  case BudgetLabel::order2: return "(alpha/pi)^2";
  case BudgetLabel::order3: return "(alpha/pi)^3";
  case BudgetLabel::order4: return "(alpha/pi)^4";
  case BudgetLabel::order5: return "(alpha/pi)^5";
  case BudgetLabel::hadronic: return "hadronic";
  case BudgetLabel::weak: return "weak";
  }
  return "?";
}

struct BudgetEntry {
  BudgetLabel label;
  Real value;            // signed contribution to the moment
  Real magnitude;        // |value|
  Real sigma;            // from the coefficient (or estimate) alone
  Real sigma_from_alpha; // from the uncertainty in alpha
};

namespace detail {

inline constexpr Real kPi = std::numbers::pi_v<Real>;

inline void check_alpha_window(Real alpha) {
  if (!(alpha > 0 && alpha < 0.01L))
    throw DomainError("alpha outside sanity window (0, 0.01)");
}

// Sum_k C_2k x^k and its derivative with respect to alpha, x = alpha/pi.
inline Real series_value(Real alpha, const QedCoefficients &q) {
  const Real x = alpha / kPi;
  Real acc = 0;
  auto cs = q.series();
  for (int k = 4; k >= 0; --k)
    acc = (acc + cs[static_cast<std::size_t>(k)]->value()) * x;
  return acc + q.a_hadronic.value() + q.a_weak.value();
}

inline Real series_derivative(Real alpha, const QedCoefficients &q) {
  const Real x = alpha / kPi;
  Real acc = 0;
  auto cs = q.series();
  for (int k = 4; k >= 0; --k)
    acc = acc * x + (k + 1) * cs[static_cast<std::size_t>(k)]->value();
  return acc / kPi;
}

/// Uncertainty of a at fixed alpha from the coefficients and estimates.
inline Real theory_sigma(Real alpha, const QedCoefficients &q) {
  const Real x = alpha / kPi;
  Real var = 0, xk = 1;
  for (const UncVal *c : q.series()) {
    xk *= x;
    var += (c->sigma() * xk) * (c->sigma() * xk);
  }
  var += q.a_hadronic.sigma() * q.a_hadronic.sigma();
  var += q.a_weak.sigma() * q.a_weak.sigma();
  return std::sqrt(var);
}

} // namespace detail

/// Anomaly a = sum_{k=1..5} C_2k (alpha/pi)^k + a_hadronic + a_weak.
/// Terms beyond (alpha/pi)^5 are below 1e-15 and dropped.
inline MomentPrediction moment_from_alpha(const UncVal &alpha,
                                          const QedCoefficients &q = {}) {
  if (!alpha.unit().is_dimensionless())
    throw UnitError("alpha must be dimensionless");
  detail::check_alpha_window(alpha.value());
  const Real a = detail::series_value(alpha.value(), q);
  const Real s_alpha =
      std::fabs(detail::series_derivative(alpha.value(), q)) * alpha.sigma();
  const Real s_theory = detail::theory_sigma(alpha.value(), q);
  const Real s = std::hypot(s_alpha, s_theory);
  MomentPrediction p;
  p.anomaly_a = UncVal(a, s, units::one, "SM series");
  p.moment_over_muB = UncVal(1 + a, s, units::one, "SM series");
  p.alpha_used = alpha;
  p.sigma_from_alpha = s_alpha;
  p.sigma_from_theory = s_theory;
  return p;
}

inline UncVal anomaly_from_alpha(const UncVal &alpha,
                                 const QedCoefficients &q = {}) {
  return moment_from_alpha(alpha, q).anomaly_a;
}

struct AlphaSolution {
  UncVal alpha;
  Real sigma_from_measurement = 0;
  Real sigma_from_theory = 0;
  int iterations = 0;
};

/// Solve a(alpha) = anomaly by damped Newton on the analytic derivative.
inline AlphaSolution solve_alpha(const UncVal &anomaly,
                                 const QedCoefficients &q = {}) {
  const Real target = anomaly.value();
  if (!(target > 0 && target < 0.01L))
    throw DomainError("anomaly outside window (0, 0.01)");
  if (q.c2.value() <= 0)
    throw DomainError("leading coefficient C2 must be positive for inversion");

  // Leading-order guess from a ~ C2 alpha/pi.
  Real alpha = detail::kPi * target / q.c2.value();
  Real resid = detail::series_value(alpha, q) - target;
  AlphaSolution sol;
  constexpr int kMaxIter = 100;
  for (int it = 1;; ++it) {
    if (it > kMaxIter)
      throw ConvergenceError("alpha inversion did not converge in 100 steps");
    const Real d = detail::series_derivative(alpha, q);
    if (!(d > 0))
      throw DomainError("series not increasing in alpha at the iterate");
    Real step = resid / d;
    Real next = alpha - step;
    Real next_resid = detail::series_value(next, q) - target;
    for (int h = 0; h < 60 && !(std::fabs(next_resid) <= std::fabs(resid));
         ++h) {
      step *= 0.5L;
      next = alpha - step;
      next_resid = detail::series_value(next, q) - target;
    }
    alpha = next;
    resid = next_resid;
    sol.iterations = it;
    if (std::fabs(step) < 1e-15L * std::fabs(alpha) || resid == 0)
      break;
  }
  detail::check_alpha_window(alpha);

  const Real d = detail::series_derivative(alpha, q);
  sol.sigma_from_measurement = anomaly.sigma() / d;
  sol.sigma_from_theory = detail::theory_sigma(alpha, q) / d;
  sol.alpha = UncVal(alpha,
                     std::hypot(sol.sigma_from_measurement,
                                sol.sigma_from_theory),
                     units::one, "SM inversion");
  return sol;
}

inline UncVal alpha_from_moment(const UncVal &moment,
                                const QedCoefficients &q = {}) {
  if (!moment.unit().is_dimensionless())
    throw UnitError("moment must be dimensionless");
  const Real a = moment.value() - 1;
  if (!(a > 0 && a < 0.01L))
    throw DomainError("moment outside window (1, 1.01)");
  return solve_alpha(UncVal(a, moment.sigma(), units::one, moment.source()), q)
      .alpha;
}

/// Per-term contributions to the moment, Dirac first.
inline std::vector<BudgetEntry> budget(const UncVal &alpha,
                                       const QedCoefficients &q = {}) {
  detail::check_alpha_window(alpha.value());
  const Real x = alpha.value() / detail::kPi;
  std::vector<BudgetEntry> out;
  out.push_back({BudgetLabel::dirac, 1, 1, 0, 0});
  Real xk = 1;
  auto cs = q.series();
  for (int k = 1; k <= 5; ++k) {
    const UncVal &c = *cs[static_cast<std::size_t>(k - 1)];
    const Real dx = k * xk / detail::kPi; // d(x^k)/d alpha
    xk *= x;
    const Real v = c.value() * xk;
    out.push_back({static_cast<BudgetLabel>(k), v, std::fabs(v),
                   c.sigma() * xk, std::fabs(c.value() * dx) * alpha.sigma()});
  }
  out.push_back({BudgetLabel::hadronic, q.a_hadronic.value(),
                 std::fabs(q.a_hadronic.value()), q.a_hadronic.sigma(), 0});
  out.push_back({BudgetLabel::weak, q.a_weak.value(),
                 std::fabs(q.a_weak.value()), q.a_weak.sigma(), 0});
  return out;
}

/// Measurement sigma over the theory-only sigma of a at fixed alpha.
inline Real theory_vs_measurement_ratio(Real moment_sigma,
                                        const QedCoefficients &q,
                                        const UncVal &alpha) {
  if (moment_sigma < 0)
    throw DomainError("negative measurement sigma");
  if (moment_sigma == 0)
    return 0;
  detail::check_alpha_window(alpha.value());
  const Real th = detail::theory_sigma(alpha.value(), q);
  if (th == 0)
    throw DomainError("theory sigma is zero");
  return moment_sigma / th;
}

/// alpha from a published alpha^-1 value.
inline UncVal alpha_from_inverse(const UncVal &alpha_inv) {
  return inverse(alpha_inv).with_source(alpha_inv.source());
}

} // namespace gtwo
