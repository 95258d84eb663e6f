#include <gtest/gtest.h>

#include <cmath>

#include "gtwo/alpha_recoil.hpp"
#include "gtwo/constants.hpp"
#include "gtwo/sm_series.hpp"

using namespace gtwo;

namespace {

UncVal alpha_inv(Real v, Real s) { return alpha_from_inverse(UncVal(v, s)); }

// Straight power sum written independently of the Horner form in the library.
long double direct_series(long double alpha, const QedCoefficients &q) {
  const long double x = alpha / std::numbers::pi_v<long double>;
  long double a = q.a_hadronic.value() + q.a_weak.value();
  auto cs = q.series();
  for (int k = 1; k <= 5; ++k)
    a += cs[static_cast<std::size_t>(k - 1)]->value() * std::pow(x, k);
  return a;
}

} // namespace

TEST(Coefficients, DefaultsAreTheQuotedValues) {
  const auto q = QedCoefficients::defaults();
  EXPECT_EQ(q.c2.value(), 0.5L);
  EXPECT_EQ(q.c2.sigma(), 0);
  EXPECT_EQ(q.c4.value(), -0.32847844400262L);
  EXPECT_EQ(q.c4.sigma(), 0.00000000000025L);
  EXPECT_EQ(q.c6.value(), 1.1812340168183L);
  EXPECT_EQ(q.c8.value(), -1.9113213918L);
  EXPECT_EQ(q.c10.value(), 6.73L);
  EXPECT_EQ(q.c10.sigma(), 0.16L);
  EXPECT_EQ(q.a_hadronic.value(), 1.693e-12L);
  EXPECT_EQ(q.a_weak.value(), 0.03053e-12L);
}

TEST(Coefficients, RegistryOverridesMatchDefaults) {
  const auto q = QedCoefficients::from_registry(default_registry());
  const auto d = QedCoefficients::defaults();
  EXPECT_EQ(q.c8, d.c8);
  EXPECT_EQ(q.a_weak.value(), d.a_weak.value());
}

TEST(Series, CsPrediction) {
  const auto p = moment_from_alpha(alpha_inv(137.035999045L, 0.000000028L));
  EXPECT_NEAR(static_cast<double>(p.moment_over_muB.value() - 1.00115965218161L),
              0, 2e-14);
  EXPECT_NEAR(static_cast<double>(p.moment_over_muB.sigma()), 0.24e-12,
              0.24e-12 * 0.15);
  EXPECT_EQ(p.moment_over_muB.value(), 1 + p.anomaly_a.value());
  EXPECT_NEAR(static_cast<double>(std::hypot(p.sigma_from_alpha,
                                             p.sigma_from_theory)),
              static_cast<double>(p.moment_over_muB.sigma()), 1e-27);
}

TEST(Series, RbPrediction) {
  const auto p = moment_from_alpha(alpha_inv(137.035998995L, 0.000000085L));
  EXPECT_NEAR(static_cast<double>(p.moment_over_muB.value() - 1.00115965218204L),
              0, 2e-14);
  EXPECT_NEAR(static_cast<double>(p.moment_over_muB.sigma()), 0.72e-12,
              0.72e-12 * 0.15);
}

TEST(Series, ZeroCoefficientsGiveZero) {
  const auto a = anomaly_from_alpha(alpha_inv(137.036L, 0),
                                    QedCoefficients::zero());
  EXPECT_EQ(a.value(), 0);
}

TEST(Series, OutsideWindowIsRejected) {
  EXPECT_THROW(anomaly_from_alpha(UncVal(0.02, 0)), DomainError);
  EXPECT_THROW(anomaly_from_alpha(UncVal(-0.001, 0)), DomainError);
  EXPECT_THROW(alpha_from_moment(UncVal(1.5, 0)), DomainError);
}

TEST(Series, MatchesDirectPowerSum) {
  const auto q = QedCoefficients::defaults();
  for (Real inv = 137.0L; inv <= 137.1L; inv += 0.01L) {
    const Real alpha = 1 / inv;
    EXPECT_NEAR(static_cast<double>(anomaly_from_alpha(UncVal(alpha, 0)).value() -
                                    direct_series(alpha, q)),
                0, 1e-18);
  }
}

TEST(Inversion, MeasuredMoment) {
  const auto alpha = alpha_from_moment(UncVal(1.00115965218073L, 0.28e-12L));
  const auto inv = inverse(alpha);
  EXPECT_NEAR(static_cast<double>(inv.value() - 137.035999150L), 0, 2e-9);
  EXPECT_NEAR(static_cast<double>(inv.sigma()), 0.000000033, 0.000000033 * 0.15);
}

TEST(Inversion, RoundTripOverWindow) {
  for (Real inv = 137.0L; inv <= 137.1L + 1e-12L; inv += 0.005L) {
    const UncVal alpha(1 / inv, 0);
    const auto back = alpha_from_moment(moment_from_alpha(alpha).moment_over_muB);
    EXPECT_NEAR(static_cast<double>(back.value() / alpha.value() - 1), 0, 1e-14)
        << static_cast<double>(inv);
  }
}

TEST(Inversion, AmplificationFactor) {
  const UncVal m(1.00115965218073L, 0.28e-12L);
  const auto alpha = alpha_from_moment(m);
  const double amp = static_cast<double>(alpha.relative_sigma() / m.relative_sigma());
  EXPECT_GE(amp, 800);
  EXPECT_LE(amp, 1100);
}

TEST(Inversion, ConvergesQuickly) {
  const auto sol = solve_alpha(UncVal(0.00115965218073L, 0));
  EXPECT_LT(sol.iterations, 20);
}

TEST(Derivative, AgreesWithCentredDifference) {
  const auto q = QedCoefficients::defaults();
  for (Real inv : {137.0L, 137.036L, 137.1L, 150.0L, 500.0L}) {
    const Real a = 1 / inv, h = 1e-10L;
    const Real fd = (detail::series_value(a + h, q) - detail::series_value(a - h, q)) /
                    (2 * h);
    const Real d = detail::series_derivative(a, q);
    EXPECT_NEAR(static_cast<double>(d / fd - 1), 0, 1e-6);
    EXPECT_GT(d, 0);
  }
}

TEST(Budget, MagnitudesDecreaseAndSum) {
  const UncVal alpha = alpha_inv(137.035999045L, 0.000000028L);
  const auto b = budget(alpha);
  ASSERT_EQ(b.size(), 8u);
  EXPECT_EQ(b[0].label, BudgetLabel::dirac);
  EXPECT_EQ(b[0].magnitude, 1);
  EXPECT_EQ(b[0].sigma, 0);
  for (std::size_t i = 1; i <= 5; ++i)
    EXPECT_LT(b[i].magnitude, b[i - 1].magnitude);
  Real sum = 0;
  for (const auto &e : b)
    sum += e.value;
  EXPECT_NEAR(static_cast<double>(sum - moment_from_alpha(alpha).moment_over_muB.value()),
              0, 1e-16);
  EXPECT_EQ(b[6].label, BudgetLabel::hadronic);
  EXPECT_EQ(b[6].magnitude, 1.693e-12L);
  EXPECT_EQ(b[6].sigma, 0.011e-12L);
  EXPECT_EQ(b[7].magnitude, 0.03053e-12L);
  // Leading term against a - (higher terms).
  Real higher = 0;
  for (std::size_t i = 2; i < b.size(); ++i)
    higher += b[i].value;
  const Real lead = moment_from_alpha(alpha).anomaly_a.value() - higher;
  EXPECT_NEAR(static_cast<double>(lead), 1.16141e-3, 5e-9);
  EXPECT_NEAR(static_cast<double>(b[1].value - lead), 0, 1e-18);
}

TEST(TheoryRatio, AboutFifteen) {
  const UncVal alpha = alpha_inv(137.035999045L, 0.000000028L);
  const auto q = QedCoefficients::defaults();
  const Real r = theory_vs_measurement_ratio(0.28e-12L, q, alpha);
  EXPECT_GE(r, 10);
  EXPECT_LE(r, 20);
  EXPECT_EQ(theory_vs_measurement_ratio(0, q, alpha), 0);
  auto q2 = q;
  q2.c10 = UncVal(q.c10.value(), 2 * q.c10.sigma());
  EXPECT_LT(theory_vs_measurement_ratio(0.28e-12L, q2, alpha), r);
}

TEST(TheoryRatio, SplitsBetweenC10AndHadronic) {
  const UncVal alpha = alpha_inv(137.035999045L, 0);
  const auto b = budget(alpha);
  const Real c10 = b[5].sigma, had = b[6].sigma;
  EXPECT_LT(c10 / had, 2);
  EXPECT_GT(c10 / had, 0.5);
}

// ---------------------------------------------------------------- recoil

TEST(Recoil, CsAndRbAlpha) {
  const auto &reg = default_registry();
  const auto cs = inverse(alpha_from_recoil(RecoilInputs::from_registry(reg, Atom::cs)));
  EXPECT_NEAR(static_cast<double>(cs.value() - 137.035999045L), 0, 2e-9);
  EXPECT_NEAR(static_cast<double>(1e12L * cs.relative_sigma()), 200, 20);
  const auto rb = inverse(alpha_from_recoil(RecoilInputs::from_registry(reg, Atom::rb)));
  EXPECT_NEAR(static_cast<double>(rb.value() - 137.035998995L), 0, 2e-9);
  EXPECT_NEAR(static_cast<double>(1e12L * rb.relative_sigma()), 620, 62);
}

TEST(Recoil, ZeroSigmasGiveZeroSigma) {
  auto in = RecoilInputs::from_registry(default_registry(), Atom::cs);
  for (UncVal *v : {&in.rydberg, &in.mass_e, &in.mass_atom, &in.h_over_M})
    *v = UncVal(v->value(), 0, v->unit());
  EXPECT_EQ(alpha_from_recoil(in).sigma(), 0);
}

TEST(Recoil, ContributionTable) {
  const auto in = RecoilInputs::from_registry(default_registry(), Atom::cs);
  const auto t = recoil_contribution_table(in);
  ASSERT_EQ(t.size(), 4u);
  EXPECT_NEAR(static_cast<double>(t[3].input_ppt), 400, 1);
  EXPECT_NEAR(static_cast<double>(t[3].alpha_ppt), 200, 0.5);
  EXPECT_NEAR(static_cast<double>(t[1].input_ppt), 29, 0.2);
  EXPECT_NEAR(static_cast<double>(t[1].alpha_ppt), 14.5, 0.1);
  Real q = 0;
  for (const auto &r : t)
    q += r.alpha_ppt * r.alpha_ppt;
  EXPECT_NEAR(static_cast<double>(std::sqrt(q) / (1e12L * alpha_from_recoil(in).relative_sigma()) - 1),
              0, 1e-12);
}

TEST(Recoil, RydbergSwap) {
  const auto &reg = default_registry();
  for (Atom atom : {Atom::rb, Atom::cs}) {
    const auto a = inverse(alpha_from_recoil(
        RecoilInputs::from_registry(reg, atom, RydbergSource::mpq)));
    const auto b = inverse(alpha_from_recoil(
        RecoilInputs::from_registry(reg, atom, RydbergSource::orsay)));
    const double shift = static_cast<double>(std::fabs(a.value() - b.value()));
    // 20 ppt of alpha is 2.7e-9 in the inverse.
    EXPECT_NEAR(shift, 2.7e-9, 2.7e-9 * 0.3);
    EXPECT_NEAR(1e12 * shift / 137.036, 20, 2);
  }
}

TEST(Recoil, HalfPowerScaling) {
  auto in = RecoilInputs::from_registry(default_registry(), Atom::rb);
  const Real base = alpha_from_recoil(in).value();
  const Real eps = 1e-6L;
  in.h_over_M = UncVal(in.h_over_M.value() * (1 + eps), in.h_over_M.sigma(),
                       in.h_over_M.unit());
  const Real ratio = alpha_from_recoil(in).value() / base;
  EXPECT_NEAR(static_cast<double>(ratio - (1 + eps / 2)), 0, 1e-12);
}

TEST(Recoil, RejectsBadInputs) {
  auto in = RecoilInputs::from_registry(default_registry(), Atom::rb);
  in.mass_e = UncVal(-1, 0, units::amu);
  EXPECT_THROW(alpha_from_recoil(in), DomainError);
  in = RecoilInputs::from_registry(default_registry(), Atom::rb);
  in.rydberg = UncVal(1, 0, units::meter);
  EXPECT_THROW(alpha_from_recoil(in), UnitError);
}
