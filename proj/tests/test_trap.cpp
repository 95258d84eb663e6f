#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "gtwo/trap.hpp"

using namespace gtwo;
using namespace gtwo::trap;

namespace {

FieldModel quiet() {
  FieldModel f;
  return f;
}

bool same(const std::vector<ScanPoint> &a, const std::vector<ScanPoint> &b) {
  if (a.size() != b.size())
    return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].drive != b[i].drive || a[i].ratio != b[i].ratio ||
        a[i].attempts != b[i].attempts || a[i].counts != b[i].counts ||
        a[i].expected != b[i].expected)
      return false;
  return true;
}

bool same(const ScanResult &a, const ScanResult &b) {
  return same(a.cyclotron_scan, b.cyclotron_scan) &&
         same(a.anomaly_scan, b.anomaly_scan) && same(a.joint_scan, b.joint_scan) &&
         a.end_time == b.end_time;
}

// Ratio-grid index with the largest expected rate summed over cyclotron drive.
std::size_t ratio_argmax(const ScanResult &r, std::size_t n_ratio) {
  std::vector<double> acc(n_ratio);
  for (std::size_t i = 0; i < r.joint_scan.size(); ++i)
    acc[i % n_ratio] += r.joint_scan[i].expected;
  return static_cast<std::size_t>(std::max_element(acc.begin(), acc.end()) - acc.begin());
}

} // namespace

TEST(Levels, GroundStateArithmetic) {
  const FrequencySet f{100e9, 0.116e9};
  EXPECT_DOUBLE_EQ(f.nu_s(), 100.116e9);
  // -0.5 * 100.116 GHz + 0.5 * 100 GHz
  EXPECT_NEAR(energy_level({0, false}, f), -0.058e9, 1e-3);
  EXPECT_NEAR(energy_level({0, true}, f), 100.058e9, 1e-3);
  EXPECT_THROW(energy_level({-1, true}, f), DomainError);
}

TEST(Levels, TransitionFrequencies) {
  const FrequencySet f{100e9, 0.116e9};
  for (bool up : {true, false})
    EXPECT_NEAR(energy_level({1, up}, f) - energy_level({0, up}, f), f.nu_c, 1e-3);
  // Spin flip at n = 0 costs nu_c + nu_a; the anomaly transition joins
  // (0, up) and (1, down).
  EXPECT_NEAR(energy_level({0, true}, f) - energy_level({0, false}, f), f.nu_c + f.nu_a,
              1e-3);
  EXPECT_NEAR(energy_level({0, true}, f) - energy_level({1, false}, f), f.nu_a, 1e-3);
}

TEST(Levels, RelativisticShiftLowersLevels) {
  const FrequencySet f{150e9, 0.174e9};
  const double d0 = energy_level({1, true}, f) - energy_level({0, true}, f);
  const double d1 = energy_level({1, true}, f, 1e-9) - energy_level({0, true}, f, 1e-9);
  EXPECT_LT(d1, d0);
  EXPECT_NEAR((d0 - d1) / f.nu_c, 2.5e-9, 1e-12); // 1.5 * 2 - 0.5 * 1
}

TEST(Moment, FromFrequencies) {
  const UncVal nc(150e9, 0, units::hertz);
  const UncVal na(150e9 * 1.15965218073e-3L, 0, units::hertz);
  const auto m = moment_from_frequencies(na, nc);
  EXPECT_NEAR(static_cast<double>(m.value() - 1.00115965218073L), 0, 1e-15);
  EXPECT_EQ(m.source(), "electron");
  EXPECT_EQ(moment_from_frequencies(na, nc, Species::positron).source(), "positron");
  EXPECT_EQ(moment_from_frequencies(UncVal(0, 0, units::hertz), nc).value(), 1);
}

TEST(Moment, SigmaPropagation) {
  const Real nu_c = 150e9, r = 1.15965218073e-3L, nu_a = nu_c * r;
  const auto m = moment_from_frequencies(UncVal(nu_a, 1e-10L * nu_a, units::hertz),
                                         UncVal(nu_c, 1e-10L * nu_c, units::hertz));
  // Each input carries 1e-10 of r; quadrature gives sqrt(2) r 1e-10.
  EXPECT_NEAR(static_cast<double>(m.sigma()), std::sqrt(2.0) * 1e-10 * 1.15965218073e-3,
              1e-20);
  // Only the anomaly sigma matters at the 1e-13 level.
  const auto a_only = moment_from_frequencies(UncVal(nu_a, 1e-10L * nu_a, units::hertz),
                                              UncVal(nu_c, 0, units::hertz));
  EXPECT_LE(a_only.sigma(), 1.2e-13L);
}

TEST(Moment, Errors) {
  const UncVal nc(150e9, 0, units::hertz);
  EXPECT_THROW(moment_from_frequencies(UncVal(1, 0, units::hertz), UncVal(0, 0, units::hertz)),
               DomainError);
  EXPECT_THROW(moment_from_frequencies(UncVal(1, 0, units::one), nc), UnitError);
}

TEST(Moment, BinaryRescalingIsBitIdentical) {
  const UncVal na(174.0e6, 0.02, units::hertz), nc(150.05e9, 3, units::hertz);
  const auto base = moment_from_frequencies(na, nc);
  for (int e : {-20, -3, 1, 7, 40}) {
    const Real k = std::ldexp(1.0L, e);
    const auto m = moment_from_frequencies(na * k, nc * k);
    EXPECT_EQ(m.value(), base.value());
    EXPECT_EQ(m.sigma(), base.sigma());
  }
}

TEST(Moment, ArbitraryRescalingWithinOneUlp) {
  const UncVal na(174.0e6, 0, units::hertz), nc(150.05e9, 0, units::hertz);
  const Real base = moment_from_frequencies(na, nc).value();
  const Real ulp = std::nextafter(base, 2.0L) - base;
  for (Real k = 0.7L; k < 3; k += 0.0137L) {
    const Real v = moment_from_frequencies(na * k, nc * k).value();
    EXPECT_LE(std::fabs(v - base), ulp);
  }
}

TEST(Field, ConstantWithoutPerturbations) {
  auto f = quiet();
  for (double t : {0.0, 1.0, 3600.0, 1e6})
    EXPECT_EQ(simulate_field(f, t, 0, 7), f.B0);
  EXPECT_DOUBLE_EQ(simulate_field(f, 5, 1e-3, 7), f.B0 + f.bottle_B2 * 1e-6);
}

TEST(Field, ShieldingRejectsStep) {
  auto f = quiet();
  f.external_step = ExternalStep{100, 1e-7};
  f.shielding_factor = 1;
  EXPECT_EQ(simulate_field(f, 200, 0, 1), f.B0);
  f.shielding_factor = 0.9;
  EXPECT_NEAR(simulate_field(f, 200, 0, 1) / f.B0 - 1, 1e-8, 1e-15);
  EXPECT_EQ(simulate_field(f, 50, 0, 1), f.B0);
}

TEST(Field, LinearDrift) {
  auto f = quiet();
  f.linear_drift = 0.4e-9;
  EXPECT_NEAR(simulate_field(f, 36000, 0, 1) / f.B0 - 1, 4e-9, 1e-15);
}

TEST(Field, NoiseSeededAndStationary) {
  auto f = quiet();
  f.noise_sigma = 1e-9;
  f.noise_correlation_time = 10;
  FieldTrajectory a(f, 3), b(f, 3), c(f, 4);
  double s2 = 0;
  int n = 0, differ = 0;
  for (double t = 0; t < 2e5; t += 1) {
    const double x = a.fractional(t);
    EXPECT_EQ(x, b.fractional(t));
    differ += x != c.fractional(t);
    s2 += x * x;
    ++n;
  }
  EXPECT_GT(differ, n / 2);
  EXPECT_NEAR(std::sqrt(s2 / n) / 1e-9, 1, 0.1);
  // Rewinding replays the same path.
  const double early = a.fractional(17);
  FieldTrajectory fresh(f, 3);
  EXPECT_EQ(early, fresh.fractional(17));
}

TEST(Field, RejectsBadModels) {
  auto f = quiet();
  f.shielding_factor = 1.5;
  EXPECT_THROW(simulate_field(f, 0, 0, 1), DomainError);
  f = quiet();
  f.B0 = 0;
  EXPECT_THROW(simulate_field(f, 0, 0, 1), DomainError);
  EXPECT_THROW(simulate_field(quiet(), -1, 0, 1), DomainError);
}

TEST(Lineshape, LimitsAndWidth) {
  const Lineshape lor(2, 0), gau(0, 3);
  EXPECT_DOUBLE_EQ(lor(1), 0.5);
  EXPECT_NEAR(lor.fwhm(), 2, 1e-9);
  EXPECT_NEAR(gau.fwhm(), 2.3548200450309493 * 3, 1e-9);
  const Lineshape v(1, 95);
  EXPECT_EQ(v(0), 1);
  // Voigt FWHM approximation (Olivero) is good to 0.02%.
  const double fl = 1, fg = 2.3548200450309493 * 95;
  const double approx = 0.5346 * fl + std::sqrt(0.2166 * fl * fl + fg * fg);
  EXPECT_NEAR(v.fwhm() / approx, 1, 1e-3);
  double prev = 1;
  for (double d = 0; d < 3000; d += 7) {
    EXPECT_LE(v(d), prev);
    prev = v(d);
  }
  EXPECT_THROW(Lineshape(0, 0), DomainError);
}

TEST(Lineshape, WidthLinearInGradientAndTemperature) {
  const double b2s[] = {770, 1540, 3080}, temps[] = {0.115, 0.23, 0.46};
  FieldModel ref;
  const double ref_sigma = Simulation{ref, {}, kDefaultGOver2}.cyclotron_lineshape().gauss_sigma();
  for (double b2 : b2s)
    for (double temp : temps) {
      FieldModel f;
      f.bottle_B2 = b2;
      f.axial_temperature = temp;
      const Simulation sim{f, {0.01, 0.01}, kDefaultGOver2};
      const double k = (b2 / 1540) * (temp / 0.23);
      EXPECT_NEAR(sim.cyclotron_lineshape().gauss_sigma() / (k * ref_sigma), 1, 1e-12);
      EXPECT_NEAR(sim.cyclotron_lineshape().fwhm() /
                      (k * 2.3548200450309493 * ref_sigma), 1, 1e-3);
    }
}

TEST(Protocol, SaturatedResonanceJumpsEveryAttempt) {
  const auto f = FrequencySet::from_field(5.36);
  Protocol p;
  p.cyclotron_grid = {f.nu_c};
  p.anomaly_grid = {f.nu_a};
  p.attempts_per_point = 50;
  const auto r = run_protocol(p, {quiet(), {}, kDefaultGOver2}, 1);
  EXPECT_EQ(r.cyclotron_scan[0].counts, 50);
  EXPECT_EQ(r.anomaly_scan[0].counts, 50);
  EXPECT_EQ(r.max_probability, 1);
  EXPECT_EQ(r.end_time, 100);
}

TEST(Protocol, DeterministicAndBounded) {
  auto field = quiet();
  field.noise_sigma = 2e-10;
  field.noise_correlation_time = 30;
  field.linear_drift = 1e-9;
  const Simulation sim{field, {}, kDefaultGOver2};
  for (auto kind : {ProtocolKind::sequential, ProtocolKind::simultaneous}) {
    auto p = Protocol::centred(kind, field, {}, 9, 2.0, kDefaultGOver2, 3);
    p.attempts_per_point = 6;
    p.detection_efficiency = 0.8;
    const auto a = run_protocol(p, sim, 11), b = run_protocol(p, sim, 11),
               c = run_protocol(p, sim, 12);
    EXPECT_TRUE(same(a, b));
    EXPECT_FALSE(same(a, c));
    for (const auto *scan : {&a.cyclotron_scan, &a.anomaly_scan, &a.joint_scan})
      for (const auto &pt : *scan) {
        EXPECT_LE(pt.counts, pt.attempts);
        EXPECT_GE(pt.counts, 0);
        EXPECT_LE(pt.expected, 0.8);
      }
    EXPECT_EQ(a.seed, 11u);
  }
}

TEST(Protocol, BatchIndependentOfThreadCount) {
  auto field = quiet();
  field.noise_sigma = 1e-10;
  const Simulation sim{field, {}, kDefaultGOver2};
  auto p = Protocol::centred(ProtocolKind::sequential, field, {}, 7);
  p.attempts_per_point = 3;
  const auto one = run_batch(p, sim, 100, 9, 1);
  const auto four = run_batch(p, sim, 100, 9, 4);
  ASSERT_EQ(one.size(), 9u);
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_TRUE(same(one[i], four[i]));
    EXPECT_TRUE(same(one[i], run_protocol(p, sim, 100 + i)));
  }
}

TEST(Protocol, OffResonanceGridIsAnError) {
  auto p = Protocol::centred(ProtocolKind::sequential, quiet(), {}, 5);
  for (auto &f : p.cyclotron_grid)
    f *= 1.01;
  EXPECT_THROW(run_protocol(p, {quiet(), {}, kDefaultGOver2}, 1), DomainError);
  auto q = p;
  q.cyclotron_grid.clear();
  EXPECT_THROW(run_protocol(q, {quiet(), {}, kDefaultGOver2}, 1), DomainError);
  q = p;
  q.attempts_per_point = 0;
  EXPECT_THROW(run_protocol(q, {quiet(), {}, kDefaultGOver2}, 1), DomainError);
}

TEST(Protocol, RatioArgmaxInvariantUnderCommonFieldScale) {
  // The cyclotron drive follows the field; the ratio grid stays put.
  const LineshapeWidths w;
  const auto base_field = quiet();
  const auto base = Protocol::centred(ProtocolKind::simultaneous, base_field, w, 15, 2.0,
                                      kDefaultGOver2, 5);
  const auto r0 = run_protocol(base, {base_field, w, kDefaultGOver2}, 5);
  const std::size_t k0 = ratio_argmax(r0, base.ratio_grid.size());
  for (double eps : {1e-9, 1e-8}) {
    auto field = base_field;
    field.B0 *= 1 + eps;
    auto p = Protocol::centred(ProtocolKind::simultaneous, field, w, 15, 2.0,
                               kDefaultGOver2, 5);
    p.ratio_grid = base.ratio_grid;
    const auto r = run_protocol(p, {field, w, kDefaultGOver2}, 5);
    EXPECT_EQ(ratio_argmax(r, p.ratio_grid.size()), k0) << eps;
  }
}

TEST(Extract, ClosedLoopRecoversInjectedMoment) {
  const double g2 = 1.001159652;
  const LineshapeWidths w;
  int within = 0;
  for (auto kind : {ProtocolKind::sequential, ProtocolKind::simultaneous})
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      auto p = Protocol::centred(kind, quiet(), w, 15, 2.0, g2, 5);
      p.attempts_per_point = kind == ProtocolKind::sequential ? 60 : 12;
      const auto m = extract_moment(run_protocol(p, {quiet(), w, g2}, seed));
      EXPECT_GT(m.sigma(), 0);
      EXPECT_LT(m.sigma(), 1e-12L);
      within += std::fabs(static_cast<double>(m.value()) - g2) <
                3 * static_cast<double>(m.sigma());
    }
  EXPECT_GE(within, 9);
}

TEST(Extract, SinglePointAndFlatScansRejected) {
  ScanResult r;
  r.cyclotron_scan = {{1e11, 0, 10, 5, 0.5}};
  r.anomaly_scan = {{1e8, 0, 10, 5, 0.5}};
  EXPECT_THROW(extract_moment(r), DomainError);
  for (int i = 0; i < 4; ++i) {
    r.cyclotron_scan.push_back({1e11 + i + 1, 0, 10, 5, 0.5});
    r.anomaly_scan.push_back({1e8 + i + 1, 0, 10, 5, 0.5});
  }
  EXPECT_THROW(extract_moment(r), DomainError);
}

TEST(Extract, SmallerBottleNarrowsLine) {
  const LineshapeWidths w;
  auto fitted_width = [&](double b2) {
    auto f = quiet();
    f.bottle_B2 = b2;
    auto p = Protocol::centred(ProtocolKind::sequential, f, w, 21, 2.5);
    p.attempts_per_point = 150;
    double sum = 0;
    for (std::uint64_t seed = 1; seed <= 4; ++seed)
      sum += analyze_scan(run_protocol(p, {f, w, kDefaultGOver2}, seed)).cyclotron.fwhm;
    return sum / 4;
  };
  EXPECT_NEAR(fitted_width(1540) / fitted_width(1540 / 2.3), 2.3, 0.23);
}

TEST(Extract, SigmaMatchesScatter) {
  // Weighted fits give centre sigmas consistent with the run-to-run spread.
  const LineshapeWidths w;
  auto p = Protocol::centred(ProtocolKind::sequential, quiet(), w, 15, 2.0);
  p.attempts_per_point = 40;
  double pull2 = 0;
  constexpr int kRuns = 120;
  for (std::uint64_t seed = 0; seed < kRuns; ++seed) {
    const auto m = extract_moment(run_protocol(p, {quiet(), w, kDefaultGOver2}, 300 + seed));
    const double pull = static_cast<double>((m.value() - kDefaultGOver2) / m.sigma());
    pull2 += pull * pull;
  }
  EXPECT_NEAR(std::sqrt(pull2 / kRuns), 1, 0.2);
}

TEST(Extract, SpikeOnOnePointIsNotAPeak) {
  std::vector<double> x, y, n;
  for (int i = 0; i < 15; ++i) {
    x.push_back(100 + i);
    y.push_back(i == 6 ? 0.5 : 0);
    n.push_back(20);
  }
  EXPECT_THROW(fit_peak(x, y, n), ConvergenceError);
}
