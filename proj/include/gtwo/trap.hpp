#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "gtwo/errors.hpp"
#include "gtwo/fitting.hpp"
#include "gtwo/uncval.hpp"

namespace gtwo::trap {

/// Free-space electron cyclotron frequency per tesla, e / (2 pi m_e).
inline constexpr double kCyclotronHzPerTesla = 2.799249139e10;
inline constexpr double kBoltzmann = 1.380649e-23;        // J/K
inline constexpr double kElectronMass = 9.1093837015e-31; // kg
/// Electron moment used as ground truth in simulations unless overridden.
inline constexpr double kDefaultGOver2 = 1.00115965218073;

enum class Species { electron, positron };
inline const char *to_string(Species s) {
  return s == Species::electron ? "electron" : "positron";
}

struct TrapState {
  int n = 0;         // cyclotron quantum number
  bool spin_up = true;

  double m_s() const { return spin_up ? 0.5 : -0.5; }
  friend bool operator==(const TrapState &, const TrapState &) = default;
};

/// Cyclotron and anomaly frequencies; the spin frequency is their sum.
struct FrequencySet {
  double nu_c = 0; // Hz
  double nu_a = 0; // Hz

  double nu_s() const { return nu_c + nu_a; }

  static FrequencySet from_field(double B, double g_over_2 = kDefaultGOver2) {
    const double nu_c = kCyclotronHzPerTesla * B;
    return {nu_c, (g_over_2 - 1.0) * nu_c};
  }
};

/// E/h = m_s nu_s + (n + 1/2) nu_c (1 - rel_shift (n + 1/2 + m_s)).
/// rel_shift stands in for the small relativistic shift; 0 reproduces the
/// unperturbed ladder.
inline double energy_level(const TrapState &s, const FrequencySet &f,
                           double rel_shift = 0) {
  if (s.n < 0)
    throw DomainError("cyclotron quantum number must be non-negative");
  const double nh = s.n + 0.5;
  return s.m_s() * f.nu_s() + nh * f.nu_c * (1.0 - rel_shift * (nh + s.m_s()));
}

/// |mu|/mu_B = 1 + nu_a/nu_c. The field cancels in the ratio, so any common
/// rescaling of the two frequencies leaves the value unchanged up to the
/// rounding already present in the rescaled inputs.
inline UncVal moment_from_frequencies(const UncVal &nu_a, const UncVal &nu_c,
                                      Species species = Species::electron) {
  if (!(nu_a.unit() == nu_c.unit()))
    throw UnitError("nu_a and nu_c must share a unit");
  if (!(nu_c.value() > 0))
    throw DomainError("cyclotron frequency must be positive");
  const Real r = nu_a.value() / nu_c.value();
  const Real s = std::hypot(nu_a.sigma() / nu_c.value(),
                            r * nu_c.sigma() / nu_c.value());
  return UncVal(1 + r, s, units::one, to_string(species));
}

struct ExternalStep {
  double time = 0;      // s
  double amplitude = 0; // fractional
};

/// Magnetic field at the particle: B0 (1 + drift t + noise(t) +
/// (1 - shielding) step(t)) + B2 z^2. Noise is exponentially correlated
/// (Ornstein-Uhlenbeck) and piecewise constant on `noise_step` intervals;
/// a zero correlation time gives white noise.
struct FieldModel {
  double B0 = 5.36;                  // T
  double linear_drift = 0;           // fractional per hour
  double noise_sigma = 0;            // fractional, stationary sigma
  double noise_correlation_time = 0; // s
  double noise_step = 1.0;           // s
  double bottle_B2 = 1540;           // T/m^2, detection gradient
  double axial_temperature = 0.23;   // K
  double axial_frequency = 200e6;    // Hz, sets <z^2> = kT / (m w_z^2)
  double shielding_factor = 0;       // 1 = external steps fully rejected
  std::optional<ExternalStep> external_step;

  void validate() const {
    if (!(B0 > 0))
      throw DomainError("B0 must be positive");
    if (noise_sigma < 0)
      throw DomainError("noise_sigma must be non-negative");
    if (noise_correlation_time < 0 || !(noise_step > 0))
      throw DomainError("noise correlation time >= 0 and step > 0 required");
    if (shielding_factor < 0 || shielding_factor > 1)
      throw DomainError("shielding_factor must be in [0, 1]");
    if (axial_temperature < 0 || !(axial_frequency > 0))
      throw DomainError("axial temperature >= 0 and frequency > 0 required");
  }

  double mean_z2() const {
    const double w = 2 * std::numbers::pi * axial_frequency;
    return kBoltzmann * axial_temperature / (kElectronMass * w * w);
  }

  /// Fractional Gaussian linewidth B2 <z^2> / B0 from thermal axial motion
  /// through the bottle.
  double fractional_broadening() const { return bottle_B2 * mean_z2() / B0; }
};

namespace detail {
inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id)};
  return std::mt19937_64(seq);
}
} // namespace detail

/// Seeded realization of a FieldModel. Sampling forward in time is O(1) per
/// noise step; sampling backwards restarts the realization.
class FieldTrajectory {
public:
  FieldTrajectory(FieldModel model, std::uint64_t seed)
      : model_(std::move(model)), seed_(seed) {
    model_.validate();
    restart();
  }

  const FieldModel &model() const { return model_; }

  /// Fractional departure of the central field from B0 at time t.
  double fractional(double t) {
    if (t < 0)
      throw DomainError("field time must be non-negative");
    double f = model_.linear_drift * t / 3600.0;
    if (model_.external_step && t >= model_.external_step->time)
      f += (1.0 - model_.shielding_factor) * model_.external_step->amplitude;
    if (model_.noise_sigma > 0)
      f += noise_at(t);
    return f;
  }

  double field(double t, double z = 0) {
    return model_.B0 * (1.0 + fractional(t)) + model_.bottle_B2 * z * z;
  }

private:
  void restart() {
    rng_ = detail::stream(seed_, 0xF1E1D);
    step_index_ = 0;
    noise_ = model_.noise_sigma * gauss_(rng_);
  }

  double noise_at(double t) {
    const auto k = static_cast<std::int64_t>(std::floor(t / model_.noise_step));
    if (k < step_index_)
      restart();
    const double rho =
        model_.noise_correlation_time > 0
            ? std::exp(-model_.noise_step / model_.noise_correlation_time)
            : 0.0;
    const double kick = model_.noise_sigma * std::sqrt(1.0 - rho * rho);
    while (step_index_ < k) {
      noise_ = rho * noise_ + kick * gauss_(rng_);
      ++step_index_;
    }
    return noise_;
  }

  FieldModel model_;
  std::uint64_t seed_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
  std::int64_t step_index_ = 0;
  double noise_ = 0;
};

inline double simulate_field(const FieldModel &model, double t, double z,
                             std::uint64_t seed) {
  FieldTrajectory traj(model, seed);
  return traj.field(t, z);
}

/// Unit-peak Voigt profile: a Lorentzian of FWHM `lorentz_fwhm` convolved
/// numerically with a Gaussian of standard deviation `gauss_sigma` (Hz).
class Lineshape {
public:
  Lineshape(double lorentz_fwhm, double gauss_sigma)
      : gamma_(0.5 * lorentz_fwhm), sigma_(gauss_sigma) {
    if (lorentz_fwhm < 0 || gauss_sigma < 0 || lorentz_fwhm + gauss_sigma <= 0)
      throw DomainError("lineshape widths must be non-negative, not both zero");
    if (gamma_ > 0 && sigma_ > 0)
      build_table();
  }

  double lorentz_fwhm() const { return 2 * gamma_; }
  double gauss_sigma() const { return sigma_; }

  /// Profile at detuning d (Hz), 1 at d = 0.
  double operator()(double d) const {
    d = std::fabs(d);
    if (sigma_ == 0)
      return 1.0 / (1.0 + (d / gamma_) * (d / gamma_));
    if (gamma_ == 0)
      return std::exp(-0.5 * (d / sigma_) * (d / sigma_));
    if (d >= table_span_) {
      // Far wings are Lorentzian with the full convolution normalization.
      return tail_scale_ / (1.0 + (d / gamma_) * (d / gamma_));
    }
    const double u = d / table_step_;
    const auto i = static_cast<std::size_t>(u);
    const double frac = u - static_cast<double>(i);
    return table_[i] + frac * (table_[i + 1] - table_[i]);
  }

  /// Full width at half maximum of the profile, found numerically.
  double fwhm() const {
    double lo = 0, hi = 2 * (gamma_ + 3 * sigma_) + 1e-300;
    while ((*this)(hi) > 0.5)
      hi *= 2;
    for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
      const double mid = 0.5 * (lo + hi);
      ((*this)(mid) > 0.5 ? lo : hi) = mid;
    }
    return lo + hi;
  }

private:
  double raw(double d) const {
    // int G(u) L(d - u) du, split at the Lorentzian core so the adaptive
    // rule sees it even when gamma << sigma.
    auto f = [&](double u) {
      const double x = (d - u) / gamma_;
      return std::exp(-0.5 * (u / sigma_) * (u / sigma_)) / (1.0 + x * x);
    };
    const double lo = -8 * sigma_, hi = 8 * sigma_;
    double cuts[] = {lo, d - 20 * gamma_, d + 20 * gamma_, hi};
    for (double &c : cuts)
      c = std::clamp(c, lo, hi);
    double acc = 0;
    for (int i = 0; i < 3; ++i)
      if (cuts[i + 1] > cuts[i])
        acc += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            f, cuts[i], cuts[i + 1], 15, 1e-10);
    return acc;
  }

  void build_table() {
    constexpr std::size_t kPoints = 1024;
    table_span_ = 10 * (gamma_ + sigma_);
    table_step_ = table_span_ / static_cast<double>(kPoints - 1);
    table_.resize(kPoints + 1);
    const double peak = raw(0);
    for (std::size_t i = 0; i <= kPoints; ++i)
      table_[i] = raw(static_cast<double>(i) * table_step_) / peak;
    const double d = table_span_;
    tail_scale_ = table_[kPoints - 1] * (1.0 + (d / gamma_) * (d / gamma_));
  }

  double gamma_; // Lorentzian half width
  double sigma_;
  double table_span_ = 0, table_step_ = 0, tail_scale_ = 1;
  std::vector<double> table_;
};

/// Lorentzian (radiative) FWHMs of the two transitions, Hz.
struct LineshapeWidths {
  double cyclotron = 1.0;
  double anomaly = 0.01;
};

enum class ProtocolKind { sequential, simultaneous };
inline const char *to_string(ProtocolKind k) {
  return k == ProtocolKind::sequential ? "sequential" : "simultaneous";
}

/// Evenly spaced grid including both ends; a single point when n == 1.
inline std::vector<double> linspace(double start, double stop, std::size_t n) {
  if (n == 0)
    throw DomainError("grid needs at least one point");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = n == 1 ? start
                  : start + (stop - start) * static_cast<double>(i) /
                                static_cast<double>(n - 1);
  return g;
}

/// Drive schedule. Sequential: a cyclotron scan, an idle gap, an anomaly
/// scan. Simultaneous: both drives every attempt over a joint grid of
/// cyclotron drive x ratio f_a/f_c (one cyclotron drive = ratio scan at a
/// fixed cyclotron frequency); the idle gap splits the run into two halves.
/// Within a scan the grid is visited round-robin, one attempt per point per
/// pass, so slow drifts do not correlate with grid position.
struct Protocol {
  ProtocolKind kind = ProtocolKind::sequential;
  std::vector<double> cyclotron_grid; // Hz (drive frequencies)
  std::vector<double> anomaly_grid;   // Hz, sequential only
  std::vector<double> ratio_grid;     // f_a / f_c, simultaneous only
  int attempts_per_point = 20;
  double detection_efficiency = 1.0;
  double attempt_period = 1.0; // s
  double scan_gap = 0;         // s
  double start_time = 0;       // s

  void validate() const {
    if (attempts_per_point < 1)
      throw DomainError("attempts per point must be >= 1");
    if (!(detection_efficiency > 0 && detection_efficiency <= 1))
      throw DomainError("detection efficiency must be in (0, 1]");
    if (!(attempt_period > 0) || scan_gap < 0 || start_time < 0)
      throw DomainError("attempt period > 0, gap and start time >= 0 required");
    if (cyclotron_grid.empty())
      throw DomainError("cyclotron drive grid is empty");
    if (kind == ProtocolKind::sequential && anomaly_grid.empty())
      throw DomainError("anomaly drive grid is empty");
    if (kind == ProtocolKind::simultaneous && ratio_grid.empty())
      throw DomainError("ratio grid is empty");
  }

  std::size_t total_attempts() const {
    const std::size_t pts = kind == ProtocolKind::sequential
                                ? cyclotron_grid.size() + anomaly_grid.size()
                                : cyclotron_grid.size() * ratio_grid.size();
    return pts * static_cast<std::size_t>(attempts_per_point);
  }

  /// Grids centred on the nominal frequencies of `field`, spanning
  /// +-`span_widths` of each line's Voigt FWHM.
  static Protocol centred(ProtocolKind kind, const FieldModel &field,
                          const LineshapeWidths &widths, std::size_t points,
                          double span_widths = 2.5,
                          double g_over_2 = kDefaultGOver2,
                          std::size_t cyclotron_points = 1);
};

struct ScanPoint {
  double drive = 0;        // Hz; for joint points the cyclotron drive
  double ratio = 0;        // joint points only
  int attempts = 0;
  int counts = 0;
  double expected = 0;     // mean transition probability over the attempts
};

struct ScanResult {
  ProtocolKind kind = ProtocolKind::sequential;
  std::vector<ScanPoint> cyclotron_scan; // sequential
  std::vector<ScanPoint> anomaly_scan;   // sequential
  std::vector<ScanPoint> joint_scan;     // simultaneous
  double end_time = 0;
  double max_probability = 0;
  std::uint64_t seed = 0;
};

/// Physical inputs of a simulated run.
struct Simulation {
  FieldModel field;
  LineshapeWidths widths;
  double g_over_2 = kDefaultGOver2;

  Lineshape cyclotron_lineshape() const {
    const double nu_c = kCyclotronHzPerTesla * field.B0;
    return Lineshape(widths.cyclotron, nu_c * field.fractional_broadening());
  }
  Lineshape anomaly_lineshape() const {
    const double nu_a = (g_over_2 - 1) * kCyclotronHzPerTesla * field.B0;
    return Lineshape(widths.anomaly, nu_a * field.fractional_broadening());
  }
};

inline Protocol Protocol::centred(ProtocolKind kind, const FieldModel &field,
                                  const LineshapeWidths &widths,
                                  std::size_t points, double span_widths,
                                  double g_over_2,
                                  std::size_t cyclotron_points) {
  Simulation sim{field, widths, g_over_2};
  const auto f = FrequencySet::from_field(field.B0, g_over_2);
  const double wc = sim.cyclotron_lineshape().fwhm();
  const double wa = sim.anomaly_lineshape().fwhm();
  Protocol p;
  p.kind = kind;
  if (kind == ProtocolKind::sequential) {
    p.cyclotron_grid = linspace(f.nu_c - span_widths * wc,
                                f.nu_c + span_widths * wc, points);
    p.anomaly_grid = linspace(f.nu_a - span_widths * wa,
                              f.nu_a + span_widths * wa, points);
  } else {
    p.cyclotron_grid =
        cyclotron_points == 1
            ? std::vector<double>{f.nu_c}
            : linspace(f.nu_c - span_widths * wc, f.nu_c + span_widths * wc,
                       cyclotron_points);
    const double r0 = f.nu_a / f.nu_c;
    const double wr = std::hypot(wa / f.nu_c, r0 * wc / f.nu_c);
    p.ratio_grid = linspace(r0 - span_widths * wr, r0 + span_widths * wr, points);
  }
  return p;
}

namespace detail {

struct Drives {
  double f_c = 0, f_a = 0;
};

// Advance the state by one attempt; returns true on a detected jump.
// Relaxation after each detected jump is instantaneous, and the particle is
// re-prepared in the protocol's starting state.
class JumpChain {
public:
  JumpChain(TrapState start, std::uint64_t seed)
      : start_(start), state_(start), rng_(stream(seed, 0x1A3B)) {}

  bool attempt(double probability, TrapState excited) {
    state_ = start_;
    if (uniform_(rng_) >= probability)
      return false;
    last_excited_ = excited;
    return true;
  }

  const TrapState &state() const { return state_; }
  const TrapState &last_excited() const { return last_excited_; }

private:

  TrapState start_, state_, last_excited_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

inline void check_resonance(double max_p, const char *what) {
  if (max_p < 1e-9)
    throw DomainError(std::string("no transition is ever resonant in the ") +
                      what + " grid; check drive frequencies against B0");
}

} // namespace detail

/// Quantum-jump spectroscopy of one trapped particle under a simulated field.
inline ScanResult run_protocol(const Protocol &protocol, const Simulation &sim,
                               std::uint64_t seed) {
  protocol.validate();
  sim.field.validate();
  if (!(sim.widths.cyclotron > 0 && sim.widths.anomaly > 0))
    throw DomainError("lineshape widths must be positive");

  FieldTrajectory traj(sim.field, seed);
  const Lineshape lc = sim.cyclotron_lineshape();
  const Lineshape la = sim.anomaly_lineshape();
  const double a_true = sim.g_over_2 - 1.0;
  const double eff = protocol.detection_efficiency;
  const int passes = protocol.attempts_per_point;

  ScanResult res;
  res.kind = protocol.kind;
  res.seed = seed;
  double t = protocol.start_time;

  auto lines_at = [&](double time) {
    const double nu_c = kCyclotronHzPerTesla * traj.field(time);
    return FrequencySet{nu_c, a_true * nu_c};
  };

  if (protocol.kind == ProtocolKind::sequential) {
    // Completed-measurement cycle: start in (0, up); the cyclotron drive
    // excites (1, up); the anomaly drive takes (0, up) -> (1, down), after
    // which emission leaves the spin flipped.
    detail::JumpChain chain({0, true}, seed);
    auto scan = [&](const std::vector<double> &grid, bool cyclotron,
                    std::vector<ScanPoint> &out) {
      out.assign(grid.size(), {});
      for (std::size_t i = 0; i < grid.size(); ++i)
        out[i].drive = grid[i];
      double max_p = 0;
      for (int pass = 0; pass < passes; ++pass) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
          const auto f = lines_at(t);
          const double p = cyclotron ? eff * lc(grid[i] - f.nu_c)
                                     : eff * la(grid[i] - f.nu_a);
          max_p = std::max(max_p, p);
          out[i].expected += p;
          ++out[i].attempts;
          if (chain.attempt(p, cyclotron ? TrapState{1, true}
                                         : TrapState{1, false}))
            ++out[i].counts;
          t += protocol.attempt_period;
        }
      }
      for (auto &pt : out)
        pt.expected /= pt.attempts;
      res.max_probability = std::max(res.max_probability, max_p);
      detail::check_resonance(max_p, cyclotron ? "cyclotron" : "anomaly");
    };
    scan(protocol.cyclotron_grid, true, res.cyclotron_scan);
    t += protocol.scan_gap;
    scan(protocol.anomaly_grid, false, res.anomaly_scan);
  } else {
    // Proposed cycle: start in (0, down); the cyclotron drive reaches
    // (1, down) and the anomaly drive carries it to (0, up). Only the joint
    // transition flips the spin.
    detail::JumpChain chain({0, false}, seed);
    const auto &fc = protocol.cyclotron_grid;
    const auto &rg = protocol.ratio_grid;
    res.joint_scan.resize(fc.size() * rg.size());
    for (std::size_t j = 0; j < fc.size(); ++j)
      for (std::size_t k = 0; k < rg.size(); ++k) {
        auto &pt = res.joint_scan[j * rg.size() + k];
        pt.drive = fc[j];
        pt.ratio = rg[k];
      }
    const int first_half = (passes + 1) / 2;
    for (int pass = 0; pass < passes; ++pass) {
      if (pass == first_half)
        t += protocol.scan_gap;
      for (auto &pt : res.joint_scan) {
        const auto f = lines_at(t);
        const double p = eff * lc(pt.drive - f.nu_c) *
                         la(pt.ratio * pt.drive - f.nu_a);
        res.max_probability = std::max(res.max_probability, p);
        pt.expected += p;
        ++pt.attempts;
        if (chain.attempt(p, TrapState{0, true}))
          ++pt.counts;
        t += protocol.attempt_period;
      }
    }
    for (auto &pt : res.joint_scan)
      pt.expected /= pt.attempts;
    detail::check_resonance(res.max_probability, "joint");
  }
  res.end_time = t;
  return res;
}

/// Independent runs with seeds base_seed + i, spread over `threads` workers.
/// Results are identical for any thread count.
inline std::vector<ScanResult> run_batch(const Protocol &protocol,
                                         const Simulation &sim,
                                         std::uint64_t base_seed,
                                         std::size_t runs,
                                         unsigned threads = 0) {
  if (threads == 0)
    threads = std::max(1u, std::thread::hardware_concurrency());
  std::vector<ScanResult> out(runs);
  std::vector<std::future<void>> jobs;
  const std::size_t chunk = (runs + threads - 1) / std::max(1u, threads);
  for (std::size_t begin = 0; begin < runs; begin += chunk) {
    const std::size_t end = std::min(runs, begin + chunk);
    jobs.push_back(std::async(std::launch::async, [&, begin, end] {
      for (std::size_t i = begin; i < end; ++i)
        out[i] = run_protocol(protocol, sim, base_seed + i);
    }));
  }
  for (auto &j : jobs)
    j.get();
  return out;
}

struct PeakFit {
  double center = 0, center_sigma = 0;
  double fwhm = 0;
  double amplitude = 0;
};

/// Gaussian-plus-baseline fit of count rate against a scan coordinate.
/// With `attempts` given, the fit is reweighted twice by the binomial
/// variance of the fitted rate so that the flanks, which fix the centre,
/// carry their proper noise.
inline PeakFit fit_peak(const std::vector<double> &x,
                        const std::vector<double> &rate,
                        const std::vector<double> &attempts = {}) {
  if (x.size() != rate.size())
    throw DomainError("peak fit needs matching x and rate arrays");
  if (!attempts.empty() && attempts.size() != x.size())
    throw DomainError("peak fit needs one attempt count per point");
  if (x.size() < 3)
    throw DomainError("peak fit needs at least 3 grid points");
  const auto [mn, mx] = std::minmax_element(rate.begin(), rate.end());
  if (*mn == *mx)
    throw DomainError("no peak: every grid point has the same rate");

  // Work in a centred, unit-scaled coordinate so the normal equations stay
  // well conditioned for frequencies near 1e11 Hz.
  const double x0 = 0.5 * (x.front() + x.back());
  double span = 0;
  for (double v : x)
    span = std::max(span, std::fabs(v - x0));
  if (span == 0)
    throw DomainError("peak fit grid has zero extent");
  std::vector<double> u(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    u[i] = (x[i] - x0) / span;

  // Two starts: the tallest point, and the centroid and rms width of the
  // baseline-subtracted rate, which is steadier when counts are sparse.
  // Solutions narrower than half a grid step are unresolved spikes on a
  // single point and are discarded.
  const double du = x.size() > 1 ? std::fabs(u[1] - u[0]) : 1.0;
  auto g = fit::peak_initial_guess(u, rate);
  g[2] /= 2.3548200450309493; // FWHM -> sigma
  const double amp_scale = std::max(std::fabs(g[0]), 1e-12);
  const fit::Params<4> scale{amp_scale, du, du, amp_scale};
  fit::Params<4> moments{};
  {
    double sw = 0, su = 0, su2 = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double wt = rate[i] - *mn;
      sw += wt;
      su += wt * u[i];
      su2 += wt * u[i] * u[i];
    }
    const double c = su / sw;
    const double sd = std::sqrt(std::max(su2 / sw - c * c, du * du));
    moments = {sw * du / (sd * std::sqrt(2 * std::numbers::pi)), c, sd, *mn};
  }
  std::optional<fit::Result<4>> best;
  for (const auto &start : {moments, g}) {
    try {
      auto r = fit::least_squares<4>(u, rate, start, fit::Gaussian{}, scale);
      if (std::fabs(r.params[2]) < 0.5 * du)
        continue;
      if (!best || r.residual_norm < best->residual_norm)
        best = r;
    } catch (const ConvergenceError &) {
    }
  }
  if (!best)
    throw ConvergenceError("peak fit found no resolved peak");
  auto r = *best;
  if (!attempts.empty()) {
    std::vector<double> w(x.size());
    fit::Options opt;
    for (int pass = 0; pass < 2; ++pass) {
      fit::Params<4> grad{};
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double n = std::max(attempts[i], 1.0);
        const double m = std::clamp(fit::Gaussian{}(u[i], r.params, grad),
                                    0.5 / n, 1 - 0.5 / n);
        w[i] = n / (m * (1 - m));
      }
      opt.weights = w;
      opt.absolute_sigma = true;
      opt.max_iterations = 2000;
      r = fit::least_squares<4>(u, rate, r.params, fit::Gaussian{}, scale, opt);
    }
    if (std::fabs(r.params[2]) < 0.5 * du)
      throw ConvergenceError("peak fit collapsed onto a single grid point");
  }
  PeakFit pf;
  pf.center = x0 + r.params[1] * span;
  pf.center_sigma = r.sigmas[1] * span;
  pf.fwhm = 2.3548200450309493 * std::fabs(r.params[2]) * span;
  pf.amplitude = r.params[0];
  if (pf.center < x.front() - span || pf.center > x.back() + span)
    throw ConvergenceError("peak fit centre left the scanned range");
  return pf;
}

struct ScanAnalysis {
  UncVal moment;
  UncVal nu_c, nu_a; // sequential only
  PeakFit cyclotron, anomaly, ratio;
};

/// Fit the peak of each scan and form the moment. Sequential scans give
/// nu_c and nu_a separately; simultaneous scans are summed over the
/// cyclotron drive and fitted directly in the ratio coordinate.
inline ScanAnalysis analyze_scan(const ScanResult &res,
                                 Species species = Species::electron) {
  std::vector<double> x, y, n;
  auto rates = [&](const std::vector<ScanPoint> &pts) {
    x.clear();
    y.clear();
    n.clear();
    for (const auto &p : pts) {
      if (p.attempts == 0)
        continue;
      x.push_back(p.drive);
      y.push_back(static_cast<double>(p.counts) / p.attempts);
      n.push_back(p.attempts);
    }
  };
  ScanAnalysis out;
  if (res.kind == ProtocolKind::sequential) {
    rates(res.cyclotron_scan);
    out.cyclotron = fit_peak(x, y, n);
    rates(res.anomaly_scan);
    out.anomaly = fit_peak(x, y, n);
    out.nu_c = UncVal(out.cyclotron.center, out.cyclotron.center_sigma,
                      units::hertz, "cyclotron scan");
    out.nu_a = UncVal(out.anomaly.center, out.anomaly.center_sigma,
                      units::hertz, "anomaly scan");
    out.moment = moment_from_frequencies(out.nu_a, out.nu_c, species);
  } else {
    // Marginalize over the cyclotron drive, keeping ratio order.
    std::vector<double> ratios;
    for (const auto &p : res.joint_scan)
      if (std::find(ratios.begin(), ratios.end(), p.ratio) == ratios.end())
        ratios.push_back(p.ratio);
    std::sort(ratios.begin(), ratios.end());
    std::vector<double> counts(ratios.size()), attempts(ratios.size());
    for (const auto &p : res.joint_scan) {
      const auto k = static_cast<std::size_t>(
          std::lower_bound(ratios.begin(), ratios.end(), p.ratio) -
          ratios.begin());
      counts[k] += p.counts;
      attempts[k] += p.attempts;
    }
    x.clear();
    y.clear();
    n.clear();
    for (std::size_t k = 0; k < ratios.size(); ++k)
      if (attempts[k] > 0) {
        x.push_back(ratios[k]);
        y.push_back(counts[k] / attempts[k]);
        n.push_back(attempts[k]);
      }
    out.ratio = fit_peak(x, y, n);
    out.moment = UncVal(1 + static_cast<Real>(out.ratio.center),
                        out.ratio.center_sigma, units::one, to_string(species));
  }
  return out;
}

inline UncVal extract_moment(const ScanResult &res,
                             Species species = Species::electron) {
  return analyze_scan(res, species).moment;
}

} // namespace gtwo::trap
