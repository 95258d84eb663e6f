#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "gtwo/errors.hpp"
#include "gtwo/fft.hpp"
#include "gtwo/fitting.hpp"
#include "gtwo/uncval.hpp"

namespace gtwo::nmr {

/// Gyromagnetic ratio of 3He taken from the probe's own operating point
/// (172.3 MHz at 5.3 T), in Hz/T.
inline constexpr double kHe3SpinFrequency = 172.3e6;
inline constexpr double kHe3Field = 5.3;
inline constexpr double kHe3Gamma = kHe3SpinFrequency / kHe3Field;

enum class ShimChannel : std::size_t {
  z0, z, z2, z3, x, y, zx, zy, xy, x2_y2, z2x, z2y
};
inline constexpr std::size_t kShimChannels = 12;
inline constexpr std::array<std::string_view, kShimChannels> kShimNames{
    "z0", "z", "z2", "z3", "x", "y", "zx", "zy", "xy", "x2-y2", "z2x", "z2y"};

/// Fractional field per normalized coordinate for each of the 12 coils.
/// z0 is the uniform sweep coil; the others null one spatial symmetry each.
struct ShimConfig {
  std::array<double, kShimChannels> coeff{};

  double &operator[](ShimChannel c) { return coeff[static_cast<std::size_t>(c)]; }
  double operator[](ShimChannel c) const {
    return coeff[static_cast<std::size_t>(c)];
  }
  friend bool operator==(const ShimConfig &, const ShimConfig &) = default;

  static ShimChannel channel_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kShimChannels; ++i)
      if (kShimNames[i] == name)
        return static_cast<ShimChannel>(i);
    throw DomainError("unknown shim channel '" + std::string(name) + "'");
  }
};

struct Vec3 {
  double x = 0, y = 0, z = 0;
};

/// Fractional field offset at a point normalized to the bulb radius.
inline double field_map(const ShimConfig &s, const Vec3 &r) {
  if (r.x * r.x + r.y * r.y + r.z * r.z > 1.0 + 1e-12)
    throw DomainError("field_map position outside the unit ball");
  const double x = r.x, y = r.y, z = r.z;
  const std::array<double, kShimChannels> basis{
      1.0,   z,     z * z, z * z * z, x,         y,
      z * x, z * y, x * y, x * x - y * y, z * z * x, z * z * y};
  double acc = 0;
  for (std::size_t i = 0; i < kShimChannels; ++i)
    acc += s.coeff[i] * basis[i];
  return acc;
}

struct BulbGeometry {
  double diameter = 0.01; // m
  std::size_t points = 2000;
  std::string scheme = "halton";
};

namespace detail {
inline double radical_inverse(std::uint64_t i, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base), f = inv, r = 0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}
} // namespace detail

/// Deterministic low-discrepancy points filling the unit ball: a 3-D Halton
/// sequence (bases 2, 3, 5) over the cube with rejection.
inline std::vector<Vec3> ball_points(std::size_t n) {
  std::vector<Vec3> pts;
  pts.reserve(n);
  for (std::uint64_t i = 1; pts.size() < n; ++i) {
    Vec3 p{2 * detail::radical_inverse(i, 2) - 1,
           2 * detail::radical_inverse(i, 3) - 1,
           2 * detail::radical_inverse(i, 5) - 1};
    if (p.x * p.x + p.y * p.y + p.z * p.z <= 1.0)
      pts.push_back(p);
  }
  return pts;
}

struct FidSignal {
  double sample_rate = 0;   // Hz
  double duration = 0;      // s
  double mix_frequency = 0; // Hz, subtracted before recording
  double t2 = 0;            // s
  std::vector<std::complex<double>> samples;
};

/// Optional second source standing in for the capillary that feeds the bulb.
struct TailSource {
  double weight = 0;          // fraction of total signal
  double field_offset = 0;    // fractional field at the capillary
};

struct SynthesisParams {
  BulbGeometry geometry;
  double B0 = kHe3Field;
  double gamma = kHe3Gamma; // Hz/T
  double t2 = 0.2;          // s; <= 0 means no decay
  double mix_frequency = kHe3SpinFrequency - 840.0;
  double sample_rate = 4000;
  double duration = 25;
  double noise_sigma = 0; // per quadrature per sample
  std::uint64_t seed = 0;
  TailSource tail;
};

/// s(t) = (1/N) sum_points exp(2 pi i (gamma B0 (1 + offset) - mix) t)
///        exp(-t/T2) + complex white noise.
inline FidSignal synthesize_fid(const ShimConfig &shims,
                                const SynthesisParams &p) {
  if (!(p.gamma * p.B0 > 0))
    throw DomainError("gamma*B0 must be positive");
  if (!(p.sample_rate > 0 && p.duration > 0))
    throw DomainError("sample rate and duration must be positive");
  if (p.geometry.points == 0 || !(p.geometry.diameter > 0))
    throw DomainError("bulb geometry needs positive diameter and points");
  if (p.tail.weight < 0 || p.tail.weight >= 1)
    throw DomainError("tail weight must be in [0, 1)");

  const auto n_samples =
      static_cast<std::size_t>(std::llround(p.sample_rate * p.duration));
  if (n_samples == 0)
    throw DomainError("FID has no samples");
  const double larmor = p.gamma * p.B0;
  const double dt = 1.0 / p.sample_rate;

  struct Source {
    double freq;
    double weight;
  };
  std::vector<Source> sources;
  const auto pts = ball_points(p.geometry.points);
  const double w_bulb = (1.0 - p.tail.weight) / static_cast<double>(pts.size());
  sources.reserve(pts.size() + 1);
  for (const auto &r : pts)
    sources.push_back({larmor * (1.0 + field_map(shims, r)) - p.mix_frequency,
                       w_bulb});
  if (p.tail.weight > 0)
    sources.push_back({larmor * (1.0 + p.tail.field_offset) - p.mix_frequency,
                       p.tail.weight});
  for (const auto &s : sources)
    if (std::fabs(s.freq) >= 0.5 * p.sample_rate)
      throw DomainError("undersampled: baseband content at " +
                        std::to_string(s.freq) + " Hz exceeds rate/2");

  // Sum per-source phasors by recursion, re-anchoring exactly every block.
  constexpr double two_pi = 2 * std::numbers::pi;
  constexpr std::size_t block = 4096;
  std::vector<std::complex<double>> acc(n_samples);
  for (const auto &s : sources) {
    const std::complex<double> w = std::polar(1.0, two_pi * s.freq * dt);
    for (std::size_t start = 0; start < n_samples; start += block) {
      std::complex<double> z =
          std::polar(s.weight, two_pi * s.freq * static_cast<double>(start) * dt);
      const std::size_t end = std::min(n_samples, start + block);
      for (std::size_t k = start; k < end; ++k) {
        acc[k] += z;
        z *= w;
      }
    }
  }
  const double decay = p.t2 > 0 ? std::exp(-dt / p.t2) : 1.0;
  double env = 1.0;
  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t k = 0; k < n_samples; ++k) {
    if (k % block == 0 && p.t2 > 0)
      env = std::exp(-static_cast<double>(k) * dt / p.t2);
    acc[k] *= env;
    env *= decay;
    if (p.noise_sigma > 0)
      acc[k] += std::complex<double>(p.noise_sigma * gauss(rng),
                                     p.noise_sigma * gauss(rng));
  }
  FidSignal fid;
  fid.sample_rate = p.sample_rate;
  fid.duration = static_cast<double>(n_samples) * dt;
  fid.mix_frequency = p.mix_frequency;
  fid.t2 = p.t2;
  fid.samples = std::move(acc);
  return fid;
}

/// Magnitude spectrum |S(f)| on a uniform baseband grid in ascending order,
/// S_k = dt * DFT(samples zero-padded to N * zero_pad_factor). With this
/// normalization sum |s|^2 dt = sum |S|^2 df.
struct Spectrum {
  std::vector<double> frequency; // baseband Hz
  std::vector<double> magnitude;
  double resolution = 0;         // Hz
  double reference_frequency = 0; // add to frequency for the absolute value
};

inline Spectrum spectrum(const FidSignal &fid, int zero_pad_factor = 1) {
  if (zero_pad_factor < 1)
    throw DomainError("zero_pad_factor must be >= 1");
  if (fid.samples.empty())
    throw DomainError("empty FID signal");
  if (!(fid.sample_rate > 0))
    throw DomainError("FID sample rate must be positive");
  const std::size_t n = fid.samples.size();
  const std::size_t m = n * static_cast<std::size_t>(zero_pad_factor);
  const auto X = dft_padded(fid.samples, m);
  const double dt = 1.0 / fid.sample_rate;
  Spectrum s;
  s.resolution = fid.sample_rate / static_cast<double>(m);
  s.reference_frequency = fid.mix_frequency;
  s.frequency.resize(m);
  s.magnitude.resize(m);
  // Negative frequencies first: bin k maps to k - m for k >= ceil(m/2).
  const std::size_t half = (m + 1) / 2;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t k = (i + half) % m;
    const double kk = k >= half ? static_cast<double>(k) - static_cast<double>(m)
                                : static_cast<double>(k);
    s.frequency[i] = kk * s.resolution;
    s.magnitude[i] = std::abs(X[k]) * dt;
  }
  return s;
}

struct LorentzianFit {
  double center = 0; // baseband Hz
  double fwhm = 0;   // Hz
  double amplitude = 0;
  double baseline = 0;
  double center_sigma = 0, fwhm_sigma = 0, amplitude_sigma = 0,
         baseline_sigma = 0;
  double residual_norm = 0;
  double reference_frequency = 0;
  int iterations = 0;

  double absolute_center() const { return reference_frequency + center; }
};

struct FrequencyWindow {
  double lo = 0, hi = 0;
};

namespace detail {
inline std::size_t argmax(const std::vector<double> &v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) -
                                  v.begin());
}
} // namespace detail

/// Window of +-`half_widths` FWHM around the global peak, with the FWHM
/// estimated from the half-power crossings.
inline FrequencyWindow default_window(const Spectrum &s,
                                      double half_widths = 10) {
  if (s.magnitude.empty())
    throw DomainError("empty spectrum");
  std::vector<double> power(s.magnitude.size());
  for (std::size_t i = 0; i < power.size(); ++i)
    power[i] = s.magnitude[i] * s.magnitude[i];
  const auto g = fit::peak_initial_guess(s.frequency, power);
  const double w = std::max(g[2], 4 * s.resolution);
  const double c = s.frequency[detail::argmax(power)];
  return {c - half_widths * w, c + half_widths * w};
}

/// Fit A / (1 + ((f - f0)/(G/2))^2) + b to the power |S|^2 inside the window.
/// The power spectrum of an exponentially decaying tone is exactly
/// Lorentzian; the magnitude is its square root.
inline LorentzianFit fit_lorentzian(const Spectrum &s, FrequencyWindow win) {
  if (s.magnitude.empty())
    throw DomainError("empty spectrum");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < s.frequency.size(); ++i)
    if (s.frequency[i] >= win.lo && s.frequency[i] <= win.hi) {
      xs.push_back(s.frequency[i]);
      ys.push_back(s.magnitude[i] * s.magnitude[i]);
    }
  if (xs.size() < 8)
    throw DomainError("fit window holds fewer than 8 grid points");
  const double gmax = s.frequency[detail::argmax(s.magnitude)];
  if (gmax < win.lo || gmax > win.hi)
    throw DomainError("fit window does not contain the spectral maximum");

  const auto guess = fit::peak_initial_guess(xs, ys);
  const double amp_scale = std::max(std::fabs(guess[0]), 1e-300);
  fit::Params<4> scale{amp_scale, s.resolution, s.resolution, amp_scale};
  auto r = fit::least_squares<4>(xs, ys, guess, fit::Lorentzian{}, scale);
  LorentzianFit out;
  out.amplitude = r.params[0];
  out.center = r.params[1];
  out.fwhm = std::fabs(r.params[2]);
  out.baseline = r.params[3];
  out.amplitude_sigma = r.sigmas[0];
  out.center_sigma = r.sigmas[1];
  out.fwhm_sigma = r.sigmas[2];
  out.baseline_sigma = r.sigmas[3];
  out.residual_norm = r.residual_norm;
  out.reference_frequency = s.reference_frequency;
  out.iterations = r.iterations;
  if (!(out.fwhm > 0))
    throw ConvergenceError("Lorentzian fit collapsed to zero width");
  return out;
}

inline LorentzianFit fit_lorentzian(const Spectrum &s) {
  return fit_lorentzian(s, default_window(s));
}

/// Relative inhomogeneity 1e9 * fwhm / spin frequency.
inline double inhomogeneity_ppb(double fwhm_hz, double spin_freq_hz) {
  if (fwhm_hz < 0 || !(spin_freq_hz > 0))
    throw DomainError("inhomogeneity needs fwhm >= 0 and spin frequency > 0");
  return 1e9 * fwhm_hz / spin_freq_hz;
}

struct DriftPoint {
  double t_hr = 0;
  double f0_hz = 0;
  double sigma_hz = 0;
};

struct DriftSeries {
  std::vector<DriftPoint> points;
  double spin_frequency = kHe3SpinFrequency;
};

/// Weighted straight line through (t, 1e9 (f0 - mean f0) / spin frequency).
/// Returns the slope in ppb/hr with its standard error from the point sigmas;
/// when every sigma is zero the fit is unweighted and the error comes from
/// the residual scatter.
inline UncVal drift_rate(const DriftSeries &series) {
  const auto &pts = series.points;
  if (pts.size() < 3)
    throw DomainError("drift fit needs at least 3 points");
  if (!(series.spin_frequency > 0))
    throw DomainError("spin frequency must be positive");
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (!(pts[i].t_hr > pts[i - 1].t_hr))
      throw DomainError("drift timestamps must be strictly increasing");

  double mean_f = 0;
  for (const auto &p : pts)
    mean_f += p.f0_hz;
  mean_f /= static_cast<double>(pts.size());

  bool weighted = std::all_of(pts.begin(), pts.end(),
                              [](const DriftPoint &p) { return p.sigma_hz > 0; });
  if (!weighted && std::any_of(pts.begin(), pts.end(), [](const DriftPoint &p) {
        return p.sigma_hz > 0;
      }))
    throw DomainError("drift series mixes zero and nonzero sigmas");

  double S = 0, Sx = 0, Sy = 0, Sxx = 0, Sxy = 0;
  std::vector<double> ys(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto &p = pts[i];
    ys[i] = 1e9 * (p.f0_hz - mean_f) / series.spin_frequency;
    const double sy = 1e9 * p.sigma_hz / series.spin_frequency;
    const double w = weighted ? 1.0 / (sy * sy) : 1.0;
    S += w;
    Sx += w * p.t_hr;
    Sy += w * ys[i];
    Sxx += w * p.t_hr * p.t_hr;
    Sxy += w * p.t_hr * ys[i];
  }
  const double delta = S * Sxx - Sx * Sx;
  if (!(delta > 0))
    throw DomainError("degenerate timestamps in drift fit");
  const double slope = (S * Sxy - Sx * Sy) / delta;
  double var = S / delta;
  if (!weighted) {
    const double icpt = (Sy - slope * Sx) / S;
    double rss = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double r = ys[i] - icpt - slope * pts[i].t_hr;
      rss += r * r;
    }
    var *= rss / static_cast<double>(pts.size() - 2);
  }
  return UncVal(slope, std::sqrt(var),
                Unit::parse("1/hr"), "NMR drift fit");
}

/// Synthesis parameters shared by every evaluation in a shim search.
struct ShimSearchParams {
  SynthesisParams synthesis;
  int zero_pad_factor = 4;
  int budget = 200;          // objective evaluations, including the initial
  double initial_step = 1e-8; // fractional field per normalized coordinate
  double min_step = 1e-12;
};

struct ShimSearchResult {
  ShimConfig best;
  double best_fwhm = 0;
  double initial_fwhm = 0;
  int evaluations = 0;
};

/// Linewidth objective: synthesize, transform and fit.
inline double shim_fwhm(const ShimConfig &s, const ShimSearchParams &p) {
  const auto fid = synthesize_fid(s, p.synthesis);
  return fit_lorentzian(spectrum(fid, p.zero_pad_factor)).fwhm;
}

/// Coordinate descent with a shrinking step over the 11 shim channels (z0
/// only moves the line and is left alone). A move is kept only if it
/// strictly narrows the line, so the result is never worse than `initial`.
inline ShimSearchResult shim_search(const ShimConfig &initial,
                                    const ShimSearchParams &p) {
  if (p.budget < 13)
    throw DomainError("shim search budget must be at least 13 evaluations");
  ShimSearchResult res;
  res.best = initial;
  res.best_fwhm = res.initial_fwhm = shim_fwhm(initial, p);
  res.evaluations = 1;
  double step = p.initial_step;
  auto exhausted = [&] { return res.evaluations >= p.budget; };

  while (!exhausted() && step >= p.min_step) {
    bool improved = false;
    for (std::size_t ch = 1; ch < kShimChannels && !exhausted(); ++ch) {
      for (double dir : {+1.0, -1.0}) {
        bool moved = false;
        while (!exhausted()) {
          ShimConfig trial = res.best;
          trial.coeff[ch] += dir * step;
          const double f = shim_fwhm(trial, p);
          ++res.evaluations;
          if (f < res.best_fwhm) {
            res.best = trial;
            res.best_fwhm = f;
            moved = improved = true;
          } else {
            break;
          }
        }
        if (moved)
          break;
      }
    }
    if (!improved)
      step *= 0.5;
  }
  return res;
}

} // namespace gtwo::nmr
