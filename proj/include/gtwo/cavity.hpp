#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <tuple>
#include <vector>

#include "gtwo/bessel.hpp"
#include "gtwo/errors.hpp"

namespace gtwo::cavity {

inline constexpr double kSpeedOfLight = 299792458.0;

struct CavityGeometry {
  double radius = 0; // rho0, m
  double length = 0; // full interior length, m

  void validate() const {
    if (!(radius > 0 && length > 0))
      throw DomainError("cavity radius and length must be positive");
  }
  /// Geometry from a half-length input, the other common trap convention.
  static CavityGeometry from_half_length(double radius, double half_length) {
    return {radius, 2 * half_length};
  }
};

enum class ModeKind { TE, TM };
enum class Coupling { cyclotron, cooling, none };

inline const char *to_string(ModeKind k) { return k == ModeKind::TE ? "TE" : "TM"; }
inline const char *to_string(Coupling c) {
  switch (c) {
  case Coupling::cyclotron: return "cyclotron-coupling";
  case Coupling::cooling: return "cooling-candidate";
  case Coupling::none: return "none";
  }
  return "?";
}

struct CavityMode {
  ModeKind kind;
  int m, n, p;
  double frequency; // Hz
  Coupling coupling;
};

/// Coupling to a particle at the cavity centre. Only m = 1 modes have a
/// transverse electric field (or its axial gradient) on axis. TE_1np with
/// odd p and TM_1np with even p have an antinode there and couple to the
/// cyclotron motion; the opposite parity has a node with a gradient and is a
/// sideband-cooling candidate.
inline Coupling classify_center_coupling(ModeKind kind, int m, int /*n*/,
                                         int p) {
  if (m != 1)
    return Coupling::none;
  const bool odd = p % 2 != 0;
  const bool antinode = kind == ModeKind::TE ? odd : !odd;
  return antinode ? Coupling::cyclotron : Coupling::cooling;
}

/// f = c/(2 pi) sqrt((x/rho0)^2 + (p pi / L)^2) with x the n-th zero of J_m
/// (TM) or J_m' (TE).
inline double mode_frequency(const CavityGeometry &g, ModeKind kind, int m,
                             int n, int p) {
  g.validate();
  if (m < 0 || n < 1 || p < (kind == ModeKind::TE ? 1 : 0))
    throw DomainError("invalid cavity mode indices");
  const double x = bessel_zero(
      kind == ModeKind::TM ? BesselKind::J : BesselKind::Jprime, m, n);
  const double kr = x / g.radius;
  const double kz = p * std::numbers::pi / g.length;
  return kSpeedOfLight / (2 * std::numbers::pi) * std::sqrt(kr * kr + kz * kz);
}

/// All TE/TM modes with m <= max_m, n <= max_n, p <= max_p, ascending.
inline std::vector<CavityMode> mode_frequencies(const CavityGeometry &g,
                                                int max_m, int max_n,
                                                int max_p) {
  g.validate();
  if (max_m < 0 || max_n < 1 || max_p < 1)
    throw DomainError("mode cutoffs: max_m >= 0, max_n >= 1, max_p >= 1");
  std::vector<CavityMode> out;
  for (ModeKind kind : {ModeKind::TE, ModeKind::TM}) {
    for (int m = 0; m <= max_m; ++m) {
      for (int n = 1; n <= max_n; ++n) {
        const double x = bessel_zero(
            kind == ModeKind::TM ? BesselKind::J : BesselKind::Jprime, m, n);
        const double kr = x / g.radius;
        for (int p = kind == ModeKind::TE ? 1 : 0; p <= max_p; ++p) {
          const double kz = p * std::numbers::pi / g.length;
          const double f = kSpeedOfLight / (2 * std::numbers::pi) *
                           std::sqrt(kr * kr + kz * kz);
          out.push_back(
              {kind, m, n, p, f, classify_center_coupling(kind, m, n, p)});
        }
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const CavityMode &a, const CavityMode &b) {
    return std::tie(a.frequency, a.kind, a.m, a.n, a.p) <
           std::tie(b.frequency, b.kind, b.m, b.n, b.p);
  });
  return out;
}

struct Detuning {
  CavityMode mode;
  double detuning; // f_mode - nu_c, Hz
  bool resonant;
};

struct DetuningReport {
  std::vector<Detuning> coupled; // cyclotron-coupling modes by |detuning|
  std::optional<Detuning> nearest_cooling;
};

/// Cyclotron-coupling modes ordered by distance from nu_c, plus the nearest
/// cooling candidate. `resonant_tol` is the |detuning| treated as zero.
inline DetuningReport detuning_report(double nu_c,
                                      const std::vector<CavityMode> &modes,
                                      double resonant_tol = 0) {
  if (modes.empty())
    throw DomainError("detuning report needs at least one mode");
  DetuningReport r;
  for (const auto &m : modes) {
    const double d = m.frequency - nu_c;
    const Detuning entry{m, d, std::fabs(d) <= resonant_tol};
    if (m.coupling == Coupling::cyclotron) {
      r.coupled.push_back(entry);
    } else if (m.coupling == Coupling::cooling) {
      if (!r.nearest_cooling ||
          std::fabs(d) < std::fabs(r.nearest_cooling->detuning))
        r.nearest_cooling = entry;
    }
  }
  std::stable_sort(r.coupled.begin(), r.coupled.end(),
                   [](const Detuning &a, const Detuning &b) {
                     return std::fabs(a.detuning) < std::fabs(b.detuning);
                   });
  return r;
}

} // namespace gtwo::cavity
