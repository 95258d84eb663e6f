#pragma once

#include <cmath>
#include <numbers>
#include <utility>

#include "gtwo/errors.hpp"
#include "gtwo/uncval.hpp"

namespace gtwo::planning {

/// hbar*c in MeV*fm, exact in the SI since 2019.
inline constexpr double kHbarC_MeVfm = 197.3269804593025;
/// Electron rest energy in MeV (CODATA 2018).
inline constexpr double kElectronRestEnergy_MeV = 0.51099895000;
inline constexpr double kStefanBoltzmann = 5.670374419e-8; // W m^-2 K^-4

/// CPT test: positron magnitude against electron magnitude, in ppt of the
/// electron value.
inline ComparisonResult cpt_compare(const UncVal &mu_plus,
                                    const UncVal &mu_minus_magnitude) {
  if (!mu_plus.unit().is_dimensionless())
    throw UnitError("moments must be dimensionless");
  if (std::fabs(mu_plus.value() - 1) > 0.01L ||
      std::fabs(mu_minus_magnitude.value() - 1) > 0.01L)
    throw DomainError("cpt_compare expects moment magnitudes near 1.001");
  return sigma_compare(mu_plus, mu_minus_magnitude);
}

/// How the two projected uncertainties combine in a future comparison.
enum class CptCombination {
  independent, // quadrature sum
  limiting     // common systematics cancel; the larger sigma limits
};

/// Improvement of the CPT comparison from `current_sigma_ppt` to projected
/// electron/positron sigmas.
inline double cpt_improvement_factor(double current_sigma_ppt,
                                     double projected_electron_ppt,
                                     double projected_positron_ppt,
                                     CptCombination how) {
  if (!(current_sigma_ppt > 0) || projected_electron_ppt < 0 ||
      projected_positron_ppt < 0)
    throw DomainError("improvement factor needs positive sigmas");
  const double projected =
      how == CptCombination::independent
          ? std::hypot(projected_electron_ppt, projected_positron_ppt)
          : std::max(projected_electron_ppt, projected_positron_ppt);
  if (projected == 0)
    throw DomainError("projected comparison sigma is zero");
  return current_sigma_ppt / projected;
}

enum class SubstructureModel { linear, chiral };

inline const char *to_string(SubstructureModel m) {
  return m == SubstructureModel::linear ? "linear" : "chiral";
}

struct LimitResult {
  double mass_energy_gev = 0; // m* c^2
  double radius_m = 0;        // hbar c / (m* c^2)
  SubstructureModel model = SubstructureModel::linear;
};

inline double radius_from_energy_mev(double energy_mev) {
  return kHbarC_MeVfm / energy_mev * 1e-15;
}

/// Constituent mass scale implied by a moment deviation delta_a:
/// linear delta_a ~ m/m*, chiral delta_a ~ (m/m*)^2.
inline LimitResult substructure_limit(double delta_a, SubstructureModel model,
                                      double electron_rest_energy_mev =
                                          kElectronRestEnergy_MeV) {
  if (!(delta_a > 0 && delta_a <= 1))
    throw DomainError("delta_a must be in (0, 1]");
  if (!(electron_rest_energy_mev > 0))
    throw DomainError("electron rest energy must be positive");
  const double mstar_mev = model == SubstructureModel::linear
                               ? electron_rest_energy_mev / delta_a
                               : electron_rest_energy_mev / std::sqrt(delta_a);
  return {mstar_mev * 1e-3, radius_from_energy_mev(mstar_mev), model};
}

inline LimitResult substructure_limit(double delta_a, SubstructureModel model,
                                      const UncVal &electron_rest_energy) {
  return substructure_limit(
      delta_a, model,
      static_cast<double>(electron_rest_energy.convert_to(units::mev).value()));
}

/// Combined 1-sigma of two independent values, one convention for delta_a.
inline double combined_sigma(const UncVal &a, const UncVal &b) {
  return static_cast<double>(std::hypot(a.sigma(), b.sigma()));
}

/// Contact-interaction radius R = hbar c / E, E in TeV, R in m.
inline double contact_radius(double energy_tev) {
  if (!(energy_tev > 0))
    throw DomainError("contact energy must be positive");
  return radius_from_energy_mev(energy_tev * 1e6);
}

inline double contact_radius(const UncVal &energy) {
  return contact_radius(
      static_cast<double>(energy.convert_to(units::tev).value()));
}

struct PositronCounts {
  double low = 0, high = 0;
};

/// Positrons accumulated = activity * rate * duration * efficiency for the
/// low and high per-microcurie loading rates.
inline PositronCounts positron_accumulation(double activity_uci,
                                            double duration_s,
                                            double transfer_efficiency = 1.0,
                                            double rate_low = 3.0,
                                            double rate_high = 6.0) {
  if (activity_uci < 0 || duration_s < 0)
    throw DomainError("activity and duration must be non-negative");
  if (transfer_efficiency < 0 || transfer_efficiency > 1)
    throw DomainError("transfer efficiency must be in [0, 1]");
  if (rate_low < 0 || rate_high < rate_low)
    throw DomainError("loading rates must satisfy 0 <= low <= high");
  const double k = activity_uci * duration_s * transfer_efficiency;
  return {k * rate_low, k * rate_high};
}

/// Blackbody power through a round aperture, sigma (T_hot^4 - T_cold^4) A.
inline double aperture_heat_load(double diameter_m, double hot_k,
                                 double cold_k) {
  if (!(diameter_m > 0))
    throw DomainError("aperture diameter must be positive");
  if (!(cold_k >= 0) || hot_k < cold_k)
    throw DomainError("aperture needs hot >= cold >= 0 K");
  const double area = std::numbers::pi * 0.25 * diameter_m * diameter_m;
  const double t4 = hot_k * hot_k * hot_k * hot_k - cold_k * cold_k * cold_k * cold_k;
  return kStefanBoltzmann * t4 * area;
}

} // namespace gtwo::planning
