#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gtwo/constants.hpp"
#include "gtwo/errors.hpp"
#include "gtwo/uncval.hpp"

namespace gtwo {

enum class Atom { rb, cs };
enum class RydbergSource { mpq, orsay };

inline const char *to_string(Atom a) { return a == Atom::rb ? "Rb" : "Cs"; }
inline const char *to_string(RydbergSource r) {
  return r == RydbergSource::mpq ? "MPQ" : "Orsay";
}

/// Inputs to alpha^2 = (2 R_inf / c) (A(x) / A(e)) (h / M(x)).
struct RecoilInputs {
  UncVal rydberg;   // m^-1
  UncVal mass_e;    // amu
  UncVal mass_atom; // amu
  UncVal h_over_M;  // m^2/s
  Real c = 299792458;
  std::string atom_label;

  void validate() const {
    auto check = [](const UncVal &v, const Unit &u, const char *name) {
      if (!(v.value() > 0))
        throw DomainError(std::string(name) + " must be positive");
      if (!(v.unit() == u))
        throw UnitError(std::string(name) + " must be in " + u.str());
    };
    check(rydberg, units::per_meter, "rydberg");
    check(mass_e, units::amu, "mass_e");
    check(mass_atom, units::amu, "mass_atom");
    check(h_over_M, units::m2_per_s, "h_over_M");
    if (!(c > 0))
      throw DomainError("c must be positive");
  }

  /// Orsay is the default: it is the value that reproduces the published
  /// alpha(Rb 2011) and alpha(Cs 2018) to their last digit.
  static RecoilInputs from_registry(const ConstantsRegistry &reg, Atom atom,
                                    RydbergSource ryd = RydbergSource::orsay) {
    RecoilInputs in;
    in.rydberg = reg.get(ryd == RydbergSource::mpq ? "R_inf_MPQ" : "R_inf_Orsay");
    in.mass_e = reg.get("A_e");
    in.mass_atom = reg.get(atom == Atom::rb ? "A_Rb" : "A_Cs");
    in.h_over_M = reg.get(atom == Atom::rb ? "h_over_M_Rb" : "h_over_M_Cs");
    if (reg.contains("c"))
      in.c = reg.get("c").value();
    in.atom_label = to_string(atom);
    return in;
  }
};

/// Photon-recoil alpha. Each input enters squared, so its fractional
/// uncertainty contributes half to that of alpha.
inline UncVal alpha_from_recoil(const RecoilInputs &in) {
  in.validate();
  const Real alpha2 = 2 * in.rydberg.value() / in.c * in.mass_atom.value() /
                      in.mass_e.value() * in.h_over_M.value();
  const Real alpha = std::sqrt(alpha2);
  const Real rel = 0.5L * std::sqrt(
      in.rydberg.relative_sigma() * in.rydberg.relative_sigma() +
      in.mass_e.relative_sigma() * in.mass_e.relative_sigma() +
      in.mass_atom.relative_sigma() * in.mass_atom.relative_sigma() +
      in.h_over_M.relative_sigma() * in.h_over_M.relative_sigma());
  return UncVal(alpha, alpha * rel, units::one,
                "recoil (" + in.atom_label + ")");
}

struct RecoilContribution {
  std::string name;
  Real input_ppt;  // fractional sigma of the input
  Real alpha_ppt;  // half of it: contribution to alpha
};

inline std::vector<RecoilContribution>
recoil_contribution_table(const RecoilInputs &in) {
  in.validate();
  auto row = [](std::string name, const UncVal &v) {
    const Real ppt = 1e12L * v.relative_sigma();
    return RecoilContribution{std::move(name), ppt, ppt / 2};
  };
  return {row("R_inf", in.rydberg), row("A(e)", in.mass_e),
          row("A(" + in.atom_label + ")", in.mass_atom),
          row("h/M(" + in.atom_label + ")", in.h_over_M)};
}

} // namespace gtwo
