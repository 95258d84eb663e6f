#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "gtwo/alpha_recoil.hpp"
#include "gtwo/cavity.hpp"
#include "gtwo/constants.hpp"
#include "gtwo/io.hpp"
#include "gtwo/nmr.hpp"
#include "gtwo/planning.hpp"
#include "gtwo/sm_series.hpp"
#include "gtwo/trap.hpp"

using namespace gtwo;
using io::num;

namespace {

struct Globals {
  std::string constants;
  std::string format = "table";
  std::uint64_t seed = 0;
  std::string output;

  io::Format fmt() const { return io::parse_format(format); }
  ConstantsRegistry registry() const { return resolve_registry(constants); }
};

// value(uncertainty) with two digits of uncertainty.
std::string concise(long double v, long double s) {
  if (!(s > 0))
    return num(static_cast<double>(v));
  const int e = static_cast<int>(std::floor(std::log10(s))) - 1;
  if (e >= 0)
    return num(v, 1, false) + "(" + num(s, 1, false) + ")";
  const int dec = -e;
  const long double u = std::round(s * std::pow(10.0L, dec));
  return num(v, dec, true) + "(" + std::to_string(static_cast<long long>(u)) +
         ")";
}

std::string ld(long double x) { return num(x, 17, false); }

std::unique_ptr<std::istream> open_input(const std::string &path) {
  if (path == "-")
    return std::make_unique<std::istringstream>(
        std::string(std::istreambuf_iterator<char>(std::cin), {}));
  auto f = std::make_unique<std::ifstream>(path, std::ios::binary);
  if (!*f)
    throw UsageError("cannot open input '" + path + "'");
  return f;
}

void emit(const Globals &g, const std::string &text) {
  if (g.output.empty() || g.output == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(g.output, std::ios::binary);
  if (!f)
    throw UsageError("cannot write '" + g.output + "'");
  f << text;
}

template <class T> void emit(const Globals &g, const T &tableish) {
  std::ostringstream os;
  tableish.write(os, g.fmt());
  emit(g, os.str());
}

UncVal alpha_source(const ConstantsRegistry &reg, const std::string &src,
                    double sigma) {
  if (src == "cs2018")
    return alpha_from_inverse(reg.get("alpha_inv_Cs2018"));
  if (src == "rb2011")
    return alpha_from_inverse(reg.get("alpha_inv_Rb2011"));
  if (src == "moment2008")
    return alpha_from_inverse(reg.get("alpha_inv_moment2008"));
  double v;
  try {
    v = io::parse_double(src, "alpha");
  } catch (const ParseError &) {
    throw UsageError("--alpha must be cs2018, rb2011, moment2008 or a value of "
                     "alpha^-1");
  }
  return alpha_from_inverse(UncVal(v, sigma, units::one, "command line"));
}

UncVal moment_source(const ConstantsRegistry &reg, const std::string &src,
                     double sigma) {
  if (src == "measured2008")
    return reg.get("mu_e_minus_measured2008");
  if (src == "positron1987")
    return reg.get("mu_e_plus_measured1987");
  double v;
  try {
    v = io::parse_double(src, "moment");
  } catch (const ParseError &) {
    throw UsageError("--moment-source must be measured2008, positron1987 or a "
                     "value of |mu|/mu_B");
  }
  return UncVal(v, sigma, units::one, "command line");
}

void add_shims(nmr::ShimConfig &cfg, const std::vector<std::string> &items) {
  for (const auto &it : items) {
    const auto eq = it.find('=');
    if (eq == std::string::npos)
      throw UsageError("--shim expects name=value, got '" + it + "'");
    cfg[nmr::ShimConfig::channel_from_name(it.substr(0, eq))] =
        io::parse_double(it.substr(eq + 1), it.substr(0, eq));
  }
}

struct SynthFlags {
  nmr::SynthesisParams p;
  std::vector<std::string> shims;

  void attach(CLI::App *c) {
    c->add_option("--b0", p.B0, "field, T")->capture_default_str();
    c->add_option("--t2", p.t2, "decay time, s (<= 0: none)")->capture_default_str();
    c->add_option("--duration", p.duration, "record length, s")->capture_default_str();
    c->add_option("--sample-rate", p.sample_rate, "Hz")->capture_default_str();
    c->add_option("--mix", p.mix_frequency, "mixer frequency, Hz")->capture_default_str();
    c->add_option("--noise", p.noise_sigma, "noise per quadrature")->capture_default_str();
    c->add_option("--points", p.geometry.points, "bulb sample points")->capture_default_str();
    c->add_option("--diameter", p.geometry.diameter, "bulb diameter, m")->capture_default_str();
    c->add_option("--scheme", p.geometry.scheme, "halton or grid")->capture_default_str();
    c->add_option("--shim", shims, "channel=value, repeatable");
  }
  nmr::ShimConfig config() const {
    nmr::ShimConfig s;
    add_shims(s, shims);
    return s;
  }
};

struct CavityFlags {
  double rho0 = 0, length = 0, half_length = 0;
  int max_m = 3, max_n = 3, max_p = 3;

  void attach(CLI::App *c) {
    c->add_option("--rho0", rho0, "radius, m")->required();
    c->add_option("--length", length, "full length, m");
    c->add_option("--half-length", half_length, "half length, m");
    c->add_option("--max-m", max_m)->capture_default_str();
    c->add_option("--max-n", max_n)->capture_default_str();
    c->add_option("--max-p", max_p)->capture_default_str();
  }
  std::vector<cavity::CavityMode> modes() const {
    if ((length > 0) == (half_length > 0))
      throw UsageError("give exactly one of --length and --half-length");
    const auto g = length > 0
                       ? cavity::CavityGeometry{rho0, length}
                       : cavity::CavityGeometry::from_half_length(rho0, half_length);
    return cavity::mode_frequencies(g, max_m, max_n, max_p);
  }
};

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Electron and positron magnetic moment toolkit"};
  app.name("gtwo");
  Globals g;
  if (const char *env = std::getenv("GTWO_CONSTANTS"))
    g.constants = env;
  app.add_option("--constants", g.constants,
                 "constants CSV (default: $GTWO_CONSTANTS, else built in)");
  app.add_option("--format", g.format, "table, csv or kv")->capture_default_str();
  app.add_option("--seed", g.seed, "seed for randomized commands")->capture_default_str();
  app.add_option("-o,--output", g.output, "write to file instead of stdout");
  app.require_subcommand(1);
  app.fallthrough();

  std::function<void()> action;

  // predict
  std::string alpha = "cs2018";
  double alpha_sigma = 0;
  auto *predict = app.add_subcommand("predict", "SM moment from an alpha source");
  predict->add_option("--alpha", alpha, "cs2018, rb2011, moment2008 or alpha^-1")
      ->capture_default_str();
  predict->add_option("--alpha-sigma", alpha_sigma, "sigma of a numeric alpha^-1");
  predict->callback([&] {
    action = [&] {
      const auto reg = g.registry();
      const auto a = alpha_source(reg, alpha, alpha_sigma);
      const auto p = moment_from_alpha(a, QedCoefficients::from_registry(reg));
      const auto ai = inverse(a);
      io::Record r;
      r.add("alpha_inv", concise(ai.value(), ai.sigma()))
          .add("alpha_source", a.source())
          .add("anomaly", ld(p.anomaly_a.value()))
          .add("moment", ld(p.moment_over_muB.value()))
          .add("moment_sigma", num(p.moment_over_muB.sigma(), 3, false))
          .add("moment_concise",
               concise(p.moment_over_muB.value(), p.moment_over_muB.sigma()))
          .add("sigma_from_alpha", num(p.sigma_from_alpha, 3, false))
          .add("sigma_from_theory", num(p.sigma_from_theory, 3, false));
      emit(g, r);
    };
  });

  // invert-alpha
  std::string moment_src = "measured2008";
  double moment_sigma = 0;
  auto *invert = app.add_subcommand("invert-alpha", "alpha from a measured moment");
  invert->add_option("--moment-source", moment_src,
                     "measured2008, positron1987 or |mu|/mu_B")
      ->capture_default_str();
  invert->add_option("--moment-sigma", moment_sigma, "sigma of a numeric moment");
  invert->callback([&] {
    action = [&] {
      const auto reg = g.registry();
      const auto m = moment_source(reg, moment_src, moment_sigma);
      if (!m.unit().is_dimensionless())
        throw UnitError("moment must be dimensionless");
      const auto sol = solve_alpha(UncVal(m.value() - 1, m.sigma()),
                                   QedCoefficients::from_registry(reg));
      const auto ai = inverse(sol.alpha);
      const long double a2 = sol.alpha.value() * sol.alpha.value();
      io::Record r;
      r.add("moment", concise(m.value(), m.sigma()))
          .add("alpha_inv", ld(ai.value()))
          .add("alpha_inv_sigma", num(ai.sigma(), 3, false))
          .add("alpha_inv_concise", concise(ai.value(), ai.sigma()))
          .add("alpha_inv_sigma_from_measurement",
               num(sol.sigma_from_measurement / a2, 3, false))
          .add("alpha_inv_sigma_from_theory",
               num(sol.sigma_from_theory / a2, 3, false))
          .add("iterations", std::to_string(sol.iterations));
      emit(g, r);
    };
  });

  // alpha-recoil
  std::string atom = "cs", rydberg = "orsay";
  bool contributions = false;
  auto *recoil = app.add_subcommand("alpha-recoil", "alpha from atom recoil");
  recoil->add_option("--atom", atom, "rb or cs")
      ->check(CLI::IsMember({"rb", "cs"}))
      ->capture_default_str();
  recoil->add_option("--rydberg", rydberg, "mpq, orsay or both")
      ->check(CLI::IsMember({"mpq", "orsay", "both"}))
      ->capture_default_str();
  recoil->add_flag("--contributions", contributions,
                   "per-input uncertainty table instead");
  recoil->callback([&] {
    action = [&] {
      const auto reg = g.registry();
      const Atom a = atom == "rb" ? Atom::rb : Atom::cs;
      std::vector<RydbergSource> srcs;
      if (rydberg != "orsay")
        srcs.push_back(RydbergSource::mpq);
      if (rydberg != "mpq")
        srcs.push_back(RydbergSource::orsay);
      if (contributions) {
        io::Table t({"rydberg", "input", "input_ppt", "alpha_ppt"});
        for (auto s : srcs)
          for (const auto &c :
               recoil_contribution_table(RecoilInputs::from_registry(reg, a, s)))
            t.row({to_string(s), c.name, num(c.input_ppt, 3, false),
                   num(c.alpha_ppt, 3, false)});
        emit(g, t);
        return;
      }
      io::Table t({"atom", "rydberg", "alpha_inv", "alpha_inv_sigma", "ppt"});
      for (auto s : srcs) {
        const auto ai =
            inverse(alpha_from_recoil(RecoilInputs::from_registry(reg, a, s)));
        t.row({to_string(a), to_string(s), num(ai.value(), 10, true),
               num(ai.sigma(), 3, false),
               num(1e12L * ai.relative_sigma(), 1, true)});
      }
      emit(g, t);
    };
  });

  // budget
  std::string budget_alpha = "cs2018";
  double budget_sigma = 0;
  auto *budget_cmd = app.add_subcommand("budget", "per-term contributions");
  budget_cmd->add_option("--alpha", budget_alpha)->capture_default_str();
  budget_cmd->add_option("--alpha-sigma", budget_sigma);
  budget_cmd->callback([&] {
    action = [&] {
      const auto reg = g.registry();
      const auto a = alpha_source(reg, budget_alpha, budget_sigma);
      io::Table t({"term", "value", "sigma", "sigma_from_alpha"});
      for (const auto &e : budget(a, QedCoefficients::from_registry(reg)))
        t.row({to_string(e.label), num(e.value, 17, false),
               num(e.sigma, 3, false), num(e.sigma_from_alpha, 3, false)});
      emit(g, t);
    };
  });

  // compare
  std::string cmp_alpha = "cs2018", cmp_moment = "measured2008";
  bool cpt = false;
  double proj_e = -1, proj_p = -1;
  std::string combination = "limiting";
  auto *compare = app.add_subcommand("compare",
                                     "measured vs predicted moment, or CPT");
  compare->add_option("--alpha", cmp_alpha)->capture_default_str();
  compare->add_option("--moment-source", cmp_moment)->capture_default_str();
  compare->add_flag("--cpt", cpt, "positron 1987 against electron 2008");
  compare->add_option("--project-electron-ppt", proj_e,
                      "projected electron sigma for the improvement factor");
  compare->add_option("--project-positron-ppt", proj_p,
                      "projected positron sigma for the improvement factor");
  compare->add_option("--combination", combination, "limiting or independent")
      ->check(CLI::IsMember({"limiting", "independent"}))
      ->capture_default_str();
  compare->callback([&] {
    action = [&] {
      const auto reg = g.registry();
      io::Record r;
      if (cpt) {
        const auto c = planning::cpt_compare(reg.get("mu_e_plus_measured1987"),
                                             reg.get("mu_e_minus_measured2008"));
        r.add("difference_ppt", num(c.fractional_difference_ppt, 3, false))
            .add("sigma_ppt", num(c.fractional_sigma_ppt, 3, false))
            .add("n_sigma", num(c.n_sigma, 4, false));
        if (proj_e >= 0 || proj_p >= 0) {
          if (proj_e < 0 || proj_p < 0)
            throw UsageError("give both projected sigmas");
          r.add("improvement_factor",
                num(planning::cpt_improvement_factor(
                        static_cast<double>(c.fractional_sigma_ppt), proj_e,
                        proj_p,
                        combination == "limiting"
                            ? planning::CptCombination::limiting
                            : planning::CptCombination::independent),
                    4, false));
        }
      } else {
        const auto m = moment_source(reg, cmp_moment, 0);
        const auto p = moment_from_alpha(alpha_source(reg, cmp_alpha, 0),
                                         QedCoefficients::from_registry(reg))
                           .moment_over_muB;
        const auto c = sigma_compare(m, p);
        r.add("measured", concise(m.value(), m.sigma()))
            .add("predicted", concise(p.value(), p.sigma()))
            .add("difference", num(c.difference.value(), 4, false))
            .add("sigma", num(c.difference.sigma(), 3, false))
            .add("n_sigma", c.infinite ? "inf" : num(c.n_sigma, 4, false));
      }
      emit(g, r);
    };
  });

  // trap
  auto *trap_cmd = app.add_subcommand("trap", "Penning trap spectroscopy");
  trap_cmd->require_subcommand(1);

  double lv_field = trap::FieldModel{}.B0, lv_g = trap::kDefaultGOver2,
         lv_shift = 0;
  int lv_nmax = 2;
  auto *levels = trap_cmd->add_subcommand("levels", "energy levels over h");
  levels->add_option("--field", lv_field, "T")->capture_default_str();
  levels->add_option("--g-over-2", lv_g)->capture_default_str();
  levels->add_option("--n-max", lv_nmax)->capture_default_str();
  levels->add_option("--rel-shift", lv_shift)->capture_default_str();
  levels->callback([&] {
    action = [&] {
      if (!(lv_field > 0))
        throw DomainError("field must be positive");
      const auto f = trap::FrequencySet::from_field(lv_field, lv_g);
      io::Table t({"n", "spin", "energy_hz"});
      for (int n = 0; n <= lv_nmax; ++n)
        for (bool up : {false, true})
          t.row({std::to_string(n), up ? "up" : "down",
                 num(trap::energy_level({n, up}, f, lv_shift))});
      emit(g, t);
    };
  });

  std::string trap_config;
  auto *simulate = trap_cmd->add_subcommand("simulate", "simulated scan CSV");
  simulate->add_option("--config", trap_config, "trap config file");
  simulate->callback([&] {
    action = [&] {
      const auto setup = io::trap_setup(trap_config.empty()
                                            ? io::Config::parse("")
                                            : io::Config::load(trap_config));
      const auto res = trap::run_protocol(setup.protocol, setup.simulation, g.seed);
      std::ostringstream os;
      os << "# seed=" << g.seed << " kind=" << to_string(res.kind) << '\n';
      io::scan_table(res).write(os, io::Format::csv);
      emit(g, os.str());
    };
  });

  std::string scan_input = "-", species = "electron";
  auto *extract = trap_cmd->add_subcommand("extract", "moment from a scan CSV");
  extract->add_option("--input", scan_input, "scan CSV, - for stdin")
      ->capture_default_str();
  extract->add_option("--species", species)
      ->check(CLI::IsMember({"electron", "positron"}))
      ->capture_default_str();
  extract->callback([&] {
    action = [&] {
      auto in = open_input(scan_input);
      const auto scan = io::read_scan(*in);
      const auto a = trap::analyze_scan(
          scan, species == "electron" ? trap::Species::electron
                                      : trap::Species::positron);
      io::Record r;
      r.add("kind", to_string(scan.kind))
          .add("moment", ld(a.moment.value()))
          .add("moment_sigma", num(a.moment.sigma(), 3, false));
      if (scan.kind == trap::ProtocolKind::sequential) {
        r.add("nu_c_hz", num(static_cast<double>(a.nu_c.value())))
            .add("nu_c_sigma_hz", num(a.nu_c.sigma(), 3, false))
            .add("nu_a_hz", num(static_cast<double>(a.nu_a.value())))
            .add("nu_a_sigma_hz", num(a.nu_a.sigma(), 3, false))
            .add("cyclotron_fwhm_hz", num(a.cyclotron.fwhm))
            .add("anomaly_fwhm_hz", num(a.anomaly.fwhm));
      } else {
        r.add("ratio", num(a.ratio.center))
            .add("ratio_fwhm", num(a.ratio.fwhm));
      }
      emit(g, r);
    };
  });

  // nmr
  auto *nmr_cmd = app.add_subcommand("nmr", "3He NMR field probe");
  nmr_cmd->require_subcommand(1);

  SynthFlags synth;
  auto *nsim = nmr_cmd->add_subcommand("simulate", "synthetic FID CSV");
  synth.attach(nsim);
  nsim->callback([&] {
    action = [&] {
      auto p = synth.p;
      p.seed = g.seed;
      const auto fid = nmr::synthesize_fid(synth.config(), p);
      std::ostringstream os;
      os << "# seed=" << g.seed << '\n';
      io::write_fid(os, fid);
      emit(g, os.str());
    };
  });

  std::string fid_input = "-";
  int pad = 1;
  auto *nspec = nmr_cmd->add_subcommand("spectrum", "magnitude spectrum CSV");
  nspec->add_option("--input", fid_input, "FID CSV, - for stdin")->capture_default_str();
  nspec->add_option("--pad", pad, "zero-pad factor")->capture_default_str();
  nspec->callback([&] {
    action = [&] {
      auto in = open_input(fid_input);
      std::ostringstream os;
      io::write_spectrum(os, nmr::spectrum(io::read_fid(*in), pad));
      emit(g, os.str());
    };
  });

  std::string spec_input = "-";
  double lo = NAN, hi = NAN, half_widths = 10,
         spin_freq = nmr::kHe3SpinFrequency;
  auto *nfit = nmr_cmd->add_subcommand("fit", "Lorentzian fit of a spectrum");
  nfit->add_option("--input", spec_input, "spectrum CSV, - for stdin")
      ->capture_default_str();
  nfit->add_option("--lo", lo, "window start, baseband Hz");
  nfit->add_option("--hi", hi, "window end, baseband Hz");
  nfit->add_option("--half-widths", half_widths,
                   "default window, in FWHM either side of the peak")
      ->capture_default_str();
  nfit->add_option("--spin-frequency", spin_freq, "Hz, for ppb")->capture_default_str();
  nfit->callback([&] {
    action = [&] {
      auto in = open_input(spec_input);
      const auto s = io::read_spectrum(*in);
      if (std::isnan(lo) != std::isnan(hi))
        throw UsageError("give both --lo and --hi");
      const auto win = std::isnan(lo) ? nmr::default_window(s, half_widths)
                                      : nmr::FrequencyWindow{lo, hi};
      const auto f = nmr::fit_lorentzian(s, win);
      io::Record r;
      r.add("center_hz", num(f.absolute_center()))
          .add("center_sigma_hz", num(f.center_sigma, 3, false))
          .add("fwhm_hz", num(f.fwhm))
          .add("fwhm_sigma_hz", num(f.fwhm_sigma, 3, false))
          .add("inhomogeneity_ppb", num(nmr::inhomogeneity_ppb(f.fwhm, spin_freq), 4, false))
          .add("iterations", std::to_string(f.iterations));
      emit(g, r);
    };
  });

  std::string drift_input = "-";
  double drift_spin = nmr::kHe3SpinFrequency;
  auto *ndrift = nmr_cmd->add_subcommand("drift", "field drift rate");
  ndrift->add_option("--input", drift_input, "drift CSV t_hr,f0_hz,sigma_hz")
      ->capture_default_str();
  ndrift->add_option("--spin-frequency", drift_spin, "Hz")->capture_default_str();
  ndrift->callback([&] {
    action = [&] {
      auto in = open_input(drift_input);
      auto d = io::read_drift(*in);
      d.spin_frequency = drift_spin;
      const auto rate = nmr::drift_rate(d);
      io::Record r;
      r.add("points", std::to_string(d.points.size()))
          .add("rate_ppb_per_hr", num(static_cast<double>(rate.value())))
          .add("sigma_ppb_per_hr", num(rate.sigma(), 3, false));
      emit(g, r);
    };
  });

  SynthFlags shim_synth;
  nmr::ShimSearchParams shim_params;
  auto *nshim = nmr_cmd->add_subcommand("shim", "derivative-free shim search");
  shim_synth.attach(nshim);
  nshim->add_option("--budget", shim_params.budget, "evaluations")->capture_default_str();
  nshim->add_option("--initial-step", shim_params.initial_step)->capture_default_str();
  nshim->add_option("--min-step", shim_params.min_step)->capture_default_str();
  nshim->add_option("--pad", shim_params.zero_pad_factor)->capture_default_str();
  nshim->callback([&] {
    action = [&] {
      auto p = shim_params;
      p.synthesis = shim_synth.p;
      p.synthesis.seed = g.seed;
      const auto res = nmr::shim_search(shim_synth.config(), p);
      io::Record r;
      r.add("seed", std::to_string(g.seed))
          .add("initial_fwhm_hz", num(res.initial_fwhm))
          .add("best_fwhm_hz", num(res.best_fwhm))
          .add("evaluations", std::to_string(res.evaluations));
      for (std::size_t i = 0; i < nmr::kShimChannels; ++i)
        r.add(std::string(nmr::kShimNames[i]), num(res.best.coeff[i]));
      emit(g, r);
    };
  });

  // cavity
  auto *cav = app.add_subcommand("cavity", "cylindrical cavity modes");
  cav->require_subcommand(1);
  CavityFlags modes_flags;
  auto *cmodes = cav->add_subcommand("modes", "TE/TM mode table");
  modes_flags.attach(cmodes);
  cmodes->callback([&] {
    action = [&] {
      io::Table t({"kind", "m", "n", "p", "freq_hz", "coupling"});
      for (const auto &m : modes_flags.modes())
        t.row({to_string(m.kind), std::to_string(m.m), std::to_string(m.n),
               std::to_string(m.p), num(m.frequency), to_string(m.coupling)});
      emit(g, t);
    };
  });
  CavityFlags detune_flags;
  double nu_c = 0, tol = 0;
  auto *cdet = cav->add_subcommand("detune", "coupled modes near nu_c");
  detune_flags.attach(cdet);
  cdet->add_option("--nu-c", nu_c, "cyclotron frequency, Hz")->required();
  cdet->add_option("--tol", tol, "|detuning| counted as resonant, Hz")
      ->capture_default_str();
  cdet->callback([&] {
    action = [&] {
      const auto rep = cavity::detuning_report(nu_c, detune_flags.modes(), tol);
      io::Table t({"role", "kind", "m", "n", "p", "freq_hz", "detuning_hz",
                   "resonant"});
      auto row = [&](const char *role, const cavity::Detuning &d) {
        t.row({role, to_string(d.mode.kind), std::to_string(d.mode.m),
               std::to_string(d.mode.n), std::to_string(d.mode.p),
               num(d.mode.frequency), num(d.detuning), d.resonant ? "1" : "0"});
      };
      for (const auto &d : rep.coupled)
        row("cyclotron", d);
      if (rep.nearest_cooling)
        row("cooling", *rep.nearest_cooling);
      emit(g, t);
    };
  });

  // plan
  auto *plan = app.add_subcommand("plan", "experiment planning");
  plan->require_subcommand(1);
  double activity = NAN, duration = 3600, efficiency = 1;
  auto *pos = plan->add_subcommand("positrons", "positrons loaded");
  pos->add_option("--activity-uci", activity,
                  "source activity (default: positron_source_activity)");
  pos->add_option("--duration-s", duration)->capture_default_str();
  pos->add_option("--efficiency", efficiency)->capture_default_str();
  pos->callback([&] {
    action = [&] {
      const auto reg = g.registry();
      const double act =
          std::isnan(activity)
              ? static_cast<double>(reg.get("positron_source_activity").value())
              : activity;
      const auto c = planning::positron_accumulation(
          act, duration, efficiency,
          static_cast<double>(reg.get("positron_rate_low").value()),
          static_cast<double>(reg.get("positron_rate_high").value()));
      io::Record r;
      r.add("activity_uci", num(act))
          .add("duration_s", num(duration))
          .add("positrons_low", num(c.low))
          .add("positrons_high", num(c.high));
      emit(g, r);
    };
  });
  double diameter = 0.8e-3, hot = 300, cold = 0;
  auto *ap = plan->add_subcommand("aperture", "blackbody load through a hole");
  ap->add_option("--diameter-m", diameter)->capture_default_str();
  ap->add_option("--hot-k", hot)->capture_default_str();
  ap->add_option("--cold-k", cold)->capture_default_str();
  ap->callback([&] {
    action = [&] {
      const double w = planning::aperture_heat_load(diameter, hot, cold);
      io::Record r;
      r.add("power_w", num(w)).add("power_uw", num(w * 1e6, 4, false));
      emit(g, r);
    };
  });

  // limits
  double delta_a = NAN, contact_tev = NAN;
  auto *lim = app.add_subcommand("limits", "substructure and contact limits");
  lim->add_option("--delta-a", delta_a, "moment deviation")->required();
  lim->add_option("--contact-tev", contact_tev,
                  "contact energy (default: lep_contact_energy)");
  lim->callback([&] {
    action = [&] {
      const auto reg = g.registry();
      const auto rest = reg.get("electron_rest_energy");
      io::Table t({"model", "energy_gev", "radius_m"});
      for (auto m : {planning::SubstructureModel::linear,
                     planning::SubstructureModel::chiral}) {
        const auto l = planning::substructure_limit(delta_a, m, rest);
        t.row({to_string(m), num(l.mass_energy_gev, 4, false),
               num(l.radius_m, 4, false)});
      }
      const UncVal e = std::isnan(contact_tev)
                           ? reg.get("lep_contact_energy")
                           : UncVal(contact_tev, 0, units::tev);
      t.row({"contact", num(e.convert_to(units::gev).value(), 4, false),
             num(planning::contact_radius(e), 4, false)});
      emit(g, t);
    };
  });

  if (argc < 2) {
    std::cerr << app.help();
    return static_cast<int>(ErrorClass::usage);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    std::cerr << "gtwo: " << e.what() << "\nRun with --help for usage.\n";
    return static_cast<int>(ErrorClass::usage);
  }

  try {
    g.fmt();
    if (!action)
      throw UsageError("no command given");
    action();
  } catch (const Error &e) {
    std::cerr << "gtwo: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception &e) {
    std::cerr << "gtwo: internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
