#pragma once

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gtwo/errors.hpp"
#include "gtwo/uncval.hpp"

namespace gtwo {

/// Names whose entries are fixed by definition and must carry zero sigma.
inline constexpr std::string_view kExactNames[] = {
    "c", "h", "e", "hbar", "pi", "hbar_c", "stefan_boltzmann"};

inline bool is_exact_name(std::string_view name) {
  for (auto n : kExactNames)
    if (n == name)
      return true;
  return false;
}

class LookupError : public DomainError {
public:
  explicit LookupError(const std::string &name)
      : DomainError("unknown constant '" + name + "'") {}
};

/// Named map of UncVal loaded from a `name,value,sigma,unit,source` file.
/// Entries keep file order so serialization is stable.
class ConstantsRegistry {
public:
  ConstantsRegistry() = default;

  const UncVal &get(const std::string &name) const {
    auto it = index_.find(name);
    if (it == index_.end())
      throw LookupError(name);
    return entries_[it->second].second;
  }
  bool contains(const std::string &name) const { return index_.count(name) > 0; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<std::pair<std::string, UncVal>> &entries() const {
    return entries_;
  }

  /// Parse dataset text. Errors carry the 1-based line number.
  static ConstantsRegistry parse(std::string_view text) {
    ConstantsRegistry reg;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
      auto nl = text.find('\n', pos);
      std::string_view line =
          text.substr(pos, nl == std::string_view::npos ? text.size() - pos
                                                        : nl - pos);
      pos = nl == std::string_view::npos ? text.size() : nl + 1;
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string_view::npos)
        line = line.substr(0, hash);
      if (!line.empty() && line.back() == '\r')
        line.remove_suffix(1);
      if (trim(line).empty())
        continue;
      reg.parse_record(line, line_no);
    }
    return reg;
  }

  static ConstantsRegistry load(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
      throw ParseError("cannot open constants file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  /// Replace contents with a freshly parsed file; on error the registry is
  /// left unchanged.
  void reload(const std::string &path) { *this = load(path); }

  /// Dataset text that parses back to an identical registry.
  std::string serialize() const {
    std::string out = "# name,value,sigma,unit,source\n";
    for (const auto &[name, v] : entries_) {
      out += name;
      out += ',';
      out += format_real(v.value());
      out += ',';
      out += format_real(v.sigma());
      out += ',';
      out += v.unit().str();
      out += ',';
      out += v.source();
      out += '\n';
    }
    return out;
  }

  /// Shortest text that round-trips exactly through from_chars.
  static std::string format_real(Real x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
  }

  static Real parse_real(std::string_view tok, int line_no,
                         const char *what) {
    tok = trim(tok);
    Real v{};
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || res.ec != std::errc{} ||
        res.ptr != tok.data() + tok.size())
      throw ParseError(std::string("bad ") + what + " '" + std::string(tok) +
                           "'",
                       line_no);
    return v;
  }

private:
  static std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
      s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t'))
      s.remove_suffix(1);
    return s;
  }

  void parse_record(std::string_view line, int line_no) {
    std::vector<std::string_view> cols;
    std::size_t pos = 0;
    while (true) {
      auto comma = line.find(',', pos);
      cols.push_back(trim(line.substr(
          pos, comma == std::string_view::npos ? std::string_view::npos
                                               : comma - pos)));
      if (comma == std::string_view::npos)
        break;
      pos = comma + 1;
    }
    if (cols.size() != 5)
      throw ParseError("expected 5 columns, got " + std::to_string(cols.size()),
                       line_no);
    std::string name(cols[0]);
    if (name.empty())
      throw ParseError("empty name", line_no);
    if (index_.count(name))
      throw ParseError("duplicate name '" + name + "'", line_no);
    Real value = parse_real(cols[1], line_no, "value");
    Real sigma = parse_real(cols[2], line_no, "sigma");
    if (!(sigma >= 0))
      throw ParseError("negative sigma for '" + name + "'", line_no);
    if (is_exact_name(name) && sigma != 0)
      throw ParseError("exact constant '" + name + "' must have zero sigma",
                       line_no);
    Unit unit;
    try {
      unit = Unit::parse(cols[3]);
    } catch (const ParseError &e) {
      throw ParseError(e.what(), line_no);
    }
    index_.emplace(name, entries_.size());
    entries_.emplace_back(name, UncVal(value, sigma, unit, std::string(cols[4])));
  }

  std::vector<std::pair<std::string, UncVal>> entries_;
  std::map<std::string, std::size_t> index_;
};

/// Built-in dataset; data/constants.csv carries the same text.
inline constexpr std::string_view kDefaultDataset = R"(# name,value,sigma,unit,source
# Exact by definition of the SI.
c,299792458,0,m/s,SI exact
h,6.62607015e-34,0,J*s,SI exact
e,1.602176634e-19,0,C,SI exact
hbar,1.054571817646156391e-34,0,J*s,SI exact (h/2pi)
pi,3.14159265358979323846,0,1,math
hbar_c,197.3269804593025,0,MeV*fm,SI exact (derived)
stefan_boltzmann,5.670374419e-8,0,W/m^2*K^4,SI exact (derived)
# Rydberg constant, two determinations.
R_inf_MPQ,10973731.568076,0.000096,m^-1,MPQ
R_inf_Orsay,10973731.568530,0.000140,m^-1,Orsay
# Relative atomic masses.
A_e,0.000548579909070,0.000000000000016,amu,CODATA2014
A_Rb,86.9091805319,0.0000000065,amu,AME
A_Cs,132.9054519615,0.0000000086,amu,AME
# Atom-recoil h/M.
h_over_M_Rb,4.5913592729e-9,0.0000000057e-9,m^2/s,Rb 2011
h_over_M_Cs,3.0023694721e-9,0.0000000012e-9,m^2/s,Cs 2018
# Published fine-structure constant inverses.
alpha_inv_Rb2011,137.035998995,0.000000085,1,Rb 2011
alpha_inv_Cs2018,137.035999045,0.000000028,1,Cs 2018
alpha_inv_moment2008,137.035999150,0.000000033,1,electron moment 2008
# Dimensionless moment magnitudes |mu|/mu_B.
mu_e_minus_measured2008,1.00115965218073,0.00000000000028,1,electron 2008
mu_e_plus_measured1987,1.00115965218790,0.00000000000430,1,positron 1987
sm_moment_Cs2018,1.00115965218161,0.00000000000024,1,SM + alpha(Cs 2018) headline
sm_moment_Cs2018_list,1.00115965218162,0.00000000000024,1,SM + alpha(Cs 2018) prediction list
sm_moment_Rb2011,1.00115965218204,0.00000000000072,1,SM + alpha(Rb 2011)
# QED series coefficients and non-QED terms.
C2,0.5,0,1,exact
C4,-0.32847844400262,0.00000000000025,1,QED
C6,1.1812340168183,0.0000000000079,1,QED
C8,-1.9113213918,0.0000000012,1,QED
C10,6.73,0.16,1,QED numerical
a_hadronic,1.693e-12,0.011e-12,1,hadronic
a_weak,0.03053e-12,0.00023e-12,1,electroweak
# Electron and scale inputs.
electron_rest_energy,0.51099895000,0.00000000015,MeV,CODATA2018
lep_contact_energy,10.3,0,TeV,LEP
# 3He NMR probe.
nmr_spin_frequency,172.3e6,0,Hz,3He probe
nmr_field,5.3,0,T,3He probe
# Positron loading.
positron_rate_low,3,0,s^-1*uCi^-1,loading trap
positron_rate_high,6,0,s^-1*uCi^-1,loading trap
positron_source_activity,1.4,0,uCi,Na22 source
historical_source_activity,0.5,0,mCi,Na22 source (historical)
)";

inline const ConstantsRegistry &default_registry() {
  static const ConstantsRegistry reg = ConstantsRegistry::parse(kDefaultDataset);
  return reg;
}

/// Registry from `path`, else from $GTWO_CONSTANTS, else the built-in set.
inline ConstantsRegistry resolve_registry(const std::string &path = {}) {
  if (!path.empty())
    return ConstantsRegistry::load(path);
  if (const char *env = std::getenv("GTWO_CONSTANTS"); env && *env)
    return ConstantsRegistry::load(env);
  return default_registry();
}

} // namespace gtwo
