#pragma once

#include <array>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>

#include "gtwo/errors.hpp"

namespace gtwo {

// Closed set of unit symbols. Tags are opaque: amu is never reduced to kg and
// Hz is never reduced to 1/s. Tags in the same family convert by a fixed scale.
enum class UnitTag : std::uint8_t {
  meter, femtometer,
  second, hour,
  kilogram, amu,
  hertz, megahertz, gigahertz,
  tesla,
  watt,
  kelvin,
  joule,
  electronvolt, mev, gev, tev,
  coulomb,
  microcurie, millicurie,
  count_
};

inline constexpr std::size_t kUnitTagCount =
    static_cast<std::size_t>(UnitTag::count_);

struct UnitTagInfo {
  std::string_view symbol;
  int family;
  double scale; // value in family base units per one of this tag
};

inline constexpr std::array<UnitTagInfo, kUnitTagCount> kUnitTags{{
    {"m", 0, 1.0},
    {"fm", 0, 1e-15},
    {"s", 1, 1.0},
    {"hr", 1, 3600.0},
    {"kg", 2, 1.0},
    {"amu", 3, 1.0},
    {"Hz", 4, 1.0},
    {"MHz", 4, 1e6},
    {"GHz", 4, 1e9},
    {"T", 5, 1.0},
    {"W", 6, 1.0},
    {"K", 7, 1.0},
    {"J", 8, 1.0},
    {"eV", 9, 1.0},
    {"MeV", 9, 1e6},
    {"GeV", 9, 1e9},
    {"TeV", 9, 1e12},
    {"C", 10, 1.0},
    {"uCi", 11, 1.0},
    {"mCi", 11, 1e3},
}};

/// Product of unit tags with integer exponents. The empty product is
/// dimensionless.
class Unit {
public:
  constexpr Unit() = default;
  constexpr explicit Unit(UnitTag tag, int power = 1) {
    exps_[static_cast<std::size_t>(tag)] = static_cast<std::int8_t>(power);
  }

  static constexpr Unit dimensionless() { return Unit{}; }

  constexpr bool is_dimensionless() const {
    for (auto e : exps_)
      if (e != 0)
        return false;
    return true;
  }
  constexpr int exponent(UnitTag tag) const {
    return exps_[static_cast<std::size_t>(tag)];
  }

  friend constexpr Unit operator*(const Unit &a, const Unit &b) {
    Unit r;
    for (std::size_t i = 0; i < kUnitTagCount; ++i)
      r.exps_[i] = static_cast<std::int8_t>(a.exps_[i] + b.exps_[i]);
    return r;
  }
  friend constexpr Unit operator/(const Unit &a, const Unit &b) {
    Unit r;
    for (std::size_t i = 0; i < kUnitTagCount; ++i)
      r.exps_[i] = static_cast<std::int8_t>(a.exps_[i] - b.exps_[i]);
    return r;
  }
  constexpr Unit pow(int n) const {
    Unit r;
    for (std::size_t i = 0; i < kUnitTagCount; ++i)
      r.exps_[i] = static_cast<std::int8_t>(exps_[i] * n);
    return r;
  }
  friend constexpr bool operator==(const Unit &, const Unit &) = default;

  /// Canonical text form, e.g. "1", "m^-1", "m^2/s", "MeV*fm".
  std::string str() const {
    std::string num, den;
    int n_neg = 0, n_pos = 0;
    for (auto e : exps_) {
      n_pos += e > 0;
      n_neg += e < 0;
    }
    if (n_pos == 0 && n_neg == 0)
      return "1";
    auto append = [](std::string &s, std::string_view sym, int p) {
      if (!s.empty())
        s += '*';
      s += sym;
      if (p != 1) {
        s += '^';
        s += std::to_string(p);
      }
    };
    for (std::size_t i = 0; i < kUnitTagCount; ++i) {
      int e = exps_[i];
      if (e > 0)
        append(num, kUnitTags[i].symbol, e);
      else if (e < 0)
        append(den, kUnitTags[i].symbol, n_pos > 0 ? -e : e);
    }
    if (n_pos == 0)
      return den;
    return den.empty() ? num : num + "/" + den;
  }

  /// Accepts the forms produced by str() plus "dimensionless" and "".
  static Unit parse(std::string_view text) {
    text = trim(text);
    if (text.empty() || text == "1" || text == "dimensionless")
      return Unit{};
    Unit result;
    auto slash = text.find('/');
    if (slash != std::string_view::npos &&
        text.find('/', slash + 1) != std::string_view::npos)
      throw ParseError("unit '" + std::string(text) + "' has more than one '/'");
    auto accumulate = [&](std::string_view part, int sign) {
      if (trim(part) == "1")
        return;
      std::size_t pos = 0;
      while (pos <= part.size()) {
        auto star = part.find('*', pos);
        auto tok = trim(part.substr(pos, star == std::string_view::npos
                                             ? std::string_view::npos
                                             : star - pos));
        result = result * parse_token(tok).pow(sign);
        if (star == std::string_view::npos)
          break;
        pos = star + 1;
      }
    };
    if (slash == std::string_view::npos) {
      accumulate(text, 1);
    } else {
      accumulate(text.substr(0, slash), 1);
      accumulate(text.substr(slash + 1), -1);
    }
    return result;
  }

  /// Scale factor s such that x[this] = s * x[to]. Empty when the units are
  /// not related by a pure change of scale within tag families.
  std::optional<double> scale_to(const Unit &to) const {
    std::array<int, kUnitTagCount> fam_from{}, fam_to{};
    double s = 1.0;
    for (std::size_t i = 0; i < kUnitTagCount; ++i) {
      const auto &info = kUnitTags[i];
      fam_from[static_cast<std::size_t>(info.family)] += exps_[i];
      fam_to[static_cast<std::size_t>(info.family)] += to.exps_[i];
      s *= ipow(info.scale, exps_[i] - to.exps_[i]);
    }
    if (fam_from != fam_to)
      return std::nullopt;
    return s;
  }

private:
  static std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
      s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t'))
      s.remove_suffix(1);
    return s;
  }
  static double ipow(double b, int e) {
    double r = 1.0;
    for (int i = 0; i < (e < 0 ? -e : e); ++i)
      r *= b;
    return e < 0 ? 1.0 / r : r;
  }
  static Unit parse_token(std::string_view tok) {
    int power = 1;
    auto caret = tok.find('^');
    std::string_view sym = tok.substr(0, caret);
    if (caret != std::string_view::npos) {
      std::string p(tok.substr(caret + 1));
      char *end = nullptr;
      long v = std::strtol(p.c_str(), &end, 10);
      if (p.empty() || *end != '\0' || v == 0)
        throw ParseError("bad unit exponent in '" + std::string(tok) + "'");
      power = static_cast<int>(v);
    }
    for (std::size_t i = 0; i < kUnitTagCount; ++i)
      if (kUnitTags[i].symbol == sym)
        return Unit(static_cast<UnitTag>(i), power);
    throw ParseError("unknown unit symbol '" + std::string(sym) + "'");
  }

  std::array<std::int8_t, kUnitTagCount> exps_{};
};

namespace units {
inline constexpr Unit one{};
inline constexpr Unit meter{UnitTag::meter};
inline constexpr Unit per_meter{UnitTag::meter, -1};
inline constexpr Unit second{UnitTag::second};
inline constexpr Unit hour{UnitTag::hour};
inline constexpr Unit hertz{UnitTag::hertz};
inline constexpr Unit tesla{UnitTag::tesla};
inline constexpr Unit amu{UnitTag::amu};
inline constexpr Unit watt{UnitTag::watt};
inline constexpr Unit kelvin{UnitTag::kelvin};
inline constexpr Unit mev{UnitTag::mev};
inline constexpr Unit gev{UnitTag::gev};
inline constexpr Unit tev{UnitTag::tev};
inline constexpr Unit microcurie{UnitTag::microcurie};
inline constexpr Unit m2_per_s = Unit{UnitTag::meter, 2} / Unit{UnitTag::second};
inline constexpr Unit m_per_s = Unit{UnitTag::meter} / Unit{UnitTag::second};
inline constexpr Unit joule_second = Unit{UnitTag::joule} * Unit{UnitTag::second};
inline constexpr Unit mev_fm = Unit{UnitTag::mev} * Unit{UnitTag::femtometer};
} // namespace units

} // namespace gtwo
