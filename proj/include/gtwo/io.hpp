#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gtwo/errors.hpp"
#include "gtwo/nmr.hpp"
#include "gtwo/trap.hpp"

namespace gtwo::io {

/// Shortest round-trip text for a double, independent of the C locale.
inline std::string num(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

/// Fixed or scientific with `digits` significant/decimal places.
inline std::string num(long double x, int digits, bool fixed) {
  char buf[128];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x,
                               fixed ? std::chars_format::fixed
                                     : std::chars_format::scientific,
                               digits);
  return std::string(buf, p);
}

inline double parse_double(std::string_view tok, std::string_view what,
                           int line = 0) {
  while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t'))
    tok.remove_prefix(1);
  while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t' ||
                          tok.back() == '\r'))
    tok.remove_suffix(1);
  if (!tok.empty() && tok.front() == '+')
    tok.remove_prefix(1);
  double v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size() || tok.empty())
    throw ParseError("bad number for " + std::string(what) + ": '" +
                         std::string(tok) + "'",
                     line);
  return v;
}

enum class Format { table, csv, kv };

inline Format parse_format(std::string_view s) {
  if (s == "table") return Format::table;
  if (s == "csv") return Format::csv;
  if (s == "kv") return Format::kv;
  throw UsageError("unknown format '" + std::string(s) + "'");
}

/// Rows of named columns rendered as an aligned table, CSV, or one
/// `key=value` line per cell (rows separated by a blank line).
class Table {
public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  Table &row(std::vector<std::string> cells) {
    if (cells.size() != header_.size())
      throw std::logic_error("table row width mismatch");
    rows_.push_back(std::move(cells));
    return *this;
  }

  void write(std::ostream &os, Format f) const {
    switch (f) {
    case Format::csv:
      write_line(os, header_, ",");
      for (const auto &r : rows_)
        write_line(os, r, ",");
      break;
    case Format::kv:
      for (std::size_t i = 0; i < rows_.size(); ++i) {
        if (i)
          os << '\n';
        for (std::size_t c = 0; c < header_.size(); ++c)
          os << header_[c] << '=' << rows_[i][c] << '\n';
      }
      break;
    case Format::table: {
      std::vector<std::size_t> w(header_.size());
      for (std::size_t c = 0; c < header_.size(); ++c) {
        w[c] = header_[c].size();
        for (const auto &r : rows_)
          w[c] = std::max(w[c], r[c].size());
      }
      auto line = [&](const std::vector<std::string> &cells) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
          os << cells[c];
          if (c + 1 < cells.size())
            os << std::string(w[c] - cells[c].size() + 2, ' ');
        }
        os << '\n';
      };
      line(header_);
      for (const auto &r : rows_)
        line(r);
      break;
    }
    }
  }

private:
  static void write_line(std::ostream &os, const std::vector<std::string> &c,
                         const char *sep) {
    for (std::size_t i = 0; i < c.size(); ++i)
      os << (i ? sep : "") << c[i];
    os << '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// A two-column (key, value) record; the common case for summaries.
class Record {
public:
  Record &add(std::string key, std::string value) {
    items_.emplace_back(std::move(key), std::move(value));
    return *this;
  }
  void write(std::ostream &os, Format f) const {
    if (f == Format::csv) {
      for (std::size_t i = 0; i < items_.size(); ++i)
        os << (i ? "," : "") << items_[i].first;
      os << '\n';
      for (std::size_t i = 0; i < items_.size(); ++i)
        os << (i ? "," : "") << items_[i].second;
      os << '\n';
      return;
    }
    std::size_t w = 0;
    for (const auto &[k, v] : items_)
      w = std::max(w, k.size());
    for (const auto &[k, v] : items_) {
      if (f == Format::kv)
        os << k << '=' << v << '\n';
      else
        os << k << std::string(w - k.size() + 2, ' ') << v << '\n';
    }
  }

private:
  std::vector<std::pair<std::string, std::string>> items_;
};

// ---------------------------------------------------------------- config

/// `key = value` lines grouped under `[section]` headers, `#` comments.
/// Keys are stored as "section.key".
class Config {
public:
  static Config parse(std::string_view text) {
    Config c;
    std::string section;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      auto end = text.find('\n', pos);
      if (end == std::string_view::npos)
        end = text.size();
      std::string_view line = text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (auto h = line.find('#'); h != std::string_view::npos)
        line = line.substr(0, h);
      line = trim(line);
      if (line.empty()) {
        if (end == text.size())
          break;
        continue;
      }
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ParseError("unterminated section header", line_no);
        section = std::string(trim(line.substr(1, line.size() - 2)));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos)
        throw ParseError("expected key = value", line_no);
      std::string key(trim(line.substr(0, eq)));
      if (key.empty())
        throw ParseError("empty key", line_no);
      if (!section.empty())
        key = section + "." + key;
      if (c.values_.count(key))
        throw ParseError("duplicate key '" + key + "'", line_no);
      c.values_[key] = {std::string(trim(line.substr(eq + 1))), line_no};
      if (end == text.size())
        break;
    }
    return c;
  }

  static Config load(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
      throw UsageError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  bool has(const std::string &key) const { return values_.count(key) > 0; }

  std::string str(const std::string &key, std::string fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second.text;
  }

  double real(const std::string &key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end())
      return fallback;
    return parse_double(it->second.text, key, it->second.line);
  }

  /// Grid as `start:stop:count` or a comma list.
  std::vector<double> grid(const std::string &key) const {
    auto it = values_.find(key);
    if (it == values_.end())
      return {};
    const std::string &t = it->second.text;
    const int line = it->second.line;
    if (t.find(':') != std::string::npos) {
      auto a = t.find(':'), b = t.find(':', a + 1);
      if (b == std::string::npos)
        throw ParseError(key + ": grid must be start:stop:count", line);
      const double start = parse_double(std::string_view(t).substr(0, a), key, line);
      const double stop = parse_double(std::string_view(t).substr(a + 1, b - a - 1), key, line);
      const double n = parse_double(std::string_view(t).substr(b + 1), key, line);
      if (!(n >= 1) || n != std::floor(n))
        throw ParseError(key + ": grid count must be a positive integer", line);
      return trap::linspace(start, stop, static_cast<std::size_t>(n));
    }
    std::vector<double> out;
    std::size_t p = 0;
    while (p <= t.size()) {
      auto q = t.find(',', p);
      if (q == std::string::npos)
        q = t.size();
      out.push_back(parse_double(std::string_view(t).substr(p, q - p), key, line));
      p = q + 1;
    }
    return out;
  }

  std::vector<std::string> keys() const {
    std::vector<std::string> k;
    for (const auto &[name, v] : values_)
      k.push_back(name);
    return k;
  }

private:
  static std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
      s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
      s.remove_suffix(1);
    return s;
  }

  struct Entry {
    std::string text;
    int line = 0;
  };
  std::map<std::string, Entry> values_;
};

struct TrapSetup {
  trap::Protocol protocol;
  trap::Simulation simulation;
};

/// Field, lineshape and protocol from a config. Missing grids are centred
/// on the nominal lines (`grid.points`, `grid.span_widths`).
inline TrapSetup trap_setup(const Config &c) {
  static const char *known[] = {
      "field.B0", "field.linear_drift", "field.noise_sigma",
      "field.noise_correlation_time", "field.noise_step", "field.bottle_B2",
      "field.axial_temperature", "field.axial_frequency",
      "field.shielding_factor", "field.step_time", "field.step_amplitude",
      "lineshape.cyclotron_hz", "lineshape.anomaly_hz", "particle.g_over_2",
      "protocol.kind", "protocol.cyclotron_grid", "protocol.anomaly_grid",
      "protocol.ratio_grid", "protocol.attempts", "protocol.efficiency",
      "protocol.period", "protocol.gap", "protocol.start",
      "grid.points", "grid.span_widths", "grid.cyclotron_points"};
  for (const auto &k : c.keys())
    if (std::find_if(std::begin(known), std::end(known),
                     [&](const char *s) { return k == s; }) == std::end(known))
      throw ParseError("unknown config key '" + k + "'");

  TrapSetup s;
  auto &f = s.simulation.field;
  f.B0 = c.real("field.B0", f.B0);
  f.linear_drift = c.real("field.linear_drift", f.linear_drift);
  f.noise_sigma = c.real("field.noise_sigma", f.noise_sigma);
  f.noise_correlation_time =
      c.real("field.noise_correlation_time", f.noise_correlation_time);
  f.noise_step = c.real("field.noise_step", f.noise_step);
  f.bottle_B2 = c.real("field.bottle_B2", f.bottle_B2);
  f.axial_temperature = c.real("field.axial_temperature", f.axial_temperature);
  f.axial_frequency = c.real("field.axial_frequency", f.axial_frequency);
  f.shielding_factor = c.real("field.shielding_factor", f.shielding_factor);
  if (c.has("field.step_time") || c.has("field.step_amplitude"))
    f.external_step = trap::ExternalStep{c.real("field.step_time", 0),
                                         c.real("field.step_amplitude", 0)};
  f.validate();
  auto &w = s.simulation.widths;
  w.cyclotron = c.real("lineshape.cyclotron_hz", w.cyclotron);
  w.anomaly = c.real("lineshape.anomaly_hz", w.anomaly);
  s.simulation.g_over_2 = c.real("particle.g_over_2", s.simulation.g_over_2);

  const std::string kind = c.str("protocol.kind", "sequential");
  trap::ProtocolKind k;
  if (kind == "sequential")
    k = trap::ProtocolKind::sequential;
  else if (kind == "simultaneous")
    k = trap::ProtocolKind::simultaneous;
  else
    throw ParseError("protocol.kind must be sequential or simultaneous");

  const double pts = c.real("grid.points", 15);
  const double cpts = c.real("grid.cyclotron_points", 1);
  if (!(pts >= 1) || !(cpts >= 1))
    throw ParseError("grid point counts must be >= 1");
  auto &p = s.protocol;
  p = trap::Protocol::centred(k, f, w, static_cast<std::size_t>(pts),
                              c.real("grid.span_widths", 2.5),
                              s.simulation.g_over_2,
                              static_cast<std::size_t>(cpts));
  if (auto g = c.grid("protocol.cyclotron_grid"); !g.empty())
    p.cyclotron_grid = g;
  if (auto g = c.grid("protocol.anomaly_grid"); !g.empty())
    p.anomaly_grid = g;
  if (auto g = c.grid("protocol.ratio_grid"); !g.empty())
    p.ratio_grid = g;
  const double att = c.real("protocol.attempts", p.attempts_per_point);
  if (!(att >= 1) || att != std::floor(att))
    throw ParseError("protocol.attempts must be a positive integer");
  p.attempts_per_point = static_cast<int>(att);
  p.detection_efficiency = c.real("protocol.efficiency", p.detection_efficiency);
  p.attempt_period = c.real("protocol.period", p.attempt_period);
  p.scan_gap = c.real("protocol.gap", p.scan_gap);
  p.start_time = c.real("protocol.start", p.start_time);
  p.validate();
  return s;
}

// ------------------------------------------------------------------ CSV

namespace detail {
inline std::vector<std::vector<double>>
read_numeric_csv(std::istream &in, const std::vector<std::string> &header) {
  std::string line;
  int line_no = 0;
  bool seen_header = false;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty() || line[0] == '#')
      continue;
    std::vector<std::string_view> cells;
    std::string_view sv(line);
    std::size_t p = 0;
    while (true) {
      auto q = sv.find(',', p);
      cells.push_back(sv.substr(p, q == std::string_view::npos ? sv.npos : q - p));
      if (q == std::string_view::npos)
        break;
      p = q + 1;
    }
    if (!seen_header) {
      seen_header = true;
      bool match = cells.size() == header.size();
      for (std::size_t i = 0; match && i < cells.size(); ++i)
        match = cells[i] == header[i];
      if (!match) {
        std::string want;
        for (const auto &h : header)
          want += (want.empty() ? "" : ",") + h;
        throw ParseError("expected header '" + want + "'", line_no);
      }
      continue;
    }
    if (cells.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " columns",
                       line_no);
    std::vector<double> row;
    for (std::size_t i = 0; i < cells.size(); ++i)
      row.push_back(parse_double(cells[i], header[i], line_no));
    rows.push_back(std::move(row));
  }
  if (!seen_header)
    throw ParseError("empty CSV input");
  return rows;
}
} // namespace detail

/// FID as `t,re,im`; metadata rides in `#` comment lines.
inline void write_fid(std::ostream &os, const nmr::FidSignal &fid) {
  os << "# sample_rate=" << num(fid.sample_rate)
     << " mix_frequency=" << num(fid.mix_frequency) << '\n';
  os << "t,re,im\n";
  for (std::size_t i = 0; i < fid.samples.size(); ++i)
    os << num(static_cast<double>(i) / fid.sample_rate) << ','
       << num(fid.samples[i].real()) << ',' << num(fid.samples[i].imag())
       << '\n';
}

inline nmr::FidSignal read_fid(std::istream &in) {
  // Metadata comment is optional; the rate falls back to the time column.
  std::stringstream body;
  std::string line;
  nmr::FidSignal fid;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0) {
      std::istringstream ls(line.substr(2));
      std::string kv;
      while (ls >> kv) {
        auto eq = kv.find('=');
        if (eq == std::string::npos)
          continue;
        const auto k = kv.substr(0, eq);
        const double v = parse_double(kv.substr(eq + 1), k);
        if (k == "sample_rate")
          fid.sample_rate = v;
        else if (k == "mix_frequency")
          fid.mix_frequency = v;
      }
    }
    body << line << '\n';
  }
  const auto rows = detail::read_numeric_csv(body, {"t", "re", "im"});
  if (rows.size() < 2)
    throw ParseError("FID needs at least two samples");
  if (!(fid.sample_rate > 0))
    fid.sample_rate = 1.0 / (rows[1][0] - rows[0][0]);
  if (!(fid.sample_rate > 0) || !std::isfinite(fid.sample_rate))
    throw ParseError("FID time column must increase");
  for (const auto &r : rows)
    fid.samples.emplace_back(r[1], r[2]);
  fid.duration = static_cast<double>(rows.size()) / fid.sample_rate;
  return fid;
}

inline void write_spectrum(std::ostream &os, const nmr::Spectrum &s) {
  os << "# reference_frequency=" << num(s.reference_frequency) << '\n';
  os << "f,mag\n";
  for (std::size_t i = 0; i < s.frequency.size(); ++i)
    os << num(s.frequency[i]) << ',' << num(s.magnitude[i]) << '\n';
}

inline nmr::Spectrum read_spectrum(std::istream &in) {
  std::stringstream body;
  std::string line;
  nmr::Spectrum s;
  while (std::getline(in, line)) {
    const std::string key = "# reference_frequency=";
    if (line.rfind(key, 0) == 0)
      s.reference_frequency = parse_double(line.substr(key.size()), "reference_frequency");
    body << line << '\n';
  }
  const auto rows = detail::read_numeric_csv(body, {"f", "mag"});
  if (rows.size() < 2)
    throw ParseError("spectrum needs at least two points");
  for (const auto &r : rows) {
    s.frequency.push_back(r[0]);
    s.magnitude.push_back(r[1]);
  }
  s.resolution = s.frequency[1] - s.frequency[0];
  return s;
}

inline void write_drift(std::ostream &os, const nmr::DriftSeries &d) {
  os << "t_hr,f0_hz,sigma_hz\n";
  for (const auto &p : d.points)
    os << num(p.t_hr) << ',' << num(p.f0_hz) << ',' << num(p.sigma_hz) << '\n';
}

inline nmr::DriftSeries read_drift(std::istream &in) {
  nmr::DriftSeries d;
  for (const auto &r : detail::read_numeric_csv(in, {"t_hr", "f0_hz", "sigma_hz"}))
    d.points.push_back({r[0], r[1], r[2]});
  return d;
}

/// Per-point scan table: `scan,drive_hz,ratio,attempts,counts,expected`.
inline Table scan_table(const trap::ScanResult &r) {
  Table t({"scan", "drive_hz", "ratio", "attempts", "counts", "expected"});
  auto add = [&](const char *name, const std::vector<trap::ScanPoint> &pts) {
    for (const auto &p : pts)
      t.row({name, num(p.drive), num(p.ratio), std::to_string(p.attempts),
             std::to_string(p.counts), num(p.expected)});
  };
  add("cyclotron", r.cyclotron_scan);
  add("anomaly", r.anomaly_scan);
  add("joint", r.joint_scan);
  return t;
}

/// Inverse of scan_table's CSV form.
inline trap::ScanResult read_scan(std::istream &in) {
  std::string line;
  int line_no = 0;
  trap::ScanResult r;
  bool header = false, seq = false, sim = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty() || line[0] == '#')
      continue;
    if (!header) {
      if (line != "scan,drive_hz,ratio,attempts,counts,expected")
        throw ParseError("expected scan CSV header", line_no);
      header = true;
      continue;
    }
    std::vector<std::string> c;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');)
      c.push_back(cell);
    if (c.size() != 6)
      throw ParseError("expected 6 columns", line_no);
    trap::ScanPoint p;
    p.drive = parse_double(c[1], "drive_hz", line_no);
    p.ratio = parse_double(c[2], "ratio", line_no);
    const double att = parse_double(c[3], "attempts", line_no);
    const double cnt = parse_double(c[4], "counts", line_no);
    if (att < 0 || cnt < 0 || cnt > att || att != std::floor(att) ||
        cnt != std::floor(cnt))
      throw ParseError("counts must be integers with counts <= attempts", line_no);
    p.attempts = static_cast<int>(att);
    p.counts = static_cast<int>(cnt);
    p.expected = parse_double(c[5], "expected", line_no);
    if (c[0] == "cyclotron")
      r.cyclotron_scan.push_back(p), seq = true;
    else if (c[0] == "anomaly")
      r.anomaly_scan.push_back(p), seq = true;
    else if (c[0] == "joint")
      r.joint_scan.push_back(p), sim = true;
    else
      throw ParseError("unknown scan name '" + c[0] + "'", line_no);
  }
  if (!header)
    throw ParseError("empty scan input");
  if (seq == sim)
    throw ParseError("scan file must hold either sequential or joint points");
  r.kind = sim ? trap::ProtocolKind::simultaneous : trap::ProtocolKind::sequential;
  return r;
}

} // namespace gtwo::io
