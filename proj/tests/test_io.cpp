#include <gtest/gtest.h>

#include <sstream>

#include "gtwo/io.hpp"

using namespace gtwo;
using namespace gtwo::io;

TEST(Num, ShortestRoundTrip) {
  for (double x : {0.1, 1.0 / 3, 172.3e6, -2.5e-300, 5.0}) {
    const auto s = num(x);
    EXPECT_EQ(parse_double(s, "x"), x) << s;
  }
  EXPECT_EQ(num(5.0), "5");
  EXPECT_EQ(num(1.00115965218161L, 14, true), "1.00115965218161");
  EXPECT_EQ(parse_double(" +2.5\r", "x"), 2.5);
  EXPECT_THROW(parse_double("2.5x", "x"), ParseError);
  EXPECT_THROW(parse_double("", "x"), ParseError);
}

TEST(Format, ParseAndRender) {
  EXPECT_EQ(parse_format("kv"), Format::kv);
  EXPECT_THROW(parse_format("json"), UsageError);
  Table t({"a", "bb"});
  t.row({"1", "2"}).row({"333", "4"});
  std::ostringstream csv, kv, tab;
  t.write(csv, Format::csv);
  t.write(kv, Format::kv);
  t.write(tab, Format::table);
  EXPECT_EQ(csv.str(), "a,bb\n1,2\n333,4\n");
  EXPECT_EQ(kv.str(), "a=1\nbb=2\n\na=333\nbb=4\n");
  EXPECT_EQ(tab.str(), "a    bb\n1    2\n333  4\n");
  Record r;
  r.add("x", "1").add("long", "2");
  std::ostringstream rc;
  r.write(rc, Format::csv);
  EXPECT_EQ(rc.str(), "x,long\n1,2\n");
}

TEST(Config, SectionsCommentsAndGrids) {
  const auto c = Config::parse("# header\n"
                               "[field]\n"
                               "B0 = 5.36  # tesla\n"
                               "[protocol]\n"
                               "cyclotron_grid = 1:3:3\n"
                               "anomaly_grid = 1, 2.5 ,4\n");
  EXPECT_EQ(c.real("field.B0", 0), 5.36);
  EXPECT_EQ(c.real("field.missing", 7), 7);
  EXPECT_EQ(c.grid("protocol.cyclotron_grid"), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(c.grid("protocol.anomaly_grid"), (std::vector<double>{1, 2.5, 4}));
  EXPECT_TRUE(c.grid("protocol.ratio_grid").empty());
}

TEST(Config, ErrorsCarryLineNumbers) {
  try {
    Config::parse("a = 1\n\nb\n");
    FAIL();
  } catch (const ParseError &e) {
    EXPECT_EQ(e.line(), 3);
  }
  EXPECT_THROW(Config::parse("a=1\na=2\n"), ParseError);
  EXPECT_THROW(Config::parse("[x\n"), ParseError);
  EXPECT_THROW(Config::parse("= 3\n"), ParseError);
  EXPECT_THROW(Config::parse("g = 1:2\n").grid("g"), ParseError);
  EXPECT_THROW(Config::parse("g = 1:2:0\n").grid("g"), ParseError);
  EXPECT_THROW(Config::parse("x = abc\n").real("x", 0), ParseError);
  EXPECT_THROW(Config::load("/nonexistent/file.cfg"), UsageError);
}

TEST(Config, TrapSetup) {
  const auto s = trap_setup(Config::parse("[field]\nlinear_drift = 1e-9\n"
                                          "[protocol]\nkind = simultaneous\nattempts = 4\n"
                                          "[grid]\npoints = 7\ncyclotron_points = 3\n"));
  EXPECT_EQ(s.simulation.field.linear_drift, 1e-9);
  EXPECT_EQ(s.protocol.kind, trap::ProtocolKind::simultaneous);
  EXPECT_EQ(s.protocol.ratio_grid.size(), 7u);
  EXPECT_EQ(s.protocol.cyclotron_grid.size(), 3u);
  EXPECT_EQ(s.protocol.attempts_per_point, 4);
  EXPECT_THROW(trap_setup(Config::parse("[field]\nbogus = 1\n")), ParseError);
  EXPECT_THROW(trap_setup(Config::parse("[protocol]\nkind = parallel\n")), ParseError);
  EXPECT_THROW(trap_setup(Config::parse("[protocol]\nattempts = 2.5\n")), ParseError);
  EXPECT_THROW(trap_setup(Config::parse("[field]\nB0 = -1\n")), DomainError);
}

TEST(Csv, FidRoundTrip) {
  nmr::FidSignal fid;
  fid.sample_rate = 4000;
  fid.mix_frequency = 172.3e6 - 840;
  fid.samples = {{1, 0}, {0.5, -0.25}, {1e-7, 3}};
  std::stringstream ss;
  write_fid(ss, fid);
  const auto back = read_fid(ss);
  EXPECT_EQ(back.samples, fid.samples);
  EXPECT_EQ(back.sample_rate, 4000);
  EXPECT_EQ(back.mix_frequency, fid.mix_frequency);
  std::stringstream bad("t,re\n0,1\n");
  EXPECT_THROW(read_fid(bad), ParseError);
}

TEST(Csv, SpectrumAndDriftRoundTrip) {
  nmr::Spectrum s;
  s.frequency = {-1, -0.5, 0, 0.5};
  s.magnitude = {0.1, 0.2, 1.5, 0.3};
  s.resolution = 0.5;
  s.reference_frequency = 172299160;
  std::stringstream ss;
  write_spectrum(ss, s);
  const auto b = read_spectrum(ss);
  EXPECT_EQ(b.frequency, s.frequency);
  EXPECT_EQ(b.magnitude, s.magnitude);
  EXPECT_EQ(b.resolution, 0.5);
  EXPECT_EQ(b.reference_frequency, s.reference_frequency);

  nmr::DriftSeries d;
  d.points = {{0, 172.3e6, 0.01}, {0.5, 172.3e6 + 0.03, 0.01}};
  std::stringstream ds;
  write_drift(ds, d);
  const auto e = read_drift(ds);
  ASSERT_EQ(e.points.size(), 2u);
  EXPECT_EQ(e.points[1].f0_hz, d.points[1].f0_hz);
  std::stringstream bad("t_hr,f0_hz,sigma_hz\n0,1\n");
  EXPECT_THROW(read_drift(bad), ParseError);
}

TEST(Csv, ScanRoundTrip) {
  trap::ScanResult r;
  r.cyclotron_scan = {{1.5e11, 0, 20, 3, 0.14}, {1.5e11 + 50, 0, 20, 9, 0.41}};
  r.anomaly_scan = {{1.74e8, 0, 20, 0, 0.01}};
  std::stringstream ss;
  scan_table(r).write(ss, Format::csv);
  const auto b = read_scan(ss);
  EXPECT_EQ(b.kind, trap::ProtocolKind::sequential);
  ASSERT_EQ(b.cyclotron_scan.size(), 2u);
  EXPECT_EQ(b.cyclotron_scan[1].drive, r.cyclotron_scan[1].drive);
  EXPECT_EQ(b.cyclotron_scan[1].counts, 9);
  EXPECT_EQ(b.anomaly_scan[0].expected, 0.01);
  std::stringstream over("scan,drive_hz,ratio,attempts,counts,expected\n"
                         "joint,1,1,2,3,0.5\n");
  EXPECT_THROW(read_scan(over), ParseError);
}
