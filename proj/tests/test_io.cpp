#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "nbpower/io.hpp"
#include "nbpower/report.hpp"

using namespace nbpower;
using namespace nbpower::io;

TEST(Parse, Durations) {
  EXPECT_EQ(parse_duration("100ms"), ms(100));
  EXPECT_EQ(parse_duration("2.56 s"), ms(2560));
  EXPECT_EQ(parse_duration("65.536s"), ms(65536));
  EXPECT_EQ(parse_duration("3min"), sec(180));
  EXPECT_EQ(parse_duration("24h"), hours(24));
  EXPECT_EQ(parse_duration("7d"), hours(168));
  EXPECT_EQ(parse_duration("500us"), Micros{500});
  EXPECT_THROW(parse_duration("100"), DomainError);
  EXPECT_THROW(parse_duration("1 fortnight"), DomainError);
  EXPECT_THROW(parse_duration("abc s"), DomainError);
}

TEST(Parse, CentiUnits) {
  EXPECT_EQ(parse_cbm("-1000"), Cbm{-1000});
  EXPECT_EQ(parse_cbm("-1000cBm"), Cbm{-1000});
  EXPECT_EQ(parse_cbm("-100 dBm"), Cbm{-1000});
  EXPECT_EQ(parse_cbm("-125.2dBm"), Cbm{-1252});
  EXPECT_EQ(parse_cb("3dB"), Cb{30});
  EXPECT_THROW(parse_cbm("-100 mW"), DomainError);
  EXPECT_THROW(parse_cbm("-100.5"), DomainError);
  EXPECT_THROW(parse_cbm("loud"), DomainError);
}

TEST(KvFile, CommentsKeysWithSpacesAndErrors) {
  std::istringstream in("# c\nrai = 400  # inline\nInactivity timer = 10s\n\n");
  auto f = KvFile::parse(in);
  ASSERT_NE(f.get("rai"), nullptr);
  EXPECT_EQ(*f.get("rai"), "400");
  EXPECT_EQ(*f.get("Inactivity timer"), "10s");
  std::istringstream dup("a = 1\na = 2\n");
  EXPECT_THROW(KvFile::parse(dup), DomainError);
  std::istringstream bad("just text\n");
  EXPECT_THROW(KvFile::parse(bad), DomainError);
}

TEST(KvFile, ScenarioWithTimersAndUnknownKey) {
  std::istringstream in("rai = 000\nhorizon = 2h\ntransmission_interval = 1h\nT3412 = 12h\nInactivity timer = 5s\n");
  auto f = KvFile::parse(in, "s.conf");
  Scenario sc;
  TimerConfig t;
  apply_scenario(f, sc);
  apply_timers(f, t);
  EXPECT_NO_THROW(f.reject_unused());
  EXPECT_EQ(sc.rai, Rai::None000);
  EXPECT_EQ(sc.horizon, hours(2));
  EXPECT_EQ(t.t3412_tau, hours(12));
  EXPECT_EQ(t.inactivity_timer, sec(5));

  std::istringstream in2("rai = 200\ncolour = blue\n");
  auto g = KvFile::parse(in2, "s.conf");
  apply_scenario(g, sc);
  try {
    g.reject_unused();
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("s.conf:2"), std::string::npos);
  }
}

TEST(KvFile, ValueErrorsCarryLine) {
  std::istringstream in("rai = 200\nhorizon = soon\n");
  auto f = KvFile::parse(in, "x.conf");
  Scenario sc;
  try {
    apply_scenario(f, sc);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("x.conf:2"), std::string::npos);
  }
}

TEST(TraceCsv, RoundTripIsExact) {
  std::mt19937_64 rng(31);
  for (int k = 0; k < 50; ++k) {
    std::vector<double> x(1 + rng() % 3000);
    std::lognormal_distribution<double> d(-8.0, 4.0);
    for (auto& v : x) v = rng() % 10 == 0 ? 0.0 : d(rng);
    const double rate = std::array{1000.0, 4000.0, 10000.0}[rng() % 3];
    const CurrentTrace t(rate, 3.3, x);
    std::stringstream ss;
    write_trace_csv(ss, t);
    const auto back = read_trace_csv(ss);
    ASSERT_EQ(back.samples(), x);
    ASSERT_EQ(back.supply_voltage_v(), 3.3);
    if (x.size() >= 2) {
      ASSERT_EQ(back.sample_rate_hz(), rate);
    }
  }
}

TEST(TraceCsv, FormatIsFixed) {
  std::stringstream ss;
  write_trace_csv(ss, CurrentTrace(4000, 3.6, {1e-3, 2.5e-6}));
  EXPECT_EQ(ss.str(),
            "timestamp_s,current_a,voltage_v\n"
            "0.000000,1.0000000000000000e-03,3.6\n"
            "0.000250,2.5000000000000002e-06,3.6\n");
}

TEST(TraceCsv, Errors) {
  std::istringstream empty("");
  EXPECT_THROW(read_trace_csv(empty), DomainError);
  std::istringstream header_only("timestamp_s,current_a\n");
  EXPECT_THROW(read_trace_csv(header_only), DomainError);
  std::istringstream bad_header("t,i\n0,1\n");
  EXPECT_THROW(read_trace_csv(bad_header), DomainError);

  std::istringstream bad_row("timestamp_s,current_a\n0.0,1e-3\n0.00025,x\n");
  try {
    read_trace_csv(bad_row, {}, 3.6, "f.csv");
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("f.csv:3"), std::string::npos) << e.what();
  }
  std::istringstream jitter("timestamp_s,current_a\n0.0,1\n0.001,1\n0.002,1\n0.0031,1\n");
  try {
    read_trace_csv(jitter, {}, 3.6, "j.csv");
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("j.csv:5"), std::string::npos) << e.what();
  }
  std::istringstream negative("timestamp_s,current_a\n0.0,-1\n");
  EXPECT_THROW(read_trace_csv(negative), DomainError);
  std::istringstream volts("timestamp_s,current_a,voltage_v\n0,1,3.6\n0.001,1,3.3\n");
  EXPECT_THROW(read_trace_csv(volts), DomainError);
}

TEST(TraceCsv, SmallJitterAccepted) {
  std::istringstream in("timestamp_s,current_a\n0.0,1\n0.001,2\n0.002005,3\n0.003,4\n");
  const auto t = read_trace_csv(in, {}, 3.0);
  EXPECT_EQ(t.size(), 4u);
  EXPECT_EQ(t.sample_rate_hz(), 1000.0);
  EXPECT_EQ(t.supply_voltage_v(), 3.0);
}

TEST(TraceCsv, ColumnMapping) {
  const auto m = parse_column_map("time=Time (s), current=Main current (A)");
  EXPECT_EQ(m.time, "Time (s)");
  EXPECT_EQ(m.current, "Main current (A)");
  std::istringstream in("Main current (A),Time (s)\n0.5,10.0\n0.25,10.5\n");
  const auto t = read_trace_csv(in, m, 3.6);
  EXPECT_EQ(t.samples(), (std::vector<double>{0.5, 0.25}));
  EXPECT_EQ(t.sample_rate_hz(), 2.0);
  EXPECT_EQ(t.t0(), 10.0);
  EXPECT_THROW(parse_column_map("speed=x"), DomainError);
  EXPECT_THROW(parse_column_map("time"), DomainError);
}

TEST(SegmentsCsv, RoundTrip) {
  const std::vector<Segment> segs{{SegmentKind::Sync, 0, 10, SegmentSource::Detected},
                                  {SegmentKind::Artifact, 10, 12, SegmentSource::Detected}};
  std::stringstream ss;
  write_segments_csv(ss, segs, {1.5e-3, 0.015});
  EXPECT_EQ(ss.str(), "kind,start_idx,end_idx,energy_j\nSync,0,10,1.500000000e-03\nArtifact,10,12,1.500000000e-02\n");
  EXPECT_EQ(read_segments_csv(ss, SegmentSource::Detected), segs);

  std::stringstream truth;
  write_truth_csv(truth, segs);
  EXPECT_EQ(read_segments_csv(truth, SegmentSource::Detected), segs);

  std::istringstream bad("kind,start_idx,end_idx\nSync,5,2\n");
  EXPECT_THROW(read_segments_csv(bad), DomainError);
}

TEST(Profiles, BuiltinsAndOverrides) {
  for (auto n : kBuiltinProfileNames) EXPECT_NO_THROW(resolve_profile(std::string(n)));
  EXPECT_THROW(resolve_profile("no_such_profile.conf"), DomainError);
}

TEST(Report, Table8Layout) {
  std::stringstream ss;
  report::write_table8_csv(ss, table8());
  std::string line;
  std::getline(ss, line);
  EXPECT_EQ(line, "module,operator,default_1h,default_4h,default_24h,rai400_1h,rai400_4h,rai400_24h");
  std::getline(ss, line);
  EXPECT_EQ(line.substr(0, 13), "BC95,Telenor,");
  int rows = 1;
  while (std::getline(ss, line)) ++rows;
  EXPECT_EQ(rows, 4);
}
