#include <gtest/gtest.h>

#include <random>

#include "nbpower/segment.hpp"
#include "nbpower/tracesynth.hpp"
#include "oracles.hpp"

using namespace nbpower;

namespace {

using V = std::vector<double>;

const PowerProfile& bc95() {
  static const PowerProfile p = default_profile();
  return p;
}

PhaseSchedule template_schedule(Rai rai, Coverage cov) {
  Scenario sc;
  sc.rai = rai;
  sc.coverage = cov;
  sc.ecl = cov == Coverage::Good ? Ecl::Ecl0 : Ecl::Ecl2;
  sc.idle_mode = IdleMode::EdrxThenPsm;
  sc.transmission_interval = sec(300);
  sc.horizon = sec(600);
  TimerConfig t;
  t.t3412_tau = sec(240);
  return build_schedule(sc, t, bc95());
}

V random_series(std::mt19937_64& rng, std::size_t n) {
  V t(n);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& x : t) x = std::floor(u(rng) * 20.0);  // ties on purpose
  return t;
}

DetectorConfig with_threshold(double thr, std::size_t w) {
  DetectorConfig c;
  c.window_w = w;
  c.threshold_a = thr;
  return c;
}

}  // namespace

TEST(MovingMax, ForwardExamples) {
  EXPECT_EQ(moving_max_forward(V{1, 5, 2}, 1), (V{5, 5, 2}));
  EXPECT_EQ(moving_max_forward(V(7, 3.0), 3), V(7, 3.0));
  const V t{4, 1, 3, 0, 2};
  EXPECT_EQ(moving_max_forward(t, 10), (V{4, 3, 3, 2, 2}));
  EXPECT_THROW(moving_max_forward(V{}, 1), DomainError);
  EXPECT_THROW(moving_max_forward(V{1}, 0), DomainError);
}

TEST(MovingMax, BackwardExamples) {
  EXPECT_EQ(moving_max_backward(V{1, 5, 2}, 1), (V{1, 5, 5}));
  EXPECT_EQ(moving_max_backward(V(7, 3.0), 3), V(7, 3.0));
  EXPECT_THROW(moving_max_backward(V{}, 1), DomainError);
}

TEST(MovingMax, BackwardIsReversedForward) {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 500; ++k) {
    auto t = random_series(rng, 1 + rng() % 200);
    const std::size_t w = 1 + rng() % 50;
    auto r = t;
    std::reverse(r.begin(), r.end());
    auto f = moving_max_forward(r, w);
    std::reverse(f.begin(), f.end());
    ASSERT_EQ(f, moving_max_backward(t, w));
  }
}

TEST(MovingMax, MatchesBruteForce) {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 500; ++k) {
    const auto t = random_series(rng, 1 + rng() % 300);
    const std::size_t w = 1 + rng() % 80;
    ASSERT_EQ(moving_max_forward(t, w), oracle::mmf(t, w));
    ASSERT_EQ(moving_max_backward(t, w), oracle::mmb(t, w));
  }
}

TEST(Fsts, Examples) {
  EXPECT_EQ(fsts(V{5, 5, 2}, V{1, 5, 5}), (V{1, 5, 2}));
  const V same{3, 1, 4};
  EXPECT_EQ(fsts(same, same), same);
  EXPECT_THROW(fsts(V{1, 2}, V{1}), DomainError);
}

TEST(Fsts, Dominance) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 500; ++k) {
    const auto t = random_series(rng, 1 + rng() % 300);
    const std::size_t w = 1 + rng() % 80;
    const auto f = fsts(t, w);
    const double gmax = *std::max_element(t.begin(), t.end());
    for (std::size_t i = 0; i < t.size(); ++i) {
      ASSERT_GE(f[i], t[i]);
      ASSERT_LE(f[i], gmax);
    }
  }
}

TEST(Fsts, StreamingEqualsBatch) {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 500; ++k) {
    const auto t = random_series(rng, 1 + rng() % 400);
    const std::size_t w = 1 + rng() % 100;
    StreamingFsts s(w);
    V out;
    std::size_t expect_idx = 0;
    auto on = [&](std::size_t i, double x, double f) {
      ASSERT_EQ(i, expect_idx++);
      ASSERT_EQ(x, t[i]);
      out.push_back(f);
    };
    for (double x : t) s.push(x, on);
    s.finish(on);
    ASSERT_EQ(out, oracle::fsts(t, w));
  }
}

TEST(Percentile, Examples) {
  EXPECT_EQ(threshold_from_percentile(V(10, 2.5), 0.3), 2.5);
  V r(100);
  std::iota(r.begin(), r.end(), 1.0);
  std::shuffle(r.begin(), r.end(), std::mt19937_64(5));
  EXPECT_EQ(threshold_from_percentile(r, 0.95), 95.0);
  EXPECT_EQ(threshold_from_percentile(V{7.0}, 0.95), 7.0);
  EXPECT_THROW(threshold_from_percentile(V{}, 0.95), DomainError);
  EXPECT_THROW(threshold_from_percentile(V{1}, 1.0), DomainError);
}

TEST(Percentile, NearestRankOracle) {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 500; ++k) {
    auto t = random_series(rng, 1 + rng() % 500);
    const double p = std::uniform_real_distribution<double>(0.01, 0.99)(rng);
    auto s = t;
    std::sort(s.begin(), s.end());
    const auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(s.size()) - 1e-9));
    ASSERT_EQ(threshold_from_percentile(t, p), s[std::max<std::size_t>(rank, 1) - 1]);
  }
}

TEST(Detect, AllBelowThreshold) {
  CurrentTrace t(4000, 3.6, V(1000, 1e-6));
  EXPECT_TRUE(detect_phases(t, with_threshold(1e-3, 10)).empty());
}

TEST(Detect, SinglePulse) {
  V x(5000, 1e-6);
  for (std::size_t i = 2000; i < 2800; ++i) x[i] = 8e-3;
  const std::size_t w = 100;
  const auto segs = detect_phases(CurrentTrace(4000, 3.6, x), with_threshold(5e-3, w));
  // Brute-force scan for the pulse edges.
  std::size_t a = 0, b = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] >= 5e-3) {
      if (b == 0) a = i;
      b = i + 1;
    }
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_TRUE(within(segs[0].start_idx, a, w));
  EXPECT_TRUE(within(segs[0].end_idx, b, w));
  EXPECT_EQ(segs[0].source, SegmentSource::Detected);
}

TEST(Detect, ClosePulsesMerge) {
  V x(5000, 1e-6);
  for (std::size_t i = 1000; i < 1200; ++i) x[i] = 8e-3;
  for (std::size_t i = 1250; i < 1400; ++i) x[i] = 8e-3;
  EXPECT_EQ(detect_phases(CurrentTrace(4000, 3.6, x), with_threshold(5e-3, 100)).size(), 1u);
  EXPECT_EQ(detect_phases(CurrentTrace(4000, 3.6, x), with_threshold(5e-3, 20)).size(), 2u);
}

TEST(Detect, PercentileThresholdFromCalibrationWindow) {
  V x(4000, 1e-6);
  for (std::size_t i = 1000; i < 1400; ++i) x[i] = 8e-3;
  DetectorConfig c;
  c.window_w = 10;
  c.calibration_window = nbpower::Run{1000, 1400};
  EXPECT_EQ(detection_threshold(CurrentTrace(4000, 3.6, x), c), 8e-3);
  EXPECT_EQ(detect_phases(CurrentTrace(4000, 3.6, x), c).size(), 1u);
}

TEST(Detect, TraceShorterThanWindow) {
  EXPECT_THROW(detect_phases(CurrentTrace(4000, 3.6, V(5, 1.0)), with_threshold(0.5, 10)), DomainError);
}

TEST(Detect, ConfigValidation) {
  DetectorConfig c;
  c.threshold_percentile = 1.0;
  EXPECT_THROW(validate_detector_config(c), DomainError);
  c = {};
  c.spike_max_duration_ms = 60.0;
  EXPECT_THROW(validate_detector_config(c), DomainError);
  c = {};
  c.window_w = 0;
  EXPECT_THROW(validate_detector_config(c), DomainError);
}

TEST(Coarse, Rai000EventIsOneConnectedSpan) {
  Scenario sc;
  sc.rai = Rai::None000;
  sc.transmission_interval = sc.horizon = sec(120);
  const auto sched = build_schedule(sc, {}, bc95());
  const auto r = synthesize(sched, bc95(), {});
  const auto cfg = make_analyzer_config(bc95(), {}, Coverage::Good, 4000, 3.6);
  const auto spans = coarse_states(r.trace, cfg.detector);
  ASSERT_EQ(spans.size(), 2u);
  EXPECT_EQ(spans[0].state, UeState::Connected);
  EXPECT_EQ(spans[1].state, UeState::Idle);
  // Sync..Release is the first four truth segments.
  EXPECT_EQ(spans[0].start_idx, 0u);
  EXPECT_TRUE(within(spans[0].end_idx, r.truth[3].end_idx, cfg.detector.coarse_median_window / 2));
}

TEST(Coarse, PsmIsOneIdleSpan) {
  CurrentTrace t(4000, 3.6, V(40000, bc95().psm_current_a(3.6)));
  const auto cfg = make_analyzer_config(bc95(), {}, Coverage::Good, 4000, 3.6);
  const auto spans = coarse_states(t, cfg.detector);
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0], (StateSpan{UeState::Idle, 0, 40000}));
}

TEST(Coarse, UnitWindowIsRawThreshold) {
  std::mt19937_64 rng(7);
  const auto x = random_series(rng, 2000);
  DetectorConfig c;
  c.coarse_median_window = 1;
  c.coarse_threshold_a = 10.0;
  const auto spans = coarse_states(CurrentTrace(4000, 3.6, x), c);
  std::vector<nbpower::Run> high;
  for (const auto& s : spans)
    if (s.state == UeState::Connected) high.emplace_back(s.start_idx, s.end_idx);
  EXPECT_EQ(high, runs_at_or_above(x, 10.0));
}

// Lower median over the clipped centered window, straight from the
// definition.
TEST(Coarse, MatchesSortedMedian) {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 200; ++k) {
    const auto x = random_series(rng, 1 + rng() % 300);
    const std::size_t win = 1 + rng() % 40;
    const std::size_t h = win / 2;
    DetectorConfig c;
    c.coarse_median_window = std::min(win, x.size());
    c.coarse_threshold_a = 9.5;
    const std::size_t hh = c.coarse_median_window / 2;
    std::vector<bool> expect(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const std::size_t lo = i >= hh ? i - hh : 0, hi = std::min(x.size(), i + hh + 1);
      V w(x.begin() + static_cast<std::ptrdiff_t>(lo), x.begin() + static_cast<std::ptrdiff_t>(hi));
      std::sort(w.begin(), w.end());
      expect[i] = w[(w.size() - 1) / 2] >= 9.5;
    }
    (void)h;
    std::vector<bool> got(x.size());
    for (const auto& s : coarse_states(CurrentTrace(4000, 3.6, x), c))
      for (std::size_t i = s.start_idx; i < s.end_idx; ++i) got[i] = s.state == UeState::Connected;
    ASSERT_EQ(got, expect);
  }
}

TEST(Filter, NoShortSegmentsIsIdentity) {
  const std::vector<Segment> segs{{SegmentKind::EdrxListen, 0, 1000}, {SegmentKind::EdrxListen, 5000, 6000}};
  EXPECT_EQ(filter_artifacts(segs, {}, 4000), segs);
}

TEST(Filter, SpikeBecomesArtifact) {
  const PhaseSchedule s = [] {
    PhaseSchedule p;
    p.phases = {{SegmentKind::PsmDeep, sec(60)}};
    return p;
  }();
  SynthOptions o;
  o.at_spike_rate_per_min = 1.0;
  const auto r = synthesize(s, bc95(), o);
  ASSERT_EQ(r.spikes.size(), 1u);
  DetectorConfig c = with_threshold(1e-3, 4);
  const auto out = filter_artifacts(detect_phases(r.trace, c), c, 4000);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].kind, SegmentKind::Artifact);
  EXPECT_TRUE(out[0].start_idx < r.spikes[0].end_idx && r.spikes[0].start_idx < out[0].end_idx);
}

TEST(Filter, LongListenPreserved) {
  DetectorConfig c;
  c.spike_max_duration_ms = 50;
  c.min_phase_duration_ms = 100;
  const std::vector<Segment> segs{{SegmentKind::EdrxListen, 100, 1300}};  // 300 ms
  EXPECT_EQ(filter_artifacts(segs, c, 4000), segs);
}

TEST(Filter, ShortPhaseMergesIntoSameKindNeighbour) {
  const std::vector<Segment> segs{{SegmentKind::EdrxSleep, 0, 1000},
                                  {SegmentKind::EdrxListen, 1000, 1100},  // 25 ms
                                  {SegmentKind::EdrxListen, 1100, 3000}};
  const auto out = filter_artifacts(segs, {}, 4000);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[1], (Segment{SegmentKind::EdrxListen, 1000, 3000}));
}

TEST(Filter, CoveragePreservedOnTilings) {
  std::mt19937_64 rng(9);
  for (int k = 0; k < 1000; ++k) {
    std::vector<Segment> segs;
    std::size_t pos = 0;
    const int n = 1 + static_cast<int>(rng() % 30);
    for (int i = 0; i < n; ++i) {
      const std::size_t len = 1 + rng() % 400;
      segs.push_back({kAllSegmentKinds[rng() % 8], pos, pos + len});
      pos += len;
    }
    const auto out = filter_artifacts(segs, {}, 4000);
    ASSERT_TRUE(is_valid_labeling(out, pos));
    ASSERT_EQ(covered_samples(out), pos);
  }
}

TEST(Analyzer, StreamingChunkingInvariant) {
  const auto r = synthesize(template_schedule(Rai::None000, Coverage::Good), bc95(), [] {
    SynthOptions o;
    o.noise_stddev_fraction = 0.1;
    o.at_spike_rate_per_min = 1;
    return o;
  }());
  const auto cfg = make_analyzer_config(bc95(), {}, Coverage::Good, 4000, 3.6);
  const auto whole = analyze(r.trace, cfg);
  StreamingAnalyzer a(cfg);
  std::mt19937_64 rng(10);
  std::span<const double> xs(r.trace.samples());
  while (!xs.empty()) {
    const std::size_t n = std::min<std::size_t>(xs.size(), 1 + rng() % 50000);
    a.push(xs.first(n));
    xs = xs.subspan(n);
  }
  EXPECT_EQ(a.finish(), whole);
  EXPECT_TRUE(is_valid_labeling(whole, r.trace.size()));
  EXPECT_EQ(covered_samples(whole), r.trace.size());
}

class RoundTrip : public ::testing::TestWithParam<std::tuple<Rai, Coverage>> {};

TEST_P(RoundTrip, RecoversEveryActivePhase) {
  const auto [rai, cov] = GetParam();
  const auto sched = template_schedule(rai, cov);
  const auto cfg = make_analyzer_config(bc95(), sched.timers, cov, 4000, 3.6);
  std::size_t clean_count = 0;
  for (double noise : {0.0, 0.1}) {
    SynthOptions o;
    o.noise_stddev_fraction = noise;
    o.seed = 7;
    const auto r = synthesize(sched, bc95(), o);
    const auto det = analyze(r.trace, cfg);
    const auto ev = evaluate(r.truth, det, cfg.detector.window_w);
    EXPECT_EQ(ev.precision, 1.0) << "noise " << noise;
    EXPECT_EQ(ev.recall, 1.0) << "noise " << noise;
    EXPECT_LE(std::max(ev.max_start_error, ev.max_end_error), cfg.detector.window_w);
    if (noise == 0.0)
      clean_count = ev.n_detected;
    else
      EXPECT_EQ(ev.n_detected, clean_count);
  }
}

INSTANTIATE_TEST_SUITE_P(Templates, RoundTrip,
                         ::testing::Combine(::testing::Values(Rai::None000, Rai::Release200, Rai::ReleaseAfterReply400),
                                            ::testing::Values(Coverage::Good, Coverage::Bad)));

TEST(Analyzer, SpikesLabelledArtifact) {
  SynthOptions o;
  o.noise_stddev_fraction = 0.1;
  o.at_spike_rate_per_min = 2;
  const auto r = synthesize(template_schedule(Rai::Release200, Coverage::Good), bc95(), o);
  const auto cfg = make_analyzer_config(bc95(), {}, Coverage::Good, 4000, 3.6);
  const auto ev = evaluate(r.truth, analyze(r.trace, cfg), cfg.detector.window_w, r.spikes);
  EXPECT_EQ(ev.spikes_total, 20u);
  EXPECT_EQ(ev.spikes_as_artifact, 20u);
  EXPECT_EQ(ev.precision, 1.0);
  EXPECT_EQ(ev.recall, 1.0);
}

TEST(Evaluate, CountsAndErrors) {
  const std::vector<Segment> truth{{SegmentKind::Sync, 0, 100}, {SegmentKind::PsmDeep, 100, 500}, {SegmentKind::EdrxListen, 500, 600}};
  const std::vector<Segment> det{{SegmentKind::Sync, 3, 98}, {SegmentKind::EdrxListen, 520, 600}, {SegmentKind::TxRx, 700, 800}};
  const auto ev = evaluate(truth, det, 5);
  EXPECT_EQ(ev.n_truth, 2u);
  EXPECT_EQ(ev.n_detected, 3u);
  EXPECT_EQ(ev.n_matched, 1u);
  EXPECT_EQ(ev.max_start_error, 3u);
  EXPECT_EQ(ev.max_end_error, 2u);
  EXPECT_DOUBLE_EQ(ev.recall, 0.5);
  EXPECT_DOUBLE_EQ(ev.precision, 1.0 / 3.0);
}
