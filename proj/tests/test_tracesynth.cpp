#include <gtest/gtest.h>

#include <numeric>

#include "nbpower/energy.hpp"
#include "nbpower/segment.hpp"
#include "nbpower/tracesynth.hpp"

using namespace nbpower;

namespace {

const PowerProfile& bc95() {
  static const PowerProfile p = default_profile();
  return p;
}

PhaseSchedule manual(std::vector<Phase> phases) {
  PhaseSchedule s;
  s.phases = std::move(phases);
  return s;
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

}  // namespace

TEST(Synth, PsmOnlyIsConstant) {
  auto p = bc95();
  p.psm_power_uW = 10.61;
  const auto r = synthesize(manual({{SegmentKind::PsmDeep, sec(10)}}), p, {}, 4000.0, 3.6);
  ASSERT_EQ(r.trace.size(), 40000u);
  for (double x : r.trace.samples()) ASSERT_DOUBLE_EQ(x, 10.61e-6 / 3.6);
  ASSERT_EQ(r.truth.size(), 1u);
  EXPECT_EQ(r.truth[0], (Segment{SegmentKind::PsmDeep, 0, 40000, SegmentSource::GroundTruth}));
}

// A day at 4 kHz is ~345.6 M samples; rendering hands them out in bounded chunks.
TEST(Synth, LongHorizonStreamsInBoundedChunks) {
  Scenario sc;
  sc.idle_mode = IdleMode::EdrxThenPsm;
  sc.transmission_interval = sec(4 * 3600);
  sc.horizon = sec(86400);
  const auto sched = build_schedule(sc, {}, bc95());
  std::size_t total = 0, largest = 0;
  double charge = 0.0;
  render(sched, bc95(), {}, 4000.0, 3.6, [&](std::span<const double> c) {
    total += c.size();
    largest = std::max(largest, c.size());
    for (double x : c) charge += x;
  });
  EXPECT_EQ(total, 345600000u);
  EXPECT_LE(largest, kRenderChunk);
  EXPECT_GT(charge, 0.0);
}

TEST(Synth, EmptySchedule) {
  const auto r = synthesize(manual({}), bc95(), {});
  EXPECT_TRUE(r.trace.empty());
  EXPECT_TRUE(r.truth.empty());
}

TEST(Synth, BadRate) { EXPECT_THROW(synthesize(manual({}), bc95(), {}, 0.0), DomainError); }

TEST(Synth, BadOptions) {
  SynthOptions o;
  o.noise_stddev_fraction = 0.5;
  EXPECT_THROW(synthesize(manual({{SegmentKind::PsmDeep, sec(1)}}), bc95(), o), DomainError);
  o = {};
  o.at_spike_energy_mJ = 0.0;
  EXPECT_THROW(synthesize(manual({{SegmentKind::PsmDeep, sec(1)}}), bc95(), o), DomainError);
}

TEST(Synth, TwoSpikesPerMinuteOf15mJ) {
  const auto sched = manual({{SegmentKind::PsmDeep, sec(60)}});
  SynthOptions o;
  o.at_spike_rate_per_min = 2.0;
  const auto with = synthesize(sched, bc95(), o);
  const auto without = synthesize(sched, bc95(), {});
  ASSERT_EQ(with.spikes.size(), 2u);
  for (const auto& sp : with.spikes) {
    EXPECT_EQ(sp.kind, SegmentKind::Artifact);
    const double extra = integrate_energy(with.trace, sp) - integrate_energy(without.trace, sp);
    EXPECT_NEAR(extra, 0.015, 1e-12);
  }
  // Nothing else moved.
  EXPECT_NEAR(trace_energy(with.trace) - trace_energy(without.trace), 0.030, 1e-12);
}

TEST(Synth, SpikesStayInSleep) {
  const auto sched = template_schedule(Rai::None000, Coverage::Good);
  SynthOptions o;
  o.at_spike_rate_per_min = 2.0;
  const auto r = synthesize(sched, bc95(), o);
  ASSERT_EQ(r.spikes.size(), 20u);
  for (const auto& sp : r.spikes) {
    for (const auto& t : r.truth) {
      if (t.start_idx < sp.end_idx && sp.start_idx < t.end_idx) {
        EXPECT_TRUE(t.kind == SegmentKind::PsmDeep || t.kind == SegmentKind::EdrxSleep) << to_string(t.kind);
      }
    }
  }
}

TEST(Synth, GroundTruthTilesTrace) {
  for (auto rai : {Rai::None000, Rai::Release200, Rai::ReleaseAfterReply400})
    for (auto cov : {Coverage::Good, Coverage::Bad}) {
      const auto r = synthesize(template_schedule(rai, cov), bc95(), {});
      ASSERT_TRUE(is_valid_labeling(r.truth, r.trace.size()));
      EXPECT_EQ(r.truth.front().start_idx, 0u);
      EXPECT_EQ(covered_samples(r.truth), r.trace.size());
      EXPECT_EQ(r.trace.size(), 600u * 4000u);
    }
}

TEST(Synth, DeterministicForSeed) {
  SynthOptions o;
  o.noise_stddev_fraction = 0.1;
  o.at_spike_rate_per_min = 1.0;
  o.seed = 99;
  const auto s = template_schedule(Rai::Release200, Coverage::Bad);
  const auto a = synthesize(s, bc95(), o), b = synthesize(s, bc95(), o);
  EXPECT_EQ(a.trace.samples(), b.trace.samples());
  o.seed = 100;
  EXPECT_NE(a.trace.samples(), synthesize(s, bc95(), o).trace.samples());
}

TEST(Synth, StreamedChunksEqualWholeTrace) {
  const auto s = template_schedule(Rai::ReleaseAfterReply400, Coverage::Good);
  SynthOptions o;
  o.noise_stddev_fraction = 0.05;
  std::vector<double> streamed;
  std::size_t chunks = 0;
  render(s, bc95(), o, 4000.0, 3.6, [&](std::span<const double> c) {
    EXPECT_LE(c.size(), kRenderChunk);
    streamed.insert(streamed.end(), c.begin(), c.end());
    ++chunks;
  });
  EXPECT_GT(chunks, 1u);
  EXPECT_EQ(streamed, synthesize(s, bc95(), o).trace.samples());
}

// Noise-free constant phases integrate to level * V * duration.
TEST(Synth, RoundTripFidelity) {
  const double v = 3.6, rate = 4000.0;
  const auto s = template_schedule(Rai::None000, Coverage::Good);
  const auto r = synthesize(s, bc95(), {}, rate, v);
  for (const auto& seg : r.truth) {
    if (seg.kind == SegmentKind::TxRx || seg.kind == SegmentKind::InactivityCdrx || seg.kind == SegmentKind::TauUpdate)
      continue;
    const double level = phase_base_current_a(seg.kind, bc95(), Coverage::Good, v);
    EXPECT_NEAR(integrate_energy(r.trace, seg), level * v * static_cast<double>(seg.length()) / rate,
                1e-12 * level * static_cast<double>(seg.length()));
  }
}

TEST(Synth, TxRxHasBracketingPeaks) {
  const auto r = synthesize(template_schedule(Rai::Release200, Coverage::Good), bc95(), {});
  const double peak = 2.0 * bc95().txrx_current_mA * 1e-3;
  const std::size_t pk = 80;  // 20 ms at 4 kHz
  for (const auto& seg : r.truth) {
    if (seg.kind != SegmentKind::TxRx) continue;
    const auto& x = r.trace.samples();
    for (std::size_t i = 0; i < pk; ++i) {
      EXPECT_EQ(x[seg.start_idx + i], peak);
      EXPECT_EQ(x[seg.end_idx - 1 - i], peak);
    }
    EXPECT_EQ(x[seg.start_idx + pk], bc95().txrx_current_mA * 1e-3);
  }
}

TEST(ListenBug, ZeroExtensionIsIdentity) {
  const auto r = synthesize(template_schedule(Rai::Release200, Coverage::Good), bc95(), {});
  const auto b = inject_edrx_listen_bug(r.trace, r.truth, Micros{0});
  EXPECT_EQ(b.trace.samples(), r.trace.samples());
  EXPECT_EQ(b.segments, r.truth);
}

TEST(ListenBug, NeedsListen) {
  const auto r = synthesize(manual({{SegmentKind::PsmDeep, sec(2)}}), bc95(), {});
  EXPECT_THROW(inject_edrx_listen_bug(r.trace, r.truth, ms(75)), DomainError);
}

TEST(ListenBug, EnergyDeltaClosedForm) {
  const double v = 3.6;
  const auto r = synthesize(template_schedule(Rai::Release200, Coverage::Good), bc95(), {}, 4000.0, v);
  const auto b = inject_edrx_listen_bug(r.trace, r.truth, ms(75));
  EXPECT_EQ(b.segments, r.truth);
  EXPECT_EQ(b.extension_samples, 300u);
  const double listen = bc95().listen_current_a(Coverage::Good, v);
  const double sleep = bc95().edrx_sleep_current_a(v);
  const double expect = static_cast<double>(b.modified) * (listen - sleep) * v * 0.075;
  EXPECT_GT(b.modified, 0u);
  EXPECT_NEAR(trace_energy(b.trace) - trace_energy(r.trace), expect, 1e-9);
}

TEST(ListenBug, DetectorSeesLongerListen) {
  auto p = builtin_profile(Module::SaraN211, Operator::Telenor);
  Scenario sc;
  sc.idle_mode = IdleMode::EdrxThenPsm;
  sc.transmission_interval = sc.horizon = sec(300);
  const auto sched = build_schedule(sc, {}, p);
  const auto r = synthesize(sched, p, {});
  const auto b = inject_edrx_listen_bug(r.trace, r.truth, ms(75));
  const auto cfg = make_analyzer_config(p, {}, Coverage::Good, 4000.0, 3.6);
  std::vector<double> durations;
  for (const auto& s : analyze(b.trace, cfg))
    if (s.kind == SegmentKind::EdrxListen) durations.push_back(static_cast<double>(s.length()) / 4.0);
  ASSERT_FALSE(durations.empty());
  EXPECT_NEAR(median_of(durations), 300.0, 5.0);
}
