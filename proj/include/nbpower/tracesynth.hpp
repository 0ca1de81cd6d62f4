#pragma once

// Renders a phase schedule into a sampled current trace with ground-truth
// labels. Optional multiplicative noise and short metadata-poll spikes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "nbpower/core.hpp"
#include "nbpower/profiles.hpp"
#include "nbpower/statemachine.hpp"

namespace nbpower {

struct SynthOptions {
  double noise_stddev_fraction = 0.0;
  double at_spike_rate_per_min = 0.0;
  double at_spike_energy_mJ = 15.0;  // one AT metadata poll
  Micros spike_duration = ms(5);
  Micros spike_guard = ms(1000);  // min distance from phase edges and other spikes
  std::uint64_t seed = 1;
};

inline void validate_synth_options(const SynthOptions& o) {
  if (!(o.noise_stddev_fraction >= 0.0 && o.noise_stddev_fraction < 0.5))
    throw DomainError("noise_stddev_fraction must be in [0, 0.5)");
  if (!(o.at_spike_rate_per_min >= 0.0) || !std::isfinite(o.at_spike_rate_per_min))
    throw DomainError("at_spike_rate_per_min must be >= 0");
  if (!(o.at_spike_energy_mJ > 0.0) || !std::isfinite(o.at_spike_energy_mJ))
    throw DomainError("at_spike_energy_mJ must be > 0");
  if (o.spike_duration.count() <= 0) throw DomainError("spike_duration must be > 0");
  if (o.spike_guard.count() < 0) throw DomainError("spike_guard must be >= 0");
}

// Sample index of an absolute time; every boundary goes through here so
// sub-phase pieces and phases quantize identically.
inline std::size_t sample_at(Micros t, double rate_hz) {
  return static_cast<std::size_t>(
      std::llround(static_cast<long double>(t.count()) * static_cast<long double>(rate_hz) / 1.0e6L));
}

// A constant-current stretch [start, end) of the rendered trace.
struct LevelRun {
  std::size_t start = 0;
  std::size_t end = 0;
  double level_a = 0.0;
};

inline double phase_base_current_a(SegmentKind k, const PowerProfile& p, Coverage c, double v) {
  switch (k) {
    case SegmentKind::PsmDeep: return p.psm_current_a(v);
    case SegmentKind::EdrxSleep: return p.edrx_sleep_current_a(v);
    case SegmentKind::EdrxListen: return p.listen_current_a(c, v);
    case SegmentKind::Sync: return p.sync_current_mA * 1e-3;
    case SegmentKind::Release: return p.release_current_mA * 1e-3;
    case SegmentKind::TxRx: return p.txrx_current_mA * 1e-3;
    case SegmentKind::InactivityCdrx: return p.paging_current_mA * 1e-3;
    case SegmentKind::TauUpdate: return p.tau_current_mA * 1e-3;
    case SegmentKind::Artifact: break;
  }
  throw DomainError("no current level for phase kind " + std::string(to_string(k)));
}

// Calls fn(LevelRun) for every constant piece of one phase spanning [t0, t1).
template <class Fn>
void render_phase_runs(const Phase& ph, Micros t0, const TimerConfig& timers, const PowerProfile& p, Coverage cov,
                       double rate, double v, Fn&& fn) {
  const Micros t1 = t0 + ph.duration;
  auto piece = [&](Micros a, Micros b, double level) {
    a = std::clamp(a, t0, t1);
    b = std::clamp(b, t0, t1);
    const auto i = sample_at(a, rate), j = sample_at(b, rate);
    if (i < j) fn(LevelRun{i, j, level});
  };
  const double peak = 2.0 * p.txrx_current_mA * 1e-3;
  switch (ph.kind) {
    case SegmentKind::TxRx: {
      const Micros pk = p.control_peak;
      piece(t0, t0 + pk, peak);
      piece(t0 + pk, t1 - pk - ph.reply_wait, p.txrx_current_mA * 1e-3);
      piece(t1 - pk - ph.reply_wait, t1 - pk, p.reply_current_mA * 1e-3);
      piece(t1 - pk, t1, peak);
      break;
    }
    case SegmentKind::TauUpdate: {
      const Micros pk = p.control_peak;
      piece(t0, t0 + pk, peak);
      piece(t0 + pk, t1 - pk, p.tau_current_mA * 1e-3);
      piece(t1 - pk, t1, peak);
      break;
    }
    case SegmentKind::InactivityCdrx: {
      const double paging = p.paging_current_mA * 1e-3;
      if (ph.continuous_paging) {
        piece(t0, t1, paging);
        break;
      }
      for (Micros c = t0; c < t1; c += timers.drx_cycle) {
        piece(c, c + timers.on_duration_timer, paging);
        piece(c + timers.on_duration_timer, c + timers.drx_cycle, p.cdrx_sleep_current_mA * 1e-3);
      }
      break;
    }
    default: piece(t0, t1, phase_base_current_a(ph.kind, p, cov, v));
  }
}

template <class Fn>
void for_each_level_run(const PhaseSchedule& s, const PowerProfile& p, double rate, double v, Fn&& fn) {
  Micros t{0};
  for (const auto& ph : s.phases) {
    render_phase_runs(ph, t, s.timers, p, s.scenario.coverage, rate, v, fn);
    t += ph.duration;
  }
}

// One Segment per phase that covers at least one sample.
inline std::vector<Segment> ground_truth(const PhaseSchedule& s, double rate) {
  CurrentTrace::validate_rate_voltage(rate, 1.0);
  std::vector<Segment> out;
  out.reserve(s.phases.size());
  Micros t{0};
  for (const auto& ph : s.phases) {
    const auto i = sample_at(t, rate);
    t += ph.duration;
    const auto j = sample_at(t, rate);
    if (i < j) out.push_back({ph.kind, i, j, SegmentSource::GroundTruth});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spikes

struct SpikePlan {
  std::vector<Segment> spikes;  // Artifact segments, sorted
  double amplitude_a = 0.0;
};

// floor(rate * minutes) spikes, one per equal stratum of the trace, each
// placed uniformly inside a sleep phase away from its edges.
inline SpikePlan plan_spikes(const PhaseSchedule& s, const SynthOptions& o, double rate, double v) {
  validate_synth_options(o);
  SpikePlan plan;
  const Micros horizon = s.total_duration();
  const auto count =
      static_cast<std::size_t>(std::floor(o.at_spike_rate_per_min * static_cast<double>(horizon.count()) / 60e6 + 1e-9));
  if (count == 0) return plan;

  const std::size_t len = std::max<std::size_t>(1, sample_at(o.spike_duration, rate));
  const std::size_t guard = sample_at(o.spike_guard, rate);
  plan.amplitude_a = o.at_spike_energy_mJ * 1e-3 / (v * static_cast<double>(len) / rate);

  std::vector<std::pair<std::size_t, std::size_t>> sleeps;
  for (const auto& seg : ground_truth(s, rate)) {
    if (seg.kind != SegmentKind::PsmDeep && seg.kind != SegmentKind::EdrxSleep) continue;
    if (!sleeps.empty() && sleeps.back().second == seg.start_idx)
      sleeps.back().second = seg.end_idx;
    else
      sleeps.emplace_back(seg.start_idx, seg.end_idx);
  }

  std::mt19937_64 rng(o.seed ^ 0x9e3779b97f4a7c15ULL);  // separate stream from the noise
  const std::size_t n = sample_at(horizon, rate);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t lo = n * k / count, hi = n * (k + 1) / count;
    // Valid starts: [a + guard, b - guard - len] for every sleep stretch
    // clipped to the stratum.
    std::vector<std::pair<std::size_t, std::size_t>> starts;
    std::size_t total = 0;
    for (auto [a, b] : sleeps) {
      a = std::max(a, lo);
      b = std::min(b, hi);
      if (b < a + 2 * guard + len) continue;
      starts.emplace_back(a + guard, b - guard - len + 1);
      total += starts.back().second - starts.back().first;
    }
    if (total == 0) throw DomainError("no room for AT spike " + std::to_string(k + 1) + " of " + std::to_string(count));
    auto pick = std::uniform_int_distribution<std::size_t>(0, total - 1)(rng);
    for (auto [a, b] : starts) {
      if (pick < b - a) {
        plan.spikes.push_back({SegmentKind::Artifact, a + pick, a + pick + len, SegmentSource::GroundTruth});
        break;
      }
      pick -= b - a;
    }
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Rendering

inline constexpr std::size_t kRenderChunk = 1 << 16;

// Streams the trace to sink(std::span<const double>) in chunks; memory use
// is independent of the horizon.
template <class Sink>
void render(const PhaseSchedule& s, const PowerProfile& p, const SynthOptions& o, double rate, double v, Sink&& sink) {
  CurrentTrace::validate_rate_voltage(rate, v);
  validate_synth_options(o);
  const SpikePlan spikes = plan_spikes(s, o, rate, v);

  std::mt19937_64 noise_rng(o.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double sigma = o.noise_stddev_fraction;

  std::vector<double> buf;
  buf.reserve(kRenderChunk);
  std::size_t idx = 0, next_spike = 0;
  for_each_level_run(s, p, rate, v, [&](const LevelRun& r) {
    for (std::size_t i = r.start; i < r.end; ++i, ++idx) {
      double x = r.level_a;
      if (sigma > 0.0) x = std::max(0.0, x * (1.0 + sigma * gauss(noise_rng)));
      while (next_spike < spikes.spikes.size() && spikes.spikes[next_spike].end_idx <= i) ++next_spike;
      if (next_spike < spikes.spikes.size() && spikes.spikes[next_spike].start_idx <= i) x += spikes.amplitude_a;
      buf.push_back(x);
      if (buf.size() == kRenderChunk) {
        sink(std::span<const double>(buf));
        buf.clear();
      }
    }
  });
  if (!buf.empty()) sink(std::span<const double>(buf));
}

struct SynthResult {
  CurrentTrace trace;
  std::vector<Segment> truth;
  std::vector<Segment> spikes;
};

inline SynthResult synthesize(const PhaseSchedule& s, const PowerProfile& p, const SynthOptions& o,
                              double rate = kDefaultSampleRateHz, double v = kDefaultSupplyVoltage) {
  CurrentTrace::validate_rate_voltage(rate, v);
  std::vector<double> samples;
  samples.reserve(sample_at(s.total_duration(), rate));
  render(s, p, o, rate, v, [&](std::span<const double> c) { samples.insert(samples.end(), c.begin(), c.end()); });
  SynthResult r;
  r.trace = CurrentTrace(rate, v, std::move(samples));
  r.truth = ground_truth(s, rate);
  r.spikes = plan_spikes(s, o, rate, v).spikes;
  return r;
}

// ---------------------------------------------------------------------------

struct ListenBugResult {
  CurrentTrace trace;
  std::vector<Segment> segments;  // unchanged ground truth
  std::size_t modified = 0;
  std::size_t extension_samples = 0;
};

// Keeps the current of every `every`-th EdrxListen segment at its mean level
// for `extension` past the segment end, clipped to the following segment and
// the trace. Ground-truth end markers are left where they were.
inline ListenBugResult inject_edrx_listen_bug(const CurrentTrace& trace, const std::vector<Segment>& segments,
                                              Micros extension, std::size_t every = 1) {
  if (extension.count() < 0) throw DomainError("extension must be >= 0");
  if (every == 0) throw DomainError("every must be >= 1");
  if (!is_valid_labeling(segments, trace.size())) throw DomainError("segments are not a valid labeling of the trace");
  const bool any = std::any_of(segments.begin(), segments.end(),
                               [](const Segment& s) { return s.kind == SegmentKind::EdrxListen; });
  if (!any) throw DomainError("no EdrxListen segment to extend");

  ListenBugResult r;
  r.segments = segments;
  r.extension_samples = sample_at(extension, trace.sample_rate_hz());
  std::vector<double> x = trace.samples();
  std::size_t nth = 0;
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const auto& s = segments[k];
    if (s.kind != SegmentKind::EdrxListen) continue;
    if (nth++ % every != 0 || r.extension_samples == 0) continue;
    double sum = 0.0;
    for (std::size_t i = s.start_idx; i < s.end_idx; ++i) sum += trace.samples()[i];
    const double level = sum / static_cast<double>(s.length());
    std::size_t stop = std::min(s.end_idx + r.extension_samples, x.size());
    if (k + 1 < segments.size()) stop = std::min(stop, segments[k + 1].end_idx);
    for (std::size_t i = s.end_idx; i < stop; ++i) x[i] = level;
    ++r.modified;
  }
  r.trace = CurrentTrace(trace.sample_rate_hz(), trace.supply_voltage_v(), std::move(x), trace.t0());
  return r;
}

}  // namespace nbpower
