#pragma once

// Deterministic UE phase scheduler: Connected-state substates, inactivity
// timer with cDRX, release assistance, and Idle-state eDRX/PSM with TAU.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "nbpower/core.hpp"
#include "nbpower/profiles.hpp"

namespace nbpower {

enum class IdleMode { PsmOnly, EdrxThenPsm };

// Replays of network misconfigurations observed in the field.
enum class MisconfigReplay { None, IgnoreRai200EveryOther, NoCdrxDuringInactivity };

inline std::string_view to_string(IdleMode m) { return m == IdleMode::PsmOnly ? "psm" : "edrx_psm"; }

inline std::string_view to_string(MisconfigReplay m) {
  switch (m) {
    case MisconfigReplay::None: return "none";
    case MisconfigReplay::IgnoreRai200EveryOther: return "ignore_rai200_every_other";
    case MisconfigReplay::NoCdrxDuringInactivity: return "no_cdrx_during_inactivity";
  }
  return "?";
}

inline constexpr std::array<int, 5> kTestedPacketSizes{12, 20, 128, 256, 512};

struct Scenario {
  Rai rai = Rai::Release200;
  int packet_size_bytes = 20;
  bool allow_any_packet_size = false;
  Micros transmission_interval = hours(1);
  Coverage coverage = Coverage::Good;
  Ecl ecl = Ecl::Ecl0;
  IdleMode idle_mode = IdleMode::PsmOnly;
  Micros horizon = hours(1);
  MisconfigReplay misconfig_replay = MisconfigReplay::None;

  // Randomness; all draws come from one generator seeded with `seed`.
  std::uint64_t seed = 1;
  Micros sync_jitter{0};          // uniform in [-jitter, +jitter]
  double rach_failure_prob = 0.0;  // per preamble attempt
  int max_rach_attempts = 10;
};

inline void validate_scenario(const Scenario& s) {
  if (s.packet_size_bytes <= 0) throw DomainError("packet_size_bytes must be positive");
  if (!s.allow_any_packet_size &&
      std::find(kTestedPacketSizes.begin(), kTestedPacketSizes.end(), s.packet_size_bytes) == kTestedPacketSizes.end())
    throw DomainError("packet_size_bytes must be one of 12, 20, 128, 256, 512 unless overridden");
  if (s.transmission_interval.count() <= 0) throw DomainError("transmission_interval must be positive");
  if (s.horizon < s.transmission_interval) throw DomainError("horizon must be >= transmission_interval");
  if (s.sync_jitter.count() < 0) throw DomainError("sync_jitter must be >= 0");
  if (!(s.rach_failure_prob >= 0.0 && s.rach_failure_prob < 1.0)) throw DomainError("rach_failure_prob must be in [0, 1)");
  if (s.max_rach_attempts < 1) throw DomainError("max_rach_attempts must be >= 1");
}

struct Phase {
  SegmentKind kind = SegmentKind::PsmDeep;
  Micros duration{};
  Micros reply_wait{};             // TxRx only: trailing wait for the downlink reply
  bool continuous_paging = false;  // InactivityCdrx only: paging without cDRX sleep
  friend bool operator==(const Phase&, const Phase&) = default;
};

struct EventInfo {
  Micros start{};
  Micros connected{};
  int rach_attempts = 1;
  bool inactivity = false;
};

struct PhaseSchedule {
  Scenario scenario;
  TimerConfig timers;
  std::vector<Phase> phases;
  std::vector<EventInfo> events;
  Micros connected_duration{};  // first event
  std::int64_t n_edrx_cycles = 0;
  std::int64_t n_tau = 0;

  Micros total_duration() const {
    Micros t{0};
    for (const auto& p : phases) t += p.duration;
    return t;
  }
};

// ---------------------------------------------------------------------------

inline std::int64_t n_edrx_cycles(Micros idle_duration, const TimerConfig& t) {
  if (idle_duration.count() < 0) throw DomainError("idle duration must be >= 0");
  if (t.edrx_cycle.count() <= 0) throw DomainError("edrx_cycle must be positive");
  return std::min(idle_duration, t.t3324_active).count() / t.edrx_cycle.count();
}

// TxRx phase length, including the RAI-400 reply wait.
struct TxRxTiming {
  Micros total{};
  Micros reply_wait{};
};

inline TxRxTiming txrx_timing(const PowerProfile& p, int packet_size_bytes, Rai rai, Ecl ecl) {
  const double mult = p.ecl_multiplier[static_cast<std::size_t>(index_of(ecl))];
  const double size = static_cast<double>(packet_size_bytes);
  const Micros base{std::llround((p.txrx_fixed_us + p.txrx_per_byte_us * size) * mult)};
  Micros reply{0};
  if (rai == Rai::ReleaseAfterReply400)
    reply = Micros{std::llround((p.reply_wait_fixed_us + p.reply_wait_per_byte_us * size) * mult)};
  return {base + reply, reply};
}

inline bool event_has_inactivity(const Scenario& sc, std::size_t event_index) {
  if (sc.rai == Rai::None000) return true;
  return sc.rai == Rai::Release200 && sc.misconfig_replay == MisconfigReplay::IgnoreRai200EveryOther &&
         event_index % 2 == 1;
}

namespace detail {

inline void push_phase(std::vector<Phase>& out, Phase p) {
  if (p.duration.count() > 0) out.push_back(p);
}

inline std::vector<Phase> connected_phases(const Scenario& sc, const TimerConfig& t, const PowerProfile& p,
                                           std::size_t event_index, Micros sync) {
  std::vector<Phase> out;
  const auto tx = txrx_timing(p, sc.packet_size_bytes, sc.rai, sc.ecl);
  push_phase(out, {SegmentKind::Sync, sync});
  push_phase(out, {SegmentKind::TxRx, tx.total, tx.reply_wait});
  if (event_has_inactivity(sc, event_index)) {
    Phase inactivity{SegmentKind::InactivityCdrx, t.inactivity_timer};
    inactivity.continuous_paging =
        p.continuous_paging_during_inactivity || sc.misconfig_replay == MisconfigReplay::NoCdrxDuringInactivity;
    push_phase(out, inactivity);
  }
  push_phase(out, {SegmentKind::Release, p.release_duration});
  return out;
}

inline Micros sum_durations(const std::vector<Phase>& ph) {
  Micros t{0};
  for (const auto& p : ph) t += p.duration;
  return t;
}

// One idle stretch between entering Idle (or finishing a TAU) and the next
// wake-up: eDRX cycles for the active timer, then deep sleep. Each eDRX cycle
// is the long sleep followed by the paging time window.
inline void append_idle_episode(std::vector<Phase>& out, Micros len, const Scenario& sc, const TimerConfig& t,
                                const PowerProfile& p, std::int64_t& cycles) {
  Micros used{0};
  if (sc.idle_mode == IdleMode::EdrxThenPsm) {
    const auto n = n_edrx_cycles(len, t);
    const Micros listen = p.listen(sc.coverage).duration;
    const auto po_per_ptw = std::max<std::int64_t>(1, t.ptw.count() / t.drx_cycle.count());
    for (std::int64_t c = 0; c < n; ++c) {
      push_phase(out, {SegmentKind::EdrxSleep, t.edrx_cycle - t.ptw});
      Micros ptw_left = t.ptw;
      for (std::int64_t k = 0; k < po_per_ptw; ++k) {
        const Micros slot = (k + 1 == po_per_ptw) ? ptw_left : t.drx_cycle;
        push_phase(out, {SegmentKind::EdrxListen, listen});
        push_phase(out, {SegmentKind::EdrxSleep, slot - listen});
        ptw_left -= slot;
      }
    }
    cycles += n;
    used = Micros{n * t.edrx_cycle.count()};
  }
  push_phase(out, {SegmentKind::PsmDeep, len - used});
}

// Idle time after a release: TAU fires whenever T3412 elapses without an
// uplink, and every TAU restarts the idle cycle.
inline void append_idle(std::vector<Phase>& out, Micros len, const Scenario& sc, const TimerConfig& t,
                        const PowerProfile& p, std::int64_t& cycles, std::int64_t& taus) {
  Micros pos{0};
  while (true) {
    const Micros next_tau = pos + t.t3412_tau;
    const bool tau_fits = next_tau + p.tau_duration <= len;
    const Micros episode_end = tau_fits ? next_tau : len;
    append_idle_episode(out, episode_end - pos, sc, t, p, cycles);
    if (!tau_fits) break;
    push_phase(out, {SegmentKind::TauUpdate, p.tau_duration});
    ++taus;
    pos = next_tau + p.tau_duration;
  }
}

}  // namespace detail

inline void check_schedule_inputs(const Scenario& sc, const TimerConfig& t, const PowerProfile& p) {
  validate_scenario(sc);
  const auto vr = validate_timers(t);
  if (!vr.ok()) {
    std::string msg = "invalid timers:";
    for (const auto& v : vr.violations) msg += " " + v.field + " " + v.bound + ";";
    throw DomainError(msg);
  }
  validate_profile(p);
  if (sc.idle_mode == IdleMode::EdrxThenPsm && p.listen(sc.coverage).duration > t.drx_cycle)
    throw DomainError("eDRX listen duration exceeds the DRX cycle");
}

// Duration of Sync + TxRx + [inactivity] + Release for the first event,
// without random jitter or RACH retries.
inline Micros connected_duration(const Scenario& sc, const TimerConfig& t, const PowerProfile& p) {
  check_schedule_inputs(sc, t, p);
  return detail::sum_durations(detail::connected_phases(sc, t, p, 0, p.sync_duration));
}

inline PhaseSchedule build_schedule(const Scenario& sc, const TimerConfig& t, const PowerProfile& p) {
  check_schedule_inputs(sc, t, p);
  PhaseSchedule s;
  s.scenario = sc;
  s.timers = t;

  std::mt19937_64 rng(sc.seed);
  std::uniform_int_distribution<std::int64_t> jitter(-sc.sync_jitter.count(), sc.sync_jitter.count());
  std::bernoulli_distribution preamble_fails(sc.rach_failure_prob);

  Micros clock{0};
  for (std::size_t k = 0;; ++k) {
    const Micros start{static_cast<std::int64_t>(k) * sc.transmission_interval.count()};
    if (start >= sc.horizon) break;

    int attempts = 1;
    while (attempts < sc.max_rach_attempts && preamble_fails(rng)) ++attempts;
    Micros sync = p.sync_duration + Micros{jitter(rng)} + (attempts - 1) * p.rach_retry;
    sync = std::max(sync, ms(1));

    auto conn = detail::connected_phases(sc, t, p, k, sync);
    const Micros conn_len = detail::sum_durations(conn);
    if (start + conn_len > sc.horizon) {
      if (k == 0) throw DomainError("horizon too short to fit one transmission event");
      break;
    }
    if (conn_len > sc.transmission_interval)
      throw DomainError("connected state (" + format_duration(conn_len) + ") outlasts the transmission interval");

    if (k == 0) s.connected_duration = conn_len;
    s.events.push_back({start, conn_len, attempts, event_has_inactivity(sc, k)});
    s.phases.insert(s.phases.end(), conn.begin(), conn.end());
    clock = start + conn_len;

    const Micros next = std::min(start + sc.transmission_interval, sc.horizon);
    detail::append_idle(s.phases, next - clock, sc, t, p, s.n_edrx_cycles, s.n_tau);
    clock = next;
  }
  if (clock < sc.horizon) detail::append_idle(s.phases, sc.horizon - clock, sc, t, p, s.n_edrx_cycles, s.n_tau);
  return s;
}

}  // namespace nbpower
