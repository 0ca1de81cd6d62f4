#pragma once

// Domain types shared by every nbpower module: units, timers, traces and
// labeled segments. All types are plain values; nothing here owns threads or
// mutable global state.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nbpower {

// Raised for invalid inputs and violated preconditions.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Micros = std::chrono::microseconds;

inline constexpr Micros ms(std::int64_t v) { return Micros{v * 1000}; }
inline constexpr Micros sec(std::int64_t v) { return Micros{v * 1000000}; }
inline constexpr Micros hours(std::int64_t v) { return Micros{v * 3600LL * 1000000}; }

inline constexpr double to_seconds(Micros d) { return static_cast<double>(d.count()) * 1e-6; }

// Rounds a duration given in seconds to the nearest microsecond.
inline Micros from_seconds(double s) {
  if (!std::isfinite(s)) throw DomainError("non-finite duration");
  return Micros{std::llround(s * 1e6)};
}

// ---------------------------------------------------------------------------
// Decibel units. Ratios are carried in centibels (cB) and absolute powers in
// centibel-milliwatts (cBm), both as integers; 1 dB = 10 cB.

struct Cb {
  std::int64_t value{};
  friend constexpr auto operator<=>(Cb, Cb) = default;
  friend constexpr Cb operator+(Cb a, Cb b) { return {a.value + b.value}; }
  friend constexpr Cb operator-(Cb a, Cb b) { return {a.value - b.value}; }
  friend constexpr Cb operator-(Cb a) { return {-a.value}; }
};

struct Cbm {
  std::int64_t value{};
  friend constexpr auto operator<=>(Cbm, Cbm) = default;
  friend constexpr Cbm operator+(Cbm a, Cb b) { return {a.value + b.value}; }
  friend constexpr Cbm operator-(Cbm a, Cb b) { return {a.value - b.value}; }
  friend constexpr Cb operator-(Cbm a, Cbm b) { return {a.value - b.value}; }
};

// Half-away-from-zero rounding to an integer count of centi-units.
inline std::int64_t round_centi(double x) {
  if (!std::isfinite(x)) throw DomainError("non-finite decibel value");
  return static_cast<std::int64_t>(std::llround(x));
}

inline double cb_to_db(Cb x) { return static_cast<double>(x.value) / 10.0; }
inline double cbm_to_dbm(Cbm x) { return static_cast<double>(x.value) / 10.0; }

inline Cb db_to_cb(double db) {
  if (!std::isfinite(db)) throw DomainError("non-finite dB value");
  return Cb{round_centi(db * 10.0)};
}

inline Cbm dbm_to_cbm(double dbm) {
  if (!std::isfinite(dbm)) throw DomainError("non-finite dBm value");
  return Cbm{round_centi(dbm * 10.0)};
}

// Linear milliwatts <-> cBm, unrounded.
inline double cbm_to_mw(double cbm) { return std::pow(10.0, cbm / 100.0); }
inline double mw_to_cbm(double mw) { return 100.0 * std::log10(mw); }

// ---------------------------------------------------------------------------
// Protocol enums.

enum class Rai { None000, Release200, ReleaseAfterReply400 };

enum class Ecl { Ecl0 = 0, Ecl1 = 1, Ecl2 = 2 };

inline constexpr int index_of(Ecl e) { return static_cast<int>(e); }

// Target maximum coupling loss of each coverage class, in dB.
inline constexpr int target_mcl_db(Ecl e) {
  switch (e) {
    case Ecl::Ecl0: return 144;
    case Ecl::Ecl1: return 154;
    case Ecl::Ecl2: return 164;
  }
  return 0;
}

enum class Coverage { Good, Bad };

inline std::string_view to_string(Rai r) {
  switch (r) {
    case Rai::None000: return "000";
    case Rai::Release200: return "200";
    case Rai::ReleaseAfterReply400: return "400";
  }
  return "?";
}

inline std::string_view to_string(Ecl e) {
  switch (e) {
    case Ecl::Ecl0: return "ECL0";
    case Ecl::Ecl1: return "ECL1";
    case Ecl::Ecl2: return "ECL2";
  }
  return "?";
}

inline std::string_view to_string(Coverage c) { return c == Coverage::Good ? "good" : "bad"; }

// ---------------------------------------------------------------------------
// Timers negotiated with the network.

struct TimerConfig {
  Micros on_duration_timer = ms(100);
  Micros drx_cycle = ms(2560);
  Micros ptw = ms(2560);
  Micros edrx_cycle = ms(20480);
  Micros t3324_active = sec(180);
  Micros t3412_tau = hours(24);
  Micros inactivity_timer = sec(20);
};

struct TimerBound {
  Micros min;
  Micros max;
};

namespace timer_bounds {
inline constexpr TimerBound on_duration{ms(1), ms(200)};
inline constexpr TimerBound drx_cycle{ms(2), ms(2560)};
inline constexpr TimerBound ptw{ms(2560), ms(40960)};
inline constexpr TimerBound edrx_cycle{ms(20480), ms(10485760)};
inline constexpr TimerBound t3324{sec(2), hours(410)};
inline constexpr TimerBound t3412{sec(2), hours(410)};
inline constexpr TimerBound inactivity{Micros{0}, ms(65536)};
}  // namespace timer_bounds

struct Violation {
  std::string field;
  std::string bound;  // human-readable, e.g. "<= 40.96 s" or "<= edrx_cycle"
  Micros actual{};
};

struct ValidationResult {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  explicit operator bool() const { return ok(); }
};

inline std::string format_duration(Micros d) {
  const auto us = d.count();
  char buf[64];
  if (us % 1000 != 0 || (us > -1000 && us < 1000)) {
    std::snprintf(buf, sizeof buf, "%lld us", static_cast<long long>(us));
  } else if (us > -1000000 && us < 1000000) {
    std::snprintf(buf, sizeof buf, "%lld ms", static_cast<long long>(us / 1000));
  } else {
    std::snprintf(buf, sizeof buf, "%.3f", static_cast<double>(us) / 1e6);
    std::string s(buf);
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
    return s + " s";
  }
  return buf;
}

inline ValidationResult validate_timers(const TimerConfig& t) {
  ValidationResult r;
  auto check = [&r](const char* name, Micros v, TimerBound b) {
    if (v < b.min) r.violations.push_back({name, ">= " + format_duration(b.min), v});
    if (v > b.max) r.violations.push_back({name, "<= " + format_duration(b.max), v});
  };
  check("on_duration_timer", t.on_duration_timer, timer_bounds::on_duration);
  check("drx_cycle", t.drx_cycle, timer_bounds::drx_cycle);
  check("ptw", t.ptw, timer_bounds::ptw);
  check("edrx_cycle", t.edrx_cycle, timer_bounds::edrx_cycle);
  check("t3324_active", t.t3324_active, timer_bounds::t3324);
  check("t3412_tau", t.t3412_tau, timer_bounds::t3412);
  check("inactivity_timer", t.inactivity_timer, timer_bounds::inactivity);
  if (t.ptw > t.edrx_cycle) r.violations.push_back({"ptw", "<= edrx_cycle", t.ptw});
  if (t.on_duration_timer > t.drx_cycle)
    r.violations.push_back({"on_duration_timer", "<= drx_cycle", t.on_duration_timer});
  if (t.t3324_active > t.t3412_tau) r.violations.push_back({"t3324_active", "<= t3412_tau", t.t3324_active});
  return r;
}

// ---------------------------------------------------------------------------
// Traces and segments.

inline constexpr double kDefaultSampleRateHz = 4000.0;
inline constexpr double kDefaultSupplyVoltage = 3.6;

class CurrentTrace {
 public:
  CurrentTrace() = default;

  CurrentTrace(double sample_rate_hz, double supply_voltage_v, std::vector<double> samples_a, double t0 = 0.0)
      : rate_(sample_rate_hz), voltage_(supply_voltage_v), t0_(t0), samples_(std::move(samples_a)) {
    validate_rate_voltage(rate_, voltage_);
    for (double s : samples_) {
      if (!std::isfinite(s) || s < 0.0) throw DomainError("trace samples must be finite and non-negative");
    }
  }

  static void validate_rate_voltage(double rate, double voltage) {
    if (!(rate > 0.0) || !std::isfinite(rate)) throw DomainError("sample rate must be positive");
    if (!(voltage > 0.0) || !std::isfinite(voltage)) throw DomainError("supply voltage must be positive");
  }

  double sample_rate_hz() const { return rate_; }
  double supply_voltage_v() const { return voltage_; }
  double t0() const { return t0_; }
  const std::vector<double>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  double duration_s() const { return static_cast<double>(samples_.size()) / rate_; }

 private:
  double rate_ = kDefaultSampleRateHz;
  double voltage_ = kDefaultSupplyVoltage;
  double t0_ = 0.0;
  std::vector<double> samples_;
};

enum class SegmentKind { Sync, TxRx, InactivityCdrx, Release, EdrxListen, EdrxSleep, PsmDeep, TauUpdate, Artifact };

inline constexpr std::array<SegmentKind, 9> kAllSegmentKinds{
    SegmentKind::Sync,      SegmentKind::TxRx,    SegmentKind::InactivityCdrx,
    SegmentKind::Release,   SegmentKind::EdrxListen, SegmentKind::EdrxSleep,
    SegmentKind::PsmDeep,   SegmentKind::TauUpdate,  SegmentKind::Artifact};

inline std::string_view to_string(SegmentKind k) {
  switch (k) {
    case SegmentKind::Sync: return "Sync";
    case SegmentKind::TxRx: return "TxRx";
    case SegmentKind::InactivityCdrx: return "InactivityCdrx";
    case SegmentKind::Release: return "Release";
    case SegmentKind::EdrxListen: return "EdrxListen";
    case SegmentKind::EdrxSleep: return "EdrxSleep";
    case SegmentKind::PsmDeep: return "PsmDeep";
    case SegmentKind::TauUpdate: return "TauUpdate";
    case SegmentKind::Artifact: return "Artifact";
  }
  return "?";
}

inline SegmentKind parse_segment_kind(std::string_view s) {
  for (auto k : kAllSegmentKinds) {
    if (to_string(k) == s) return k;
  }
  throw DomainError("unknown segment kind '" + std::string(s) + "'");
}

// Phases during which the radio is doing protocol work (as opposed to
// sleeping). These are the phases a detector is expected to recover.
inline constexpr bool is_active(SegmentKind k) {
  switch (k) {
    case SegmentKind::EdrxSleep:
    case SegmentKind::PsmDeep:
    case SegmentKind::Artifact: return false;
    default: return true;
  }
}

inline constexpr bool is_connected_kind(SegmentKind k) {
  return k == SegmentKind::Sync || k == SegmentKind::TxRx || k == SegmentKind::InactivityCdrx ||
         k == SegmentKind::Release || k == SegmentKind::TauUpdate;
}

enum class SegmentSource { GroundTruth, Detected };

struct Segment {
  SegmentKind kind = SegmentKind::Artifact;
  std::size_t start_idx = 0;
  std::size_t end_idx = 0;  // exclusive
  SegmentSource source = SegmentSource::Detected;

  std::size_t length() const { return end_idx - start_idx; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

// True iff every segment is non-empty, inside [0, n), and the list is
// sorted and non-overlapping.
inline bool is_valid_labeling(const std::vector<Segment>& segs, std::size_t n) {
  std::size_t prev_end = 0;
  for (const auto& s : segs) {
    if (s.start_idx >= s.end_idx || s.end_idx > n || s.start_idx < prev_end) return false;
    prev_end = s.end_idx;
  }
  return true;
}

inline std::size_t covered_samples(const std::vector<Segment>& segs) {
  std::size_t n = 0;
  for (const auto& s : segs) n += s.length();
  return n;
}

// Sorts by start index and fuses touching segments of the same kind.
inline std::vector<Segment> merge_adjacent(std::vector<Segment> segs) {
  std::sort(segs.begin(), segs.end(), [](const Segment& a, const Segment& b) { return a.start_idx < b.start_idx; });
  std::vector<Segment> out;
  out.reserve(segs.size());
  for (const auto& s : segs) {
    if (!out.empty() && out.back().kind == s.kind && out.back().end_idx == s.start_idx) {
      out.back().end_idx = s.end_idx;
    } else {
      out.push_back(s);
    }
  }
  return out;
}

}  // namespace nbpower
