#pragma once

// File formats: trace CSV (streamed both ways), segment CSVs, and the
// key=value config files for scenarios, timers and profiles.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nbpower/core.hpp"
#include "nbpower/profiles.hpp"
#include "nbpower/statemachine.hpp"

namespace nbpower::io {

inline std::string_view trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto k = s.find(sep, pos);
    out.push_back(s.substr(pos, k == std::string_view::npos ? std::string_view::npos : k - pos));
    if (k == std::string_view::npos) break;
    pos = k + 1;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline double require_double(std::string_view s, std::string_view what) {
  auto v = parse_double(s);
  if (!v || !std::isfinite(*v)) throw DomainError("invalid number for " + std::string(what) + ": '" + std::string(s) + "'");
  return *v;
}

inline std::int64_t require_int(std::string_view s, std::string_view what) {
  s = trim(s);
  std::int64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || s.empty())
    throw DomainError("invalid integer for " + std::string(what) + ": '" + std::string(s) + "'");
  return v;
}

inline bool require_bool(std::string_view s, std::string_view what) {
  s = trim(s);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw DomainError("invalid boolean for " + std::string(what) + ": '" + std::string(s) + "'");
}

// "100ms", "2.56 s", "3min", "24h", "7d", "500us". A unit is required.
inline Micros parse_duration(std::string_view s) {
  s = trim(s);
  std::size_t k = s.size();
  while (k > 0 && std::isalpha(static_cast<unsigned char>(s[k - 1]))) --k;
  const auto unit = s.substr(k);
  const auto num = parse_double(s.substr(0, k));
  double scale = 0.0;
  if (unit == "us") scale = 1.0;
  else if (unit == "ms") scale = 1e3;
  else if (unit == "s") scale = 1e6;
  else if (unit == "min") scale = 60e6;
  else if (unit == "h") scale = 3600e6;
  else if (unit == "d") scale = 86400e6;
  if (!num || scale == 0.0 || !std::isfinite(*num))
    throw DomainError("invalid duration '" + std::string(s) + "' (expected a number with us/ms/s/min/h/d)");
  return Micros{std::llround(*num * scale)};
}

// "-100 dBm" / "-1000 cBm" / "-1000" (cBm). Same for dB/cB.
inline std::int64_t parse_centi(std::string_view s, std::string_view deci_unit, std::string_view centi_unit) {
  s = trim(s);
  std::size_t k = s.size();
  while (k > 0 && std::isalpha(static_cast<unsigned char>(s[k - 1]))) --k;
  const auto unit = s.substr(k);
  const auto num = parse_double(s.substr(0, k));
  if (!num || !std::isfinite(*num)) throw DomainError("invalid value '" + std::string(s) + "'");
  if (unit.empty() || unit == centi_unit) {
    if (*num != std::round(*num)) throw DomainError("'" + std::string(s) + "' must be an integer number of centi-units");
    return static_cast<std::int64_t>(*num);
  }
  if (unit == deci_unit) return round_centi(*num * 10.0);
  throw DomainError("unknown unit '" + std::string(unit) + "' in '" + std::string(s) + "'");
}

inline Cbm parse_cbm(std::string_view s) { return Cbm{parse_centi(s, "dBm", "cBm")}; }
inline Cb parse_cb(std::string_view s) { return Cb{parse_centi(s, "dB", "cB")}; }

// ---------------------------------------------------------------------------
// key = value files; '#' starts a comment; keys may contain spaces.

struct KvEntry {
  std::string value;
  int line = 0;
  bool used = false;
};

class KvFile {
 public:
  static KvFile parse(std::istream& in, std::string name = "<input>") {
    KvFile f;
    f.name_ = std::move(name);
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
      ++no;
      std::string_view s(line);
      if (auto h = s.find('#'); h != std::string_view::npos) s = s.substr(0, h);
      s = trim(s);
      if (s.empty()) continue;
      const auto eq = s.find('=');
      if (eq == std::string_view::npos) throw DomainError(f.name_ + ":" + std::to_string(no) + ": expected key = value");
      const std::string key(trim(s.substr(0, eq)));
      if (key.empty()) throw DomainError(f.name_ + ":" + std::to_string(no) + ": empty key");
      if (f.entries_.count(key)) throw DomainError(f.name_ + ":" + std::to_string(no) + ": duplicate key '" + key + "'");
      f.entries_[key] = KvEntry{std::string(trim(s.substr(eq + 1))), no};
    }
    return f;
  }

  static KvFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open '" + path + "'");
    return parse(in, path);
  }

  const std::string* get(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    it->second.used = true;
    return &it->second.value;
  }

  // Wraps a conversion so errors carry file and line.
  template <class F>
  void with(const std::string& key, F&& f) {
    if (const auto* v = get(key)) {
      try {
        f(*v);
      } catch (const DomainError& e) {
        throw DomainError(name_ + ":" + std::to_string(entries_[key].line) + ": " + key + ": " + e.what());
      }
    }
  }

  void reject_unused() const {
    for (const auto& [k, e] : entries_)
      if (!e.used) throw DomainError(name_ + ":" + std::to_string(e.line) + ": unknown key '" + k + "'");
  }

  const std::string& name() const { return name_; }

 private:
  std::string name_;
  std::map<std::string, KvEntry> entries_;
};

// Timer keys use the standard timer names verbatim.
inline void apply_timers(KvFile& f, TimerConfig& t) {
  f.with("OnDurationTimer", [&](const std::string& v) { t.on_duration_timer = parse_duration(v); });
  f.with("DRXcycle", [&](const std::string& v) { t.drx_cycle = parse_duration(v); });
  f.with("PTW", [&](const std::string& v) { t.ptw = parse_duration(v); });
  f.with("eDRXcycle", [&](const std::string& v) { t.edrx_cycle = parse_duration(v); });
  f.with("T3324", [&](const std::string& v) { t.t3324_active = parse_duration(v); });
  f.with("T3412", [&](const std::string& v) { t.t3412_tau = parse_duration(v); });
  f.with("Inactivity timer", [&](const std::string& v) { t.inactivity_timer = parse_duration(v); });
}

inline Rai parse_rai(std::string_view s) {
  s = trim(s);
  if (s == "000" || s == "0" || s == "none") return Rai::None000;
  if (s == "200") return Rai::Release200;
  if (s == "400") return Rai::ReleaseAfterReply400;
  throw DomainError("rai must be 000, 200 or 400");
}

inline Ecl parse_ecl(std::string_view s) {
  s = trim(s);
  if (s == "0" || s == "ECL0") return Ecl::Ecl0;
  if (s == "1" || s == "ECL1") return Ecl::Ecl1;
  if (s == "2" || s == "ECL2") return Ecl::Ecl2;
  throw DomainError("ecl must be 0, 1 or 2");
}

inline Coverage parse_coverage(std::string_view s) {
  s = trim(s);
  if (s == "good") return Coverage::Good;
  if (s == "bad") return Coverage::Bad;
  throw DomainError("coverage must be good or bad");
}

inline IdleMode parse_idle_mode(std::string_view s) {
  s = trim(s);
  if (s == "psm") return IdleMode::PsmOnly;
  if (s == "edrx_psm") return IdleMode::EdrxThenPsm;
  throw DomainError("idle_mode must be psm or edrx_psm");
}

inline MisconfigReplay parse_misconfig(std::string_view s) {
  s = trim(s);
  for (auto m : {MisconfigReplay::None, MisconfigReplay::IgnoreRai200EveryOther, MisconfigReplay::NoCdrxDuringInactivity})
    if (to_string(m) == s) return m;
  throw DomainError("misconfig_replay must be none, ignore_rai200_every_other or no_cdrx_during_inactivity");
}

inline void apply_scenario(KvFile& f, Scenario& sc) {
  f.with("rai", [&](const std::string& v) { sc.rai = parse_rai(v); });
  f.with("packet_size_bytes", [&](const std::string& v) { sc.packet_size_bytes = static_cast<int>(require_int(v, "packet_size_bytes")); });
  f.with("allow_any_packet_size", [&](const std::string& v) { sc.allow_any_packet_size = require_bool(v, "allow_any_packet_size"); });
  f.with("transmission_interval", [&](const std::string& v) { sc.transmission_interval = parse_duration(v); });
  f.with("coverage", [&](const std::string& v) { sc.coverage = parse_coverage(v); });
  f.with("ecl", [&](const std::string& v) { sc.ecl = parse_ecl(v); });
  f.with("idle_mode", [&](const std::string& v) { sc.idle_mode = parse_idle_mode(v); });
  f.with("horizon", [&](const std::string& v) { sc.horizon = parse_duration(v); });
  f.with("misconfig_replay", [&](const std::string& v) { sc.misconfig_replay = parse_misconfig(v); });
  f.with("seed", [&](const std::string& v) { sc.seed = static_cast<std::uint64_t>(require_int(v, "seed")); });
  f.with("sync_jitter", [&](const std::string& v) { sc.sync_jitter = parse_duration(v); });
  f.with("rach_failure_prob", [&](const std::string& v) { sc.rach_failure_prob = require_double(v, "rach_failure_prob"); });
  f.with("max_rach_attempts", [&](const std::string& v) { sc.max_rach_attempts = static_cast<int>(require_int(v, "max_rach_attempts")); });
}

// Scenario file; may also carry timer keys.
inline std::pair<Scenario, TimerConfig> load_scenario(const std::string& path, TimerConfig timers = {}) {
  auto f = KvFile::load(path);
  Scenario sc;
  apply_scenario(f, sc);
  apply_timers(f, timers);
  f.reject_unused();
  validate_scenario(sc);
  return {sc, timers};
}

inline TimerConfig load_timers(const std::string& path, TimerConfig t = {}) {
  auto f = KvFile::load(path);
  apply_timers(f, t);
  f.reject_unused();
  return t;
}

// Profile file: `base = <builtin name>` plus any field overrides.
inline PowerProfile load_profile(const std::string& path) {
  auto f = KvFile::load(path);
  PowerProfile p = default_profile();
  f.with("base", [&](const std::string& v) { p = builtin_profile(v); });
  f.with("module_name", [&](const std::string& v) { p.module_name = v; });
  auto num = [&](const char* key, double& dst) { f.with(key, [&](const std::string& v) { dst = require_double(v, key); }); };
  auto dur = [&](const char* key, Micros& dst) { f.with(key, [&](const std::string& v) { dst = parse_duration(v); }); };
  num("psm_power_uW", p.psm_power_uW);
  num("edrx_sleep_power_uW", p.edrx_sleep_power_uW);
  num("listen_good_energy_mJ", p.listen_good.energy_mJ);
  dur("listen_good_duration", p.listen_good.duration);
  num("listen_bad_energy_mJ", p.listen_bad.energy_mJ);
  dur("listen_bad_duration", p.listen_bad.duration);
  num("sync_current_mA", p.sync_current_mA);
  num("txrx_current_mA", p.txrx_current_mA);
  num("reply_current_mA", p.reply_current_mA);
  num("paging_current_mA", p.paging_current_mA);
  num("cdrx_sleep_current_mA", p.cdrx_sleep_current_mA);
  num("release_current_mA", p.release_current_mA);
  num("tau_current_mA", p.tau_current_mA);
  dur("sync_duration", p.sync_duration);
  dur("release_duration", p.release_duration);
  dur("control_peak", p.control_peak);
  dur("tau_duration", p.tau_duration);
  dur("rach_retry", p.rach_retry);
  num("txrx_fixed_us", p.txrx_fixed_us);
  num("txrx_per_byte_us", p.txrx_per_byte_us);
  num("reply_wait_fixed_us", p.reply_wait_fixed_us);
  num("reply_wait_per_byte_us", p.reply_wait_per_byte_us);
  num("ecl_multiplier_0", p.ecl_multiplier[0]);
  num("ecl_multiplier_1", p.ecl_multiplier[1]);
  num("ecl_multiplier_2", p.ecl_multiplier[2]);
  f.with("continuous_paging_during_inactivity",
         [&](const std::string& v) { p.continuous_paging_during_inactivity = require_bool(v, "continuous_paging"); });
  f.reject_unused();
  validate_profile(p);
  return p;
}

// A builtin name or a path to a profile file.
inline PowerProfile resolve_profile(const std::string& name) {
  for (auto n : kBuiltinProfileNames)
    if (n == name) return builtin_profile(name);
  return load_profile(name);
}

// ---------------------------------------------------------------------------
// Trace CSV: timestamp_s,current_a,voltage_v

inline void format_trace_row(std::string& out, double t, double i, double v) {
  char buf[96];
  const int n = std::snprintf(buf, sizeof buf, "%.6f,%.16e,%.6g\n", t, i, v);
  out.append(buf, static_cast<std::size_t>(n));
}

class TraceCsvWriter {
 public:
  TraceCsvWriter(std::ostream& out, double rate, double voltage, double t0 = 0.0)
      : out_(out), rate_(rate), v_(voltage), t0_(t0) {
    CurrentTrace::validate_rate_voltage(rate, voltage);
    out_ << "timestamp_s,current_a,voltage_v\n";
  }
  void write(std::span<const double> xs) {
    buf_.clear();
    for (double x : xs) format_trace_row(buf_, t0_ + static_cast<double>(i_++) / rate_, x, v_);
    out_.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out_) throw DomainError("write failed");
  }
  std::size_t rows() const { return i_; }

 private:
  std::ostream& out_;
  double rate_, v_, t0_;
  std::size_t i_ = 0;
  std::string buf_;
};

inline void write_trace_csv(std::ostream& out, const CurrentTrace& t) {
  TraceCsvWriter w(out, t.sample_rate_hz(), t.supply_voltage_v(), t.t0());
  w.write(t.samples());
}

struct ColumnMap {
  std::string time = "timestamp_s";
  std::string current = "current_a";
  std::string voltage = "voltage_v";
};

// "time=Time (s),current=Main current (A)"
inline ColumnMap parse_column_map(std::string_view s) {
  ColumnMap m;
  for (auto item : split(s, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw DomainError("column map entries must be role=name");
    const auto role = trim(item.substr(0, eq));
    std::string name(trim(item.substr(eq + 1)));
    if (role == "time") m.time = name;
    else if (role == "current") m.current = name;
    else if (role == "voltage") m.voltage = name;
    else throw DomainError("unknown column role '" + std::string(role) + "'");
  }
  return m;
}

inline constexpr double kRateTolerance = 0.01;

// Pull-based reader. The rate is fixed provisionally from the first two rows
// and every later step must agree within 1%; the final rate is (n-1)/span.
class TraceCsvReader {
 public:
  TraceCsvReader(std::istream& in, ColumnMap cols = {}, double default_voltage = kDefaultSupplyVoltage,
                 std::string name = "<trace>")
      : in_(in), name_(std::move(name)), voltage_(default_voltage) {
    std::string header;
    if (!std::getline(in_, header)) throw DomainError(name_ + ": empty trace file");
    line_ = 1;
    if (!header.empty() && header.back() == '\r') header.pop_back();
    const auto names = split(header, ',');
    for (std::size_t k = 0; k < names.size(); ++k) {
      const auto n = trim(names[k]);
      if (n == cols.time) time_col_ = static_cast<int>(k);
      if (n == cols.current) cur_col_ = static_cast<int>(k);
      if (n == cols.voltage) volt_col_ = static_cast<int>(k);
    }
    ncols_ = names.size();
    if (time_col_ < 0 || cur_col_ < 0)
      throw DomainError(name_ + ":1: header must contain '" + cols.time + "' and '" + cols.current + "'");
    // Prime two rows so the rate is known before the first chunk.
    for (int k = 0; k < 2; ++k) {
      if (auto r = read_row()) primed_.push_back(*r);
    }
    if (primed_.empty()) throw DomainError(name_ + ": trace has no samples");
  }

  // Appends up to max samples; returns the number appended (0 at EOF).
  std::size_t read(std::vector<double>& out, std::size_t max = 1 << 16) {
    std::size_t got = 0;
    while (got < max && primed_pos_ < primed_.size()) {
      out.push_back(primed_[primed_pos_++]);
      ++got;
    }
    while (got < max) {
      auto r = read_row();
      if (!r) break;
      out.push_back(*r);
      ++got;
    }
    return got;
  }

  double provisional_rate() const {
    if (!step_) return 0.0;
    return 1.0 / *step_;
  }
  // Valid after read() returned 0.
  double final_rate() const {
    if (n_ < 2) throw DomainError(name_ + ": need at least two samples to infer the sample rate");
    const double r = static_cast<double>(n_ - 1) / (t_last_ - t_first_);
    const double snapped = std::round(r);
    return std::abs(r - snapped) <= 1e-3 * r ? snapped : r;
  }
  double voltage() const { return voltage_; }
  double t0() const { return t_first_; }
  std::size_t rows() const { return n_; }

 private:
  std::optional<double> read_row() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (trim(line).empty()) continue;
      return parse(line);
    }
    return std::nullopt;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw DomainError(name_ + ":" + std::to_string(line_) + ": " + msg);
  }

  double parse(std::string_view line) {
    const auto f = split(line, ',');
    if (f.size() != ncols_) fail("expected " + std::to_string(ncols_) + " fields, got " + std::to_string(f.size()));
    const auto t = parse_double(f[static_cast<std::size_t>(time_col_)]);
    const auto x = parse_double(f[static_cast<std::size_t>(cur_col_)]);
    if (!t || !std::isfinite(*t)) fail("bad timestamp");
    if (!x || !std::isfinite(*x) || *x < 0.0) fail("current must be a finite non-negative number");
    if (volt_col_ >= 0) {
      const auto v = parse_double(f[static_cast<std::size_t>(volt_col_)]);
      if (!v || !(*v > 0.0)) fail("bad voltage");
      if (n_ == 0)
        voltage_ = *v;
      else if (std::abs(*v - voltage_) > 1e-9 * voltage_)
        fail("supply voltage must be constant over the trace");
    }
    if (n_ == 0) {
      t_first_ = *t;
    } else {
      const double dt = *t - t_last_;
      if (!step_) {
        if (!(dt > 0.0)) fail("timestamps must increase");
        step_ = dt;
      } else if (std::abs(dt - *step_) > kRateTolerance * *step_) {
        fail("non-uniform sampling (step differs from the first step by more than 1%)");
      }
    }
    t_last_ = *t;
    ++n_;
    return *x;
  }

  std::istream& in_;
  std::string name_;
  double voltage_;
  int time_col_ = -1, cur_col_ = -1, volt_col_ = -1;
  std::size_t ncols_ = 0;
  std::size_t line_ = 0, n_ = 0;
  double t_first_ = 0.0, t_last_ = 0.0;
  std::optional<double> step_;
  std::vector<double> primed_;
  std::size_t primed_pos_ = 0;
};

inline CurrentTrace read_trace_csv(std::istream& in, ColumnMap cols = {}, double default_voltage = kDefaultSupplyVoltage,
                                   std::string name = "<trace>") {
  TraceCsvReader r(in, std::move(cols), default_voltage, std::move(name));
  std::vector<double> xs;
  while (r.read(xs)) {
  }
  const double rate = xs.size() >= 2 ? r.final_rate() : kDefaultSampleRateHz;
  return CurrentTrace(rate, r.voltage(), std::move(xs), r.t0());
}

inline CurrentTrace read_trace_csv(const std::string& path, ColumnMap cols = {},
                                   double default_voltage = kDefaultSupplyVoltage) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open '" + path + "'");
  return read_trace_csv(in, std::move(cols), default_voltage, path);
}

// ---------------------------------------------------------------------------
// Segment CSVs

inline void write_truth_csv(std::ostream& out, const std::vector<Segment>& segs) {
  out << "kind,start_idx,end_idx\n";
  for (const auto& s : segs) out << to_string(s.kind) << ',' << s.start_idx << ',' << s.end_idx << '\n';
}

inline void write_segments_csv(std::ostream& out, const std::vector<Segment>& segs, const std::vector<double>& energy) {
  if (segs.size() != energy.size()) throw DomainError("one energy per segment required");
  out << "kind,start_idx,end_idx,energy_j\n";
  char buf[64];
  for (std::size_t k = 0; k < segs.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.9e", energy[k]);
    out << to_string(segs[k].kind) << ',' << segs[k].start_idx << ',' << segs[k].end_idx << ',' << buf << '\n';
  }
}

// Reads kind,start_idx,end_idx[,...] rows.
inline std::vector<Segment> read_segments_csv(std::istream& in, SegmentSource src = SegmentSource::GroundTruth,
                                              const std::string& name = "<segments>") {
  std::string line;
  if (!std::getline(in, line)) throw DomainError(name + ": empty file");
  std::vector<Segment> out;
  int no = 1;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    try {
      if (f.size() < 3) throw DomainError("expected kind,start_idx,end_idx");
      const auto a = require_int(f[1], "start_idx"), b = require_int(f[2], "end_idx");
      if (a < 0 || b <= a) throw DomainError("need 0 <= start_idx < end_idx");
      out.push_back({parse_segment_kind(trim(f[0])), static_cast<std::size_t>(a), static_cast<std::size_t>(b), src});
    } catch (const DomainError& e) {
      throw DomainError(name + ":" + std::to_string(no) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<Segment> read_segments_csv(const std::string& path, SegmentSource src = SegmentSource::GroundTruth) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open '" + path + "'");
  return read_segments_csv(in, src, path);
}

}  // namespace nbpower::io
