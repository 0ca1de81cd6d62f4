#pragma once

// Energy over trace segments, the eDRX cycle model and battery lifetime.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nbpower/core.hpp"
#include "nbpower/profiles.hpp"

namespace nbpower {

// Sum of samples in fixed point (2^-80 A steps). Integer sums are exactly
// additive, so partition totals match whole-trace totals bit for bit.
struct ExactCharge {
  static constexpr int kFracBits = 80;
  __int128 q = 0;

  static __int128 quantize(double amps) { return static_cast<__int128>(std::round(std::ldexp(amps, kFracBits))); }

  void add(double amps) { q += quantize(amps); }
  void add(std::span<const double> xs) {
    for (double x : xs) add(x);
  }
  // Sum of samples, in ampere-samples.
  double ampere_samples() const { return static_cast<double>(std::ldexp(static_cast<long double>(q), -kFracBits)); }
  double joules(double voltage, double rate) const {
    return static_cast<double>(std::ldexp(static_cast<long double>(q), -kFracBits) * voltage / rate);
  }

  friend ExactCharge operator+(ExactCharge a, ExactCharge b) { return {a.q + b.q}; }
  ExactCharge& operator+=(ExactCharge b) {
    q += b.q;
    return *this;
  }
  friend bool operator==(ExactCharge, ExactCharge) = default;
};

inline void check_segment_bounds(const CurrentTrace& t, const Segment& s) {
  if (s.start_idx >= s.end_idx) throw DomainError("empty segment");
  if (s.end_idx > t.size()) throw DomainError("segment outside the trace");
}

inline ExactCharge integrate_charge(const CurrentTrace& t, const Segment& s) {
  check_segment_bounds(t, s);
  ExactCharge c;
  c.add(std::span<const double>(t.samples()).subspan(s.start_idx, s.length()));
  return c;
}

// Left-rectangle rule: sum(I_i) * V / rate.
inline double integrate_energy(const CurrentTrace& t, const Segment& s) {
  return integrate_charge(t, s).joules(t.supply_voltage_v(), t.sample_rate_hz());
}

inline double trace_energy(const CurrentTrace& t) {
  if (t.empty()) return 0.0;
  return integrate_energy(t, Segment{SegmentKind::Artifact, 0, t.size()});
}

// Per-segment charge for samples arriving in order; segments must be sorted
// and non-overlapping but need not tile the trace.
class SegmentEnergyAccumulator {
 public:
  explicit SegmentEnergyAccumulator(std::vector<Segment> segs) : segs_(std::move(segs)), charge_(segs_.size()) {
    for (std::size_t k = 0; k < segs_.size(); ++k) {
      if (segs_[k].start_idx >= segs_[k].end_idx) throw DomainError("empty segment");
      if (k > 0 && segs_[k].start_idx < segs_[k - 1].end_idx) throw DomainError("segments overlap or are unsorted");
    }
  }

  void push(double x) {
    while (k_ < segs_.size() && segs_[k_].end_idx <= i_) ++k_;
    if (k_ < segs_.size() && segs_[k_].start_idx <= i_) charge_[k_].add(x);
    ++i_;
  }
  void push(std::span<const double> xs) {
    for (double x : xs) push(x);
  }

  std::size_t samples_seen() const { return i_; }
  const std::vector<ExactCharge>& charges() const { return charge_; }

  std::vector<double> energies(double voltage, double rate) const {
    if (!segs_.empty() && segs_.back().end_idx > i_) throw DomainError("segment extends past the end of the trace");
    std::vector<double> e;
    e.reserve(charge_.size());
    for (const auto& c : charge_) e.push_back(c.joules(voltage, rate));
    return e;
  }

 private:
  std::vector<Segment> segs_;
  std::vector<ExactCharge> charge_;
  std::size_t k_ = 0, i_ = 0;
};

inline std::vector<double> segment_energies(const CurrentTrace& t, const std::vector<Segment>& segs) {
  SegmentEnergyAccumulator acc(segs);
  acc.push(t.samples());
  return acc.energies(t.supply_voltage_v(), t.sample_rate_hz());
}

// ---------------------------------------------------------------------------
// eDRX: E = (E_listen + P_sleep * t_sleep) * N_cycles

struct EdrxEnergyInputs {
  std::optional<double> e_listen_mJ;
  double p_sleep_uW = 0.0;
  double t_sleep_s = 0.0;
  std::int64_t n_cycles = 0;
  std::optional<double> t_listen_ms;
  std::optional<double> p_listen_mW;
};

inline double listen_energy_mJ(const EdrxEnergyInputs& in) {
  const bool from_power = in.t_listen_ms && in.p_listen_mW;
  if (!in.e_listen_mJ && !from_power) throw DomainError("need e_listen_mJ or both p_listen_mW and t_listen_ms");
  if (in.t_listen_ms && *in.t_listen_ms < 0.0) throw DomainError("t_listen_ms must be >= 0");
  if (in.p_listen_mW && *in.p_listen_mW < 0.0) throw DomainError("p_listen_mW must be >= 0");
  const double derived = from_power ? *in.p_listen_mW * *in.t_listen_ms * 1e-3 : 0.0;
  if (!in.e_listen_mJ) return derived;
  if (*in.e_listen_mJ < 0.0 || !std::isfinite(*in.e_listen_mJ)) throw DomainError("e_listen_mJ must be >= 0");
  if (from_power && std::abs(derived - *in.e_listen_mJ) > 1e-6 * std::max(1.0, *in.e_listen_mJ))
    throw DomainError("e_listen_mJ disagrees with p_listen_mW * t_listen_ms");
  return *in.e_listen_mJ;
}

inline double edrx_energy(const EdrxEnergyInputs& in) {
  if (in.p_sleep_uW < 0.0 || in.t_sleep_s < 0.0 || in.n_cycles < 0) throw DomainError("eDRX inputs must be >= 0");
  const double per_cycle = listen_energy_mJ(in) * 1e-3 + in.p_sleep_uW * 1e-6 * in.t_sleep_s;
  return per_cycle * static_cast<double>(in.n_cycles);
}

// ---------------------------------------------------------------------------
// Lifetime: T = E_battery / (E_con + E_eDRX + E_PSM) * T_ti

inline constexpr double kDefaultBatteryJ = 18000.0;  // 5 Wh
inline constexpr double kSecondsPerYear = 365.25 * 86400.0;
inline constexpr double kMaxTauS = 410.0 * 3600.0;

inline double wh_to_joules(double wh) { return wh * 3600.0; }

struct LifetimeInputs {
  double battery_J = kDefaultBatteryJ;
  double e_con_J = 0.0;
  double e_edrx_J = 0.0;
  double p_psm_uW = 0.0;
  double t_ti_s = 0.0;
  std::optional<double> t_tau_s;
  double t_connected_estimate_s = 0.0;  // subtracted from t_ti for PSM time
};

struct LifetimeReport {
  double lifetime_years = 0.0;
  double lifetime_s = 0.0;
  double connected_J = 0.0;
  double edrx_J = 0.0;
  double psm_J = 0.0;
  double denominator_J = 0.0;
  double t_ti_s = 0.0;
  double battery_J = 0.0;
  std::vector<std::string> assumptions;
};

inline LifetimeReport lifetime(const LifetimeInputs& in) {
  if (!(in.battery_J > 0.0) || !std::isfinite(in.battery_J)) throw DomainError("battery_J must be > 0");
  if (!(in.t_ti_s > 0.0) || !std::isfinite(in.t_ti_s)) throw DomainError("t_ti_s must be > 0");
  if (in.e_con_J < 0.0 || in.e_edrx_J < 0.0 || in.p_psm_uW < 0.0) throw DomainError("energies must be >= 0");
  if (in.t_connected_estimate_s < 0.0 || in.t_connected_estimate_s > in.t_ti_s)
    throw DomainError("t_connected_estimate_s must be in [0, t_ti_s]");
  LifetimeReport r;
  r.battery_J = in.battery_J;
  r.t_ti_s = in.t_ti_s;
  r.connected_J = in.e_con_J;
  r.edrx_J = in.e_edrx_J;
  r.psm_J = in.p_psm_uW * 1e-6 * (in.t_ti_s - in.t_connected_estimate_s);
  r.denominator_J = r.connected_J + r.edrx_J + r.psm_J;
  if (!(r.denominator_J > 0.0)) throw DomainError("zero energy per interval; lifetime is unbounded");
  r.lifetime_s = in.battery_J / r.denominator_J * in.t_ti_s;
  r.lifetime_years = r.lifetime_s / kSecondsPerYear;
  r.assumptions = {"no battery degradation", "fixed transmission interval", "year = 365.25 days",
                   in.t_connected_estimate_s > 0.0 ? "PSM time = interval minus connected estimate"
                                                   : "PSM power applied over the whole interval"};
  return r;
}

// Uplink-free device: only TAUs wake it, each costing e_con.
inline LifetimeReport lifetime_uplink_free(const LifetimeInputs& in) {
  if (!in.t_tau_s) throw DomainError("t_tau_s is required");
  if (!(*in.t_tau_s > 0.0)) throw DomainError("t_tau_s must be > 0");
  if (*in.t_tau_s > kMaxTauS) throw DomainError("t_tau_s exceeds the T3412 maximum of 410 h");
  LifetimeInputs x = in;
  x.t_ti_s = *in.t_tau_s;
  auto r = lifetime(x);
  r.assumptions.push_back("interval = TAU period; TAU costs one 20 B RAI-200 transmission");
  return r;
}

// ---------------------------------------------------------------------------

struct KindSummary {
  SegmentKind kind = SegmentKind::Artifact;
  std::size_t count = 0;
  double total_J = 0.0;
  double median_J = 0.0;
  double total_duration_s = 0.0;
  double median_duration_s = 0.0;
};

struct SegmentSummary {
  std::vector<KindSummary> rows;  // kAllSegmentKinds order, present kinds only
  double total_J = 0.0;           // every segment
  double phase_total_J = 0.0;     // Artifact rows excluded
  std::size_t artifacts = 0;
};

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  if (v.size() % 2) return v[mid];
  const double hi = v[mid];
  return 0.5 * (*std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)) + hi);
}

inline SegmentSummary summarize_segments(const std::vector<Segment>& segs, const std::vector<double>& energies_J,
                                         double rate) {
  if (segs.size() != energies_J.size()) throw DomainError("one energy per segment required");
  std::map<SegmentKind, std::pair<std::vector<double>, std::vector<double>>> acc;
  SegmentSummary s;
  for (std::size_t k = 0; k < segs.size(); ++k) {
    auto& [e, d] = acc[segs[k].kind];
    e.push_back(energies_J[k]);
    d.push_back(static_cast<double>(segs[k].length()) / rate);
  }
  for (auto kind : kAllSegmentKinds) {
    auto it = acc.find(kind);
    if (it == acc.end()) continue;
    const auto& [e, d] = it->second;
    KindSummary row{kind, e.size(), 0.0, median_of(e), 0.0, median_of(d)};
    for (double x : e) row.total_J += x;
    for (double x : d) row.total_duration_s += x;
    s.total_J += row.total_J;
    if (kind == SegmentKind::Artifact)
      s.artifacts = row.count;
    else
      s.phase_total_J += row.total_J;
    s.rows.push_back(row);
  }
  return s;
}

inline SegmentSummary summarize_segments(const CurrentTrace& t, const std::vector<Segment>& segs) {
  return summarize_segments(segs, segment_energies(t, segs), t.sample_rate_hz());
}

// ---------------------------------------------------------------------------
// Published lifetime table: 20 B echo, good coverage, eDRX and TAU ignored.

struct Table8Cell {
  Module module = Module::Bc95;
  Operator op = Operator::Telia;
  bool rai400 = false;
  int interval_h = 1;
  double e_con_J = 0.0;
  double computed_years = 0.0;
  double printed_years = 0.0;
  bool in_acceptance_set = false;
  bool reproduces() const { return std::abs(computed_years - printed_years) <= 0.1 + 1e-9; }
};

inline double table8_printed(Module m, Operator o, bool rai400, int hours_) {
  const int col = hours_ == 1 ? 0 : hours_ == 4 ? 1 : 2;
  // {default 1h, 4h, 24h, RAI-400 1h, 4h, 24h}
  static constexpr double bc95_telenor[6]{0.8, 3.2, 9.9, 6.1, 25.5, 45.4};
  static constexpr double bc95_telia[6]{2.4, 8.5, 13.0, 6.4, 30.1, 47.6};
  static constexpr double sara_telenor[6]{0.5, 1.9, 6.0, 6.0, 18.5, 44.1};
  static constexpr double sara_telia[6]{1.6, 5.9, 5.7, 5.9, 17.7, 43.3};
  const double* row = m == Module::Bc95 ? (o == Operator::Telenor ? bc95_telenor : bc95_telia)
                                        : (o == Operator::Telenor ? sara_telenor : sara_telia);
  return row[(rai400 ? 3 : 0) + col];
}

// Cells that follow from the lifetime formula: RAI-400 at 4 h and 24 h,
// default timers at 1 h and 4 h.
inline bool table8_accepted(bool rai400, int hours_) { return rai400 ? hours_ != 1 : hours_ != 24; }

inline std::vector<Table8Cell> table8(double battery_J = kDefaultBatteryJ) {
  std::vector<Table8Cell> cells;
  for (Module m : {Module::Bc95, Module::SaraN211}) {
    for (Operator o : {Operator::Telenor, Operator::Telia}) {
      for (bool rai400 : {false, true}) {
        for (int h : {1, 4, 24}) {
          Table8Cell c{m, o, rai400, h};
          c.e_con_J = rai400 ? measured::connected_rai_good_J(m, o, Rai::ReleaseAfterReply400)
                             : measured::connected_default_good_J(m, o);
          LifetimeInputs in;
          in.battery_J = battery_J;
          in.e_con_J = c.e_con_J;
          in.p_psm_uW = measured::psm_power_uW(m);
          in.t_ti_s = h * 3600.0;
          c.computed_years = lifetime(in).lifetime_years;
          c.printed_years = table8_printed(m, o, rai400, h);
          c.in_acceptance_set = table8_accepted(rai400, h);
          cells.push_back(c);
        }
      }
    }
  }
  return cells;
}

}  // namespace nbpower
