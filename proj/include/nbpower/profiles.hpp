#pragma once

// Power profiles: per-module current levels and phase durations used to
// render synthetic traces, plus the field-measured medians they are
// calibrated against.

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "nbpower/core.hpp"

namespace nbpower {

// ---------------------------------------------------------------------------
// Field-measured medians for two commercial modules on two operators.

enum class Module { SaraN211, Bc95 };
enum class Operator { Telenor, Telia };

inline std::string_view to_string(Module m) { return m == Module::SaraN211 ? "SARA-N211" : "BC95"; }
inline std::string_view to_string(Operator o) { return o == Operator::Telenor ? "Telenor" : "Telia"; }

namespace measured {

// Connected-state energy per event with default timers, good coverage [J].
inline constexpr double connected_default_good_J(Module m, Operator o) {
  if (m == Module::Bc95) return o == Operator::Telenor ? 2.39 : 0.82;
  return o == Operator::Telenor ? 4.17 : 1.27;
}

// Connected-state energy per event under poor coverage by ECL [J].
inline constexpr double connected_default_bad_J(Module m, Operator o, Ecl e) {
  constexpr double bc95_telenor[3]{2.71, 2.80, 4.04};
  constexpr double bc95_telia[3]{0.88, 1.03, 3.44};
  constexpr double sara_telenor[3]{4.15, 4.10, 5.50};
  constexpr double sara_telia[3]{1.28, 1.40, 3.77};
  const int i = index_of(e);
  if (m == Module::Bc95) return o == Operator::Telenor ? bc95_telenor[i] : bc95_telia[i];
  return o == Operator::Telenor ? sara_telenor[i] : sara_telia[i];
}

// Energy to send 20 bytes with release assistance, good coverage [J].
inline constexpr double connected_rai_good_J(Module m, Operator o, Rai r) {
  const bool r400 = r == Rai::ReleaseAfterReply400;
  if (m == Module::Bc95) {
    if (o == Operator::Telenor) return r400 ? 0.17 : 0.12;
    return r400 ? 0.12 : 0.11;
  }
  if (o == Operator::Telenor) return r400 ? 0.31 : 0.27;
  return r400 ? 0.33 : 0.31;
}

inline constexpr double psm_power_uW(Module m) { return m == Module::Bc95 ? 10.61 : 9.35; }
inline constexpr double edrx_sleep_power_uW(Module m) { return m == Module::Bc95 ? 10.36 : 10.01; }

struct ListenMedian {
  double energy_mJ;
  double duration_ms;
};

// eDRX listening phase per cycle.
inline constexpr ListenMedian edrx_listen(Module m, Operator o, Coverage c) {
  if (c == Coverage::Bad) {
    if (m == Module::Bc95) return o == Operator::Telenor ? ListenMedian{21.4, 470.2} : ListenMedian{24.6, 476.7};
    return o == Operator::Telenor ? ListenMedian{33.7, 536.5} : ListenMedian{39.1, 552.2};
  }
  if (m == Module::Bc95) return o == Operator::Telenor ? ListenMedian{6.4, 215.0} : ListenMedian{6.3, 215.2};
  return o == Operator::Telenor ? ListenMedian{10.3, 224.5} : ListenMedian{10.1, 222.8};
}

// SARA-N211 on Telenor while the listen-overrun firmware bug was frequent.
inline constexpr ListenMedian edrx_listen_buggy{20.0, 300.0};

// Median connected-state durations (time between two Idle states) for
// BC95 on Telenor, good coverage [s].
inline constexpr double connected_duration_rai200_20B_s = 3.13;
inline constexpr double connected_duration_rai400_20B_s = 3.23;
inline constexpr double connected_duration_rai400_512B_s = 4.06;

}  // namespace measured

// ---------------------------------------------------------------------------

struct ListenStats {
  double energy_mJ = 0.0;
  Micros duration{};
};

struct PowerProfile {
  std::string module_name;

  double psm_power_uW = 0.0;
  double edrx_sleep_power_uW = 0.0;
  ListenStats listen_good;
  ListenStats listen_bad;

  double sync_current_mA = 0.0;
  double txrx_current_mA = 0.0;  // payload plateau; control peaks run at twice this
  double reply_current_mA = 0.0;
  double paging_current_mA = 0.0;
  double cdrx_sleep_current_mA = 0.0;
  double release_current_mA = 0.0;
  double tau_current_mA = 0.0;

  Micros sync_duration{};
  Micros release_duration{};
  Micros control_peak{};
  Micros tau_duration{};
  Micros rach_retry{};
  // TxRx = (fixed + per_byte * size) * ecl multiplier; RAI-400 adds a reply
  // wait of (fixed + per_byte * size) * ecl multiplier.
  double txrx_fixed_us = 0.0;
  double txrx_per_byte_us = 0.0;
  double reply_wait_fixed_us = 0.0;
  double reply_wait_per_byte_us = 0.0;

  std::array<double, 3> ecl_multiplier{1.0, 1.0, 1.0};
  // Some networks keep the UE paging for the whole inactivity timer.
  bool continuous_paging_during_inactivity = false;

  const ListenStats& listen(Coverage c) const { return c == Coverage::Good ? listen_good : listen_bad; }

  // Aliases for the good-coverage listening phase.
  double edrx_listen_energy_mJ() const { return listen_good.energy_mJ; }
  double edrx_listen_duration_ms() const { return static_cast<double>(listen_good.duration.count()) / 1e3; }

  double listen_current_a(Coverage c, double voltage) const {
    const auto& l = listen(c);
    return l.energy_mJ * 1e-3 / (voltage * to_seconds(l.duration));
  }
  double psm_current_a(double voltage) const { return psm_power_uW * 1e-6 / voltage; }
  double edrx_sleep_current_a(double voltage) const { return edrx_sleep_power_uW * 1e-6 / voltage; }
};

// Returns a description of every violated invariant; empty when valid.
inline std::vector<std::string> profile_violations(const PowerProfile& p) {
  std::vector<std::string> v;
  auto positive = [&v](const char* name, double x) {
    if (!(x > 0.0) || !std::isfinite(x)) v.push_back(std::string(name) + " must be > 0");
  };
  positive("psm_power_uW", p.psm_power_uW);
  positive("edrx_sleep_power_uW", p.edrx_sleep_power_uW);
  positive("listen_good.energy_mJ", p.listen_good.energy_mJ);
  positive("listen_bad.energy_mJ", p.listen_bad.energy_mJ);
  positive("listen_good.duration", static_cast<double>(p.listen_good.duration.count()));
  positive("listen_bad.duration", static_cast<double>(p.listen_bad.duration.count()));
  positive("sync_current_mA", p.sync_current_mA);
  positive("txrx_current_mA", p.txrx_current_mA);
  positive("reply_current_mA", p.reply_current_mA);
  positive("paging_current_mA", p.paging_current_mA);
  positive("cdrx_sleep_current_mA", p.cdrx_sleep_current_mA);
  positive("release_current_mA", p.release_current_mA);
  positive("tau_current_mA", p.tau_current_mA);
  positive("sync_duration", static_cast<double>(p.sync_duration.count()));
  positive("release_duration", static_cast<double>(p.release_duration.count()));
  positive("control_peak", static_cast<double>(p.control_peak.count()));
  positive("tau_duration", static_cast<double>(p.tau_duration.count()));
  positive("txrx_fixed_us", p.txrx_fixed_us);
  if (p.txrx_per_byte_us < 0.0) v.push_back("txrx_per_byte_us must be >= 0");
  if (p.reply_wait_fixed_us < 0.0) v.push_back("reply_wait_fixed_us must be >= 0");
  if (p.reply_wait_per_byte_us < 0.0) v.push_back("reply_wait_per_byte_us must be >= 0");
  if (p.rach_retry.count() < 0) v.push_back("rach_retry must be >= 0");
  // cDRX sleep draws roughly 90% less than active paging.
  if (p.cdrx_sleep_current_mA > 0.15 * p.paging_current_mA)
    v.push_back("cdrx_sleep_current_mA must be <= 0.15 * paging_current_mA");
  for (std::size_t i = 0; i < 3; ++i) {
    if (!(p.ecl_multiplier[i] >= 1.0)) v.push_back("ecl multipliers must be >= 1");
    if (i > 0 && p.ecl_multiplier[i] < p.ecl_multiplier[i - 1]) v.push_back("ecl multipliers must be non-decreasing");
  }
  if (2.0 * static_cast<double>(p.control_peak.count()) >= p.txrx_fixed_us)
    v.push_back("two control peaks must fit inside the TxRx phase");
  if (2 * p.control_peak >= p.tau_duration) v.push_back("two control peaks must fit inside the TAU phase");
  return v;
}

inline void validate_profile(const PowerProfile& p) {
  const auto v = profile_violations(p);
  if (!v.empty()) {
    std::string msg = "invalid power profile '" + p.module_name + "':";
    for (const auto& s : v) msg += " " + s + ";";
    throw DomainError(msg);
  }
}

// On-time of a cDRX pattern that starts with an on-duration and repeats
// every DRX cycle until the inactivity timer expires.
inline Micros cdrx_on_time(Micros inactivity, Micros on_duration, Micros drx_cycle) {
  if (drx_cycle.count() <= 0) throw DomainError("drx_cycle must be positive");
  const auto full = inactivity.count() / drx_cycle.count();
  const auto rem = Micros{inactivity.count() % drx_cycle.count()};
  return Micros{full * on_duration.count()} + std::min(rem, on_duration);
}

// ---------------------------------------------------------------------------
// Calibration: solves the free currents so that synthesized events integrate
// to measured median energies.

struct CalibrationTargets {
  std::string module_name;
  double voltage = kDefaultSupplyVoltage;
  double psm_power_uW = 0.0;
  double edrx_sleep_power_uW = 0.0;
  ListenStats listen_good;
  ListenStats listen_bad;

  double energy_rai200_J = 0.0;  // 20 B, good coverage, ECL0
  double energy_rai400_J = 0.0;
  double energy_rai000_J = 0.0;
  bool continuous_paging_during_inactivity = false;
  TimerConfig timers{};

  // Chosen levels; the remaining currents are solved.
  double txrx_current_mA = 100.0;
  double release_current_mA = 1.5;
  double cdrx_sleep_ratio = 0.1;
  Micros sync_duration = ms(1650);
  Micros release_duration = ms(1280);
  Micros control_peak = ms(20);
  Micros tau_duration = ms(2000);
  Micros rach_retry = ms(100);
  double txrx_per_byte_us = 100.0;
  std::array<double, 3> ecl_multiplier{1.0, 1.15, 1.6};
};

inline PowerProfile calibrate(const CalibrationTargets& t) {
  using measured::connected_duration_rai200_20B_s;
  using measured::connected_duration_rai400_20B_s;
  using measured::connected_duration_rai400_512B_s;

  PowerProfile p;
  p.module_name = t.module_name;
  p.psm_power_uW = t.psm_power_uW;
  p.edrx_sleep_power_uW = t.edrx_sleep_power_uW;
  p.listen_good = t.listen_good;
  p.listen_bad = t.listen_bad;
  p.txrx_current_mA = t.txrx_current_mA;
  p.release_current_mA = t.release_current_mA;
  p.sync_duration = t.sync_duration;
  p.release_duration = t.release_duration;
  p.control_peak = t.control_peak;
  p.tau_duration = t.tau_duration;
  p.rach_retry = t.rach_retry;
  p.txrx_per_byte_us = t.txrx_per_byte_us;
  p.ecl_multiplier = t.ecl_multiplier;
  p.continuous_paging_during_inactivity = t.continuous_paging_during_inactivity;

  // Durations: the RAI-200 20 B event lasts the measured median; RAI-400's
  // reply wait is affine through the 20 B and 512 B medians.
  const double txrx_20_us =
      connected_duration_rai200_20B_s * 1e6 - static_cast<double>((t.sync_duration + t.release_duration).count());
  p.txrx_fixed_us = txrx_20_us - 20.0 * t.txrx_per_byte_us;
  const double reply_20_us = (connected_duration_rai400_20B_s - connected_duration_rai200_20B_s) * 1e6;
  const double base_512_us = static_cast<double>((t.sync_duration + t.release_duration).count()) + p.txrx_fixed_us +
                             512.0 * t.txrx_per_byte_us;
  const double reply_512_us = connected_duration_rai400_512B_s * 1e6 - base_512_us;
  p.reply_wait_per_byte_us = (reply_512_us - reply_20_us) / (512.0 - 20.0);
  p.reply_wait_fixed_us = reply_20_us - 20.0 * p.reply_wait_per_byte_us;

  const double v = t.voltage;
  const double peak_s = to_seconds(t.control_peak);
  // Charge [mC] of the rendered TxRx phase: plateau at I plus two peaks at 2I.
  const double txrx_charge_mC = t.txrx_current_mA * (txrx_20_us * 1e-6 + 2.0 * peak_s);
  const double release_charge_mC = t.release_current_mA * to_seconds(t.release_duration);
  const double rai200_charge_mC = t.energy_rai200_J / v * 1e3;
  p.sync_current_mA = (rai200_charge_mC - txrx_charge_mC - release_charge_mC) / to_seconds(t.sync_duration);

  p.reply_current_mA = (t.energy_rai400_J - t.energy_rai200_J) / v * 1e3 / (reply_20_us * 1e-6);

  const double inactivity_charge_mC = (t.energy_rai000_J - t.energy_rai200_J) / v * 1e3;
  const Micros inactivity = t.timers.inactivity_timer;
  if (inactivity.count() <= 0) throw DomainError("calibration needs a positive inactivity timer");
  if (t.continuous_paging_during_inactivity) {
    p.paging_current_mA = inactivity_charge_mC / to_seconds(inactivity);
  } else {
    const Micros on = cdrx_on_time(inactivity, t.timers.on_duration_timer, t.timers.drx_cycle);
    const Micros off = inactivity - on;
    p.paging_current_mA = inactivity_charge_mC / (to_seconds(on) + t.cdrx_sleep_ratio * to_seconds(off));
  }
  p.cdrx_sleep_current_mA = t.cdrx_sleep_ratio * p.paging_current_mA;

  // A TAU costs as much as a 20 B RAI-200 transmission.
  const double tau_peaks_mC = 2.0 * t.txrx_current_mA * 2.0 * peak_s;
  p.tau_current_mA = (rai200_charge_mC - tau_peaks_mC) / to_seconds(t.tau_duration - 2 * t.control_peak);

  validate_profile(p);
  return p;
}

inline ListenStats to_listen_stats(measured::ListenMedian m) {
  return ListenStats{m.energy_mJ, from_seconds(m.duration_ms * 1e-3)};
}

inline CalibrationTargets calibration_targets(Module m, Operator o) {
  CalibrationTargets t;
  t.module_name = std::string(to_string(m)) + "/" + std::string(to_string(o));
  t.psm_power_uW = measured::psm_power_uW(m);
  t.edrx_sleep_power_uW = measured::edrx_sleep_power_uW(m);
  t.listen_good = to_listen_stats(measured::edrx_listen(m, o, Coverage::Good));
  t.listen_bad = to_listen_stats(measured::edrx_listen(m, o, Coverage::Bad));
  t.energy_rai200_J = measured::connected_rai_good_J(m, o, Rai::Release200);
  t.energy_rai400_J = measured::connected_rai_good_J(m, o, Rai::ReleaseAfterReply400);
  t.energy_rai000_J = measured::connected_default_good_J(m, o);
  // Telenor keeps paging continuously during the inactivity timer.
  t.continuous_paging_during_inactivity = o == Operator::Telenor;
  return t;
}

inline PowerProfile builtin_profile(Module m, Operator o) { return calibrate(calibration_targets(m, o)); }

// The default profile: BC95 on Telia.
inline PowerProfile default_profile() { return builtin_profile(Module::Bc95, Operator::Telia); }

inline PowerProfile builtin_profile(std::string_view name) {
  if (name == "bc95_telia") return builtin_profile(Module::Bc95, Operator::Telia);
  if (name == "bc95_telenor") return builtin_profile(Module::Bc95, Operator::Telenor);
  if (name == "sara_n211_telia") return builtin_profile(Module::SaraN211, Operator::Telia);
  if (name == "sara_n211_telenor") return builtin_profile(Module::SaraN211, Operator::Telenor);
  throw DomainError("unknown builtin profile '" + std::string(name) + "'");
}

inline constexpr std::array<std::string_view, 4> kBuiltinProfileNames{"bc95_telia", "bc95_telenor", "sara_n211_telia",
                                                                       "sara_n211_telenor"};

}  // namespace nbpower
