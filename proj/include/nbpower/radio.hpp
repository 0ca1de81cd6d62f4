#pragma once

// Link-budget helpers: noise floor, SNR/SINR from RSRP, coverage-class
// selection and the random-access power ramp.

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "nbpower/core.hpp"

namespace nbpower::radio {

// Subcarriers per NB-IoT resource block; RSRP is measured on one 15 kHz RE.
inline constexpr int kSubcarriers = 12;

struct NoiseModel {
  Cbm thermal_density_per_hz{-1740};  // cBm/Hz
  Cb receiver_nf{70};
  double bandwidth_hz = 15000.0;
  std::optional<Cbm> interference;  // total interference over the 180 kHz channel
};

inline void check(const NoiseModel& nm) {
  if (!(nm.bandwidth_hz > 0.0) || !std::isfinite(nm.bandwidth_hz)) throw DomainError("noise bandwidth must be > 0");
}

// Unrounded noise floor in cBm over an arbitrary bandwidth.
inline double noise_floor_exact_cbm(const NoiseModel& nm, double bandwidth_hz) {
  if (!(bandwidth_hz > 0.0)) throw DomainError("noise bandwidth must be > 0");
  return static_cast<double>(nm.thermal_density_per_hz.value) + 100.0 * std::log10(bandwidth_hz) +
         static_cast<double>(nm.receiver_nf.value);
}

inline Cbm noise_floor_cbm(const NoiseModel& nm) {
  check(nm);
  return Cbm{round_centi(noise_floor_exact_cbm(nm, nm.bandwidth_hz))};
}

// Interference-free SNR on one resource element.
inline Cb snr_from_rsrp(Cbm rsrp, const NoiseModel& nm) {
  if (nm.interference) throw DomainError("snr_from_rsrp assumes no interference; use sinr_from_rsrp");
  return rsrp - noise_floor_cbm(nm);
}

// SINR over the whole channel: 12 * RSRP / (I_tot + N_tot), computed in the
// linear domain with the noise integrated over 12 subcarriers.
inline Cb sinr_from_rsrp(Cbm rsrp, const NoiseModel& nm) {
  check(nm);
  const double signal_mw = kSubcarriers * cbm_to_mw(static_cast<double>(rsrp.value));
  const double noise_mw = cbm_to_mw(noise_floor_exact_cbm(nm, kSubcarriers * nm.bandwidth_hz));
  const double interference_mw = nm.interference ? cbm_to_mw(static_cast<double>(nm.interference->value)) : 0.0;
  return Cb{round_centi(100.0 * std::log10(signal_mw / (interference_mw + noise_mw)))};
}

// ---------------------------------------------------------------------------

inline constexpr int kMaxRepetitions = 2048;

// RSRP thresholds are operator-specific and unpublished; the defaults are
// estimates read off measured RSRP/ECL distributions.
struct EclPolicy {
  Cbm rsrp_threshold_ecl1{-1000};
  Cbm rsrp_threshold_ecl2{-1150};
  int max_preamble_attempts_per_ecl = 5;
  int max_repetitions = kMaxRepetitions;
  std::array<int, 3> repetitions{1, 8, 128};  // ECL1 value is a free default
};

inline void check(const EclPolicy& p) {
  if (!(p.rsrp_threshold_ecl2 < p.rsrp_threshold_ecl1))
    throw DomainError("ECL2 RSRP threshold must be below the ECL1 threshold");
  if (p.max_preamble_attempts_per_ecl < 1) throw DomainError("max_preamble_attempts_per_ecl must be >= 1");
  if (p.max_repetitions < 1 || p.max_repetitions > kMaxRepetitions)
    throw DomainError("max_repetitions must be in [1, 2048]");
  for (std::size_t i = 0; i < 3; ++i) {
    if (p.repetitions[i] < 1 || p.repetitions[i] > p.max_repetitions)
      throw DomainError("repetitions must be in [1, max_repetitions]");
    if (i > 0 && p.repetitions[i] < p.repetitions[i - 1]) throw DomainError("repetitions must be non-decreasing in ECL");
  }
}

// A threshold value itself maps to the better class.
inline Ecl select_ecl(Cbm rsrp, const EclPolicy& p) {
  check(p);
  if (rsrp >= p.rsrp_threshold_ecl1) return Ecl::Ecl0;
  if (rsrp >= p.rsrp_threshold_ecl2) return Ecl::Ecl1;
  return Ecl::Ecl2;
}

inline int repetitions_for_ecl(Ecl e, const EclPolicy& p) {
  check(p);
  return p.repetitions[static_cast<std::size_t>(index_of(e))];
}

// ---------------------------------------------------------------------------

class TxPower {
 public:
  static constexpr std::int64_t kMinCbm = -290;
  static constexpr std::int64_t kMaxCbm = 230;
  static constexpr std::int64_t kStepCbm = 10;

  TxPower() = default;
  explicit TxPower(Cbm p) : p_(p) {
    if (p.value < kMinCbm || p.value > kMaxCbm) throw DomainError("TxPower outside [-290, 230] cBm");
    if (p.value % kStepCbm != 0) throw DomainError("TxPower must be a multiple of 10 cBm");
  }
  static TxPower max() { return TxPower{Cbm{kMaxCbm}}; }

  Cbm cbm() const { return p_; }
  friend bool operator==(TxPower, TxPower) = default;

 private:
  Cbm p_{kMaxCbm};
};

struct RachAttempt {
  Ecl ecl = Ecl::Ecl0;
  TxPower power;
  friend bool operator==(const RachAttempt&, const RachAttempt&) = default;
};

inline constexpr std::int64_t kRachPowerStepCbm = 20;

// Preamble attempts up to and including the successful one. The first attempt
// uses the RSRP-selected class at the open-loop power `p0`; each failure
// raises the power by 2 dB (clamped at the maximum), and after
// `max_preamble_attempts_per_ecl` failures in one class the UE moves up one
// class (saturating at ECL2) at maximum power.
inline std::vector<RachAttempt> rach_attempt_sequence(Cbm initial_rsrp, const EclPolicy& policy,
                                                      int attempts_until_success, TxPower p0) {
  check(policy);
  if (attempts_until_success < 1) throw DomainError("attempts_until_success must be >= 1");
  std::vector<RachAttempt> seq;
  seq.reserve(static_cast<std::size_t>(attempts_until_success));
  Ecl ecl = select_ecl(initial_rsrp, policy);
  std::int64_t power = p0.cbm().value;
  int in_class = 0;
  for (int a = 0; a < attempts_until_success; ++a) {
    if (in_class == policy.max_preamble_attempts_per_ecl) {
      if (ecl != Ecl::Ecl2) ecl = static_cast<Ecl>(index_of(ecl) + 1);
      power = TxPower::kMaxCbm;
      in_class = 0;
    } else if (in_class > 0) {
      power = std::min(power + kRachPowerStepCbm, TxPower::kMaxCbm);
    }
    seq.push_back({ecl, TxPower{Cbm{power}}});
    ++in_class;
  }
  return seq;
}

}  // namespace nbpower::radio
