#pragma once

// JSON and CSV report emission.

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "nbpower/core.hpp"
#include "nbpower/energy.hpp"
#include "nbpower/segment.hpp"
#include "nbpower/statemachine.hpp"

namespace nbpower::report {

using nlohmann::ordered_json;

inline ordered_json timers_json(const TimerConfig& t) {
  auto us = [](Micros d) { return d.count(); };
  return {{"OnDurationTimer_us", us(t.on_duration_timer)}, {"DRXcycle_us", us(t.drx_cycle)},
          {"PTW_us", us(t.ptw)},                           {"eDRXcycle_us", us(t.edrx_cycle)},
          {"T3324_us", us(t.t3324_active)},                {"T3412_us", us(t.t3412_tau)},
          {"Inactivity timer_us", us(t.inactivity_timer)}};
}

inline ordered_json scenario_json(const Scenario& s) {
  return {{"rai", std::string(to_string(s.rai))},
          {"packet_size_bytes", s.packet_size_bytes},
          {"transmission_interval_us", s.transmission_interval.count()},
          {"coverage", std::string(to_string(s.coverage))},
          {"ecl", std::string(to_string(s.ecl))},
          {"idle_mode", std::string(to_string(s.idle_mode))},
          {"horizon_us", s.horizon.count()},
          {"misconfig_replay", std::string(to_string(s.misconfig_replay))},
          {"seed", s.seed},
          {"sync_jitter_us", s.sync_jitter.count()},
          {"rach_failure_prob", s.rach_failure_prob}};
}

inline ordered_json schedule_json(const PhaseSchedule& s, const std::string& profile_name) {
  ordered_json j;
  j["profile"] = profile_name;
  j["scenario"] = scenario_json(s.scenario);
  j["timers"] = timers_json(s.timers);
  j["connected_duration_s"] = to_seconds(s.connected_duration);
  j["n_events"] = s.events.size();
  j["n_edrx_cycles"] = s.n_edrx_cycles;
  j["n_tau"] = s.n_tau;
  j["total_duration_us"] = s.total_duration().count();
  auto& ev = j["events"] = ordered_json::array();
  for (const auto& e : s.events)
    ev.push_back({{"start_us", e.start.count()}, {"connected_us", e.connected.count()},
                  {"rach_attempts", e.rach_attempts}, {"inactivity", e.inactivity}});
  auto& ph = j["phases"] = ordered_json::array();
  for (const auto& p : s.phases) {
    ordered_json o{{"kind", std::string(to_string(p.kind))}, {"duration_us", p.duration.count()}};
    if (p.reply_wait.count()) o["reply_wait_us"] = p.reply_wait.count();
    if (p.continuous_paging) o["continuous_paging"] = true;
    ph.push_back(std::move(o));
  }
  return j;
}

inline ordered_json lifetime_json(const LifetimeReport& r) {
  return {{"lifetime_years", r.lifetime_years},
          {"lifetime_s", r.lifetime_s},
          {"battery_J", r.battery_J},
          {"t_ti_s", r.t_ti_s},
          {"per_interval", {{"connected_J", r.connected_J}, {"edrx_J", r.edrx_J}, {"psm_J", r.psm_J},
                            {"total_J", r.denominator_J}}},
          {"assumptions", r.assumptions}};
}

inline ordered_json summary_json(const SegmentSummary& s) {
  ordered_json j;
  j["total_J"] = s.total_J;
  j["phase_total_J"] = s.phase_total_J;
  j["artifacts"] = s.artifacts;
  auto& rows = j["kinds"] = ordered_json::array();
  for (const auto& r : s.rows)
    rows.push_back({{"kind", std::string(to_string(r.kind))},
                    {"count", r.count},
                    {"total_J", r.total_J},
                    {"median_J", r.median_J},
                    {"total_duration_s", r.total_duration_s},
                    {"median_duration_s", r.median_duration_s},
                    {"in_phase_stats", r.kind != SegmentKind::Artifact}});
  return j;
}

inline ordered_json eval_json(const EvalReport& r) {
  ordered_json j{{"window_samples", r.window},   {"truth_active", r.n_truth},
                 {"detected_active", r.n_detected}, {"matched", r.n_matched},
                 {"precision", r.precision},    {"recall", r.recall},
                 {"max_start_error_samples", r.max_start_error},
                 {"max_end_error_samples", r.max_end_error},
                 {"mean_boundary_error_samples", r.mean_boundary_error},
                 {"spikes_total", r.spikes_total},
                 {"spikes_as_artifact", r.spikes_as_artifact}};
  auto& pk = j["per_kind"] = ordered_json::object();
  for (const auto& [k, c] : r.per_kind)
    pk[std::string(to_string(k))] = {{"truth", c.truth}, {"detected", c.detected}, {"matched", c.matched}};
  return j;
}

// Mirrors the published table: one row per module/operator, default timers
// then RAI-400, each at 1 h, 4 h, 24 h.
inline void write_table8_csv(std::ostream& out, const std::vector<Table8Cell>& cells) {
  out << "module,operator,default_1h,default_4h,default_24h,rai400_1h,rai400_4h,rai400_24h\n";
  char buf[32];
  for (Module m : {Module::Bc95, Module::SaraN211}) {
    for (Operator o : {Operator::Telenor, Operator::Telia}) {
      out << to_string(m) << ',' << to_string(o);
      for (bool rai : {false, true}) {
        for (int h : {1, 4, 24}) {
          for (const auto& c : cells) {
            if (c.module == m && c.op == o && c.rai400 == rai && c.interval_h == h) {
              std::snprintf(buf, sizeof buf, "%.1f", c.computed_years);
              out << ',' << buf;
            }
          }
        }
      }
      out << '\n';
    }
  }
}

}  // namespace nbpower::report
