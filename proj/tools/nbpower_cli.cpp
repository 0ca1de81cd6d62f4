// nbpower: simulate, analyze and budget NB-IoT device energy.
//
// exit codes: 0 ok, 1 domain/IO error, 2 usage error

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "nbpower/nbpower.hpp"
#include "nbpower/report.hpp"

namespace fs = std::filesystem;
using namespace nbpower;
using nlohmann::ordered_json;

namespace {

constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

// Relative config paths fall back to $NBPOWER_CONFIG_DIR.
std::string resolve_config(const std::string& path) {
  if (path.empty() || fs::exists(path) || fs::path(path).is_absolute()) return path;
  if (const char* dir = std::getenv("NBPOWER_CONFIG_DIR")) {
    const auto p = fs::path(dir) / path;
    if (fs::exists(p)) return p.string();
  }
  return path;
}

PowerProfile profile_from(const std::string& name) {
  for (auto n : kBuiltinProfileNames)
    if (n == name) return builtin_profile(name);
  return io::load_profile(resolve_config(name));
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DomainError("cannot write '" + p.string() + "'");
  return out;
}

void write_json(const fs::path& p, const ordered_json& j) {
  auto out = open_out(p);
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string scenario, timers, profile = "bc95_telia", out = ".";
  std::optional<std::uint64_t> seed;
  double noise = 0.0, spike_rate = 0.0, spike_energy_mj = 15.0, rate = kDefaultSampleRateHz,
         voltage = kDefaultSupplyVoltage;
};

int cmd_simulate(const SimulateArgs& a) {
  TimerConfig timers;
  if (!a.timers.empty()) timers = io::load_timers(resolve_config(a.timers));
  auto [sc, t] = io::load_scenario(resolve_config(a.scenario), timers);
  if (a.seed) sc.seed = *a.seed;
  const auto vr = validate_timers(t);
  if (!vr.ok()) {
    for (const auto& v : vr.violations)
      std::cerr << "timer violation: " << v.field << " must be " << v.bound << " (got " << format_duration(v.actual)
                << ")\n";
    return kExitDomain;
  }
  const auto profile = profile_from(a.profile);
  const auto sched = build_schedule(sc, t, profile);

  SynthOptions o;
  o.noise_stddev_fraction = a.noise;
  o.at_spike_rate_per_min = a.spike_rate;
  o.at_spike_energy_mJ = a.spike_energy_mj;
  o.seed = sc.seed;

  const fs::path dir(a.out);
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "trace.csv");
    io::TraceCsvWriter w(out, a.rate, a.voltage);
    render(sched, profile, o, a.rate, a.voltage, [&](std::span<const double> c) { w.write(c); });
  }
  {
    auto out = open_out(dir / "truth.csv");
    io::write_truth_csv(out, ground_truth(sched, a.rate));
  }
  const auto spikes = plan_spikes(sched, o, a.rate, a.voltage).spikes;
  if (!spikes.empty()) {
    auto out = open_out(dir / "spikes.csv");
    io::write_truth_csv(out, spikes);
  }
  auto j = report::schedule_json(sched, profile.module_name);
  j["sample_rate_hz"] = a.rate;
  j["supply_voltage_v"] = a.voltage;
  j["noise_stddev_fraction"] = a.noise;
  j["at_spike_rate_per_min"] = a.spike_rate;
  write_json(dir / "schedule.json", j);
  return 0;
}

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
  std::vector<std::string> traces;
  std::string profile = "bc95_telia", timers, coverage = "good", columns, out, truth;
  double voltage = kDefaultSupplyVoltage, percentile = 0.95;
  std::optional<std::size_t> window, coarse_window;
  std::optional<double> min_phase_ms, spike_max_ms;
};

struct AnalyzeJob {
  fs::path trace, segments_out, summary_out;
  std::optional<fs::path> truth, spikes;
};

std::optional<fs::path> sidecar(const fs::path& trace, const std::string& name) {
  const auto stem_file = trace.parent_path() / (trace.stem().string() + "." + name);
  if (fs::exists(stem_file)) return stem_file;
  const auto plain = trace.parent_path() / name;
  if (fs::exists(plain)) return plain;
  return std::nullopt;
}

ordered_json analyze_one(const AnalyzeJob& job, const AnalyzeArgs& a, const PowerProfile& profile,
                         const TimerConfig& timers) {
  const auto cols = a.columns.empty() ? io::ColumnMap{} : io::parse_column_map(a.columns);

  // Pass 1: segmentation, streamed.
  std::ifstream in(job.trace);
  if (!in) throw DomainError("cannot open '" + job.trace.string() + "'");
  io::TraceCsvReader reader(in, cols, a.voltage, job.trace.string());
  const double rate0 = reader.provisional_rate() > 0 ? reader.provisional_rate() : kDefaultSampleRateHz;
  auto cfg = make_analyzer_config(profile, timers, io::parse_coverage(a.coverage), rate0, reader.voltage(),
                                  a.percentile);
  if (a.window) cfg.detector.window_w = *a.window;
  if (a.coarse_window) cfg.detector.coarse_median_window = *a.coarse_window;
  if (a.min_phase_ms) cfg.detector.min_phase_duration_ms = *a.min_phase_ms;
  if (a.spike_max_ms) cfg.detector.spike_max_duration_ms = *a.spike_max_ms;
  StreamingAnalyzer an(cfg);
  std::vector<double> chunk;
  while (true) {
    chunk.clear();
    if (!reader.read(chunk)) break;
    an.push(chunk);
  }
  const double rate = reader.rows() >= 2 ? reader.final_rate() : rate0;
  const double voltage = reader.voltage();
  auto segs = an.finish();

  // Pass 2: exact per-segment energy.
  SegmentEnergyAccumulator acc(segs);
  {
    std::ifstream in2(job.trace);
    io::TraceCsvReader r2(in2, cols, a.voltage, job.trace.string());
    while (true) {
      chunk.clear();
      if (!r2.read(chunk)) break;
      acc.push(chunk);
    }
  }
  const auto energies = acc.energies(voltage, rate);
  {
    auto out = open_out(job.segments_out);
    io::write_segments_csv(out, segs, energies);
  }

  ordered_json j;
  j["trace"] = job.trace.string();
  j["samples"] = reader.rows();
  j["sample_rate_hz"] = rate;
  j["supply_voltage_v"] = voltage;
  j["window_samples"] = cfg.detector.window_w;
  j["coarse_median_window_samples"] = cfg.detector.coarse_median_window;
  j["thresholds_a"] = {{"peak", cfg.thresholds.peak_a},
                       {"inactivity", cfg.thresholds.inactivity_a},
                       {"listen", cfg.thresholds.listen_a},
                       {"coarse", cfg.detector.coarse_threshold_a}};
  j["energy"] = report::summary_json(summarize_segments(segs, energies, rate));
  if (job.truth) {
    const auto truth = io::read_segments_csv(job.truth->string());
    std::vector<Segment> spikes;
    if (job.spikes) spikes = io::read_segments_csv(job.spikes->string());
    j["truth_file"] = job.truth->string();
    j["metrics"] = report::eval_json(evaluate(truth, segs, cfg.detector.window_w, spikes));
  }
  write_json(job.summary_out, j);
  return j;
}

int cmd_analyze(const AnalyzeArgs& a) {
  const auto profile = profile_from(a.profile);
  TimerConfig timers;
  if (!a.timers.empty()) timers = io::load_timers(resolve_config(a.timers));
  if (!a.truth.empty() && a.traces.size() != 1) throw DomainError("--truth needs exactly one trace");

  std::vector<AnalyzeJob> jobs;
  for (const auto& t : a.traces) {
    AnalyzeJob job;
    job.trace = t;
    const fs::path dir = a.out.empty() ? job.trace.parent_path() : fs::path(a.out);
    if (!dir.empty()) fs::create_directories(dir);
    const std::string prefix = a.traces.size() == 1 ? "" : job.trace.stem().string() + ".";
    job.segments_out = dir / (prefix + "segments.csv");
    job.summary_out = dir / (prefix + "summary.json");
    if (!a.truth.empty())
      job.truth = fs::path(a.truth);
    else
      job.truth = sidecar(job.trace, "truth.csv");
    job.spikes = sidecar(job.trace, "spikes.csv");
    jobs.push_back(job);
  }

  // One worker per file; nothing shared but read-only inputs.
  std::vector<std::future<ordered_json>> futs;
  for (const auto& job : jobs)
    futs.push_back(std::async(std::launch::async, analyze_one, std::cref(job), std::cref(a), std::cref(profile),
                              std::cref(timers)));
  int rc = 0;
  for (std::size_t k = 0; k < futs.size(); ++k) {
    try {
      const auto j = futs[k].get();
      std::cout << jobs[k].trace.string() << ": " << j["energy"]["kinds"].size() << " kinds, "
                << "total " << j["energy"]["total_J"].get<double>() << " J";
      if (j.contains("metrics"))
        std::cout << ", precision " << j["metrics"]["precision"].get<double>() << ", recall "
                  << j["metrics"]["recall"].get<double>();
      std::cout << '\n';
    } catch (const DomainError& e) {
      std::cerr << "error: " << e.what() << '\n';
      rc = kExitDomain;
    }
  }
  return rc;
}

// ---------------------------------------------------------------------------

struct LifetimeArgs {
  std::optional<double> e_con_j, p_psm_uw, battery_j, battery_wh;
  double e_edrx_j = 0.0;
  std::string interval, tau, out;
  bool table8 = false;
};

int cmd_lifetime(const LifetimeArgs& a, CLI::App& sub) {
  double battery = kDefaultBatteryJ;
  if (a.battery_j) battery = *a.battery_j;
  if (a.battery_wh) battery = wh_to_joules(*a.battery_wh);

  if (a.table8) {
    const auto cells = table8(battery);
    if (a.out.empty()) {
      report::write_table8_csv(std::cout, cells);
    } else {
      auto out = open_out(a.out);
      report::write_table8_csv(out, cells);
    }
    return 0;
  }
  if (!a.e_con_j || !a.p_psm_uw || (a.interval.empty() == a.tau.empty())) {
    std::cerr << "lifetime: --e-con-j, --p-psm-uw and exactly one of --interval/--tau are required\n"
              << sub.help();
    return kExitUsage;
  }
  LifetimeInputs in;
  in.battery_J = battery;
  in.e_con_J = *a.e_con_j;
  in.e_edrx_J = a.e_edrx_j;
  in.p_psm_uW = *a.p_psm_uw;
  LifetimeReport r;
  if (!a.tau.empty()) {
    in.t_tau_s = to_seconds(io::parse_duration(a.tau));
    r = lifetime_uplink_free(in);
  } else {
    in.t_ti_s = to_seconds(io::parse_duration(a.interval));
    r = lifetime(in);
  }
  const auto j = report::lifetime_json(r);
  if (a.out.empty())
    std::cout << j.dump(2) << '\n';
  else
    write_json(a.out, j);
  return 0;
}

// ---------------------------------------------------------------------------

struct RadioArgs {
  std::string rsrp, interference, thr1 = "-1000", thr2 = "-1150", p0 = "230";
  int attempts = 1, max_per_ecl = 5;
  bool at_threshold = false, json = false;
};

radio::EclPolicy policy_from(const RadioArgs& a) {
  radio::EclPolicy p;
  p.rsrp_threshold_ecl1 = io::parse_cbm(a.thr1);
  p.rsrp_threshold_ecl2 = io::parse_cbm(a.thr2);
  p.max_preamble_attempts_per_ecl = a.max_per_ecl;
  radio::check(p);
  return p;
}

int cmd_snr_map(const RadioArgs& a) {
  const Cbm rsrp = io::parse_cbm(a.rsrp);
  radio::NoiseModel nm;
  Cb v;
  if (!a.interference.empty()) {
    nm.interference = io::parse_cbm(a.interference);
    v = radio::sinr_from_rsrp(rsrp, nm);
  } else {
    v = radio::snr_from_rsrp(rsrp, nm);
  }
  if (a.json)
    std::cout << ordered_json{{"rsrp_cBm", rsrp.value}, {a.interference.empty() ? "snr_cB" : "sinr_cB", v.value}}.dump()
              << '\n';
  else
    std::cout << v.value << " cB\n";
  return 0;
}

int cmd_ecl(const RadioArgs& a) {
  const auto pol = policy_from(a);
  if (a.rsrp.empty() && !a.at_threshold) throw CLI::RequiredError("--rsrp or --rsrp-at-threshold");
  const Cbm rsrp = a.at_threshold ? pol.rsrp_threshold_ecl1 : io::parse_cbm(a.rsrp);
  const Ecl e = radio::select_ecl(rsrp, pol);
  if (a.json)
    std::cout << ordered_json{{"rsrp_cBm", rsrp.value},
                              {"ecl", std::string(to_string(e))},
                              {"target_mcl_dB", target_mcl_db(e)},
                              {"repetitions", radio::repetitions_for_ecl(e, pol)}}
                     .dump()
              << '\n';
  else
    std::cout << to_string(e) << '\n';
  return 0;
}

int cmd_rach(const RadioArgs& a) {
  const auto pol = policy_from(a);
  const Cbm rsrp = a.rsrp.empty() ? pol.rsrp_threshold_ecl1 : io::parse_cbm(a.rsrp);
  const auto seq = radio::rach_attempt_sequence(rsrp, pol, a.attempts, radio::TxPower{io::parse_cbm(a.p0)});
  if (a.json) {
    auto arr = ordered_json::array();
    for (const auto& s : seq) arr.push_back({{"ecl", std::string(to_string(s.ecl))}, {"power_cBm", s.power.cbm().value}});
    std::cout << arr.dump() << '\n';
  } else {
    for (std::size_t k = 0; k < seq.size(); ++k)
      std::cout << k + 1 << ' ' << to_string(seq[k].ecl) << ' ' << seq[k].power.cbm().value << " cBm\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nbpower: NB-IoT energy simulator and trace analyzer"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "render a scenario to trace.csv, truth.csv and schedule.json");
  s->add_option("--scenario", sim.scenario, "scenario file (key = value)")->required();
  s->add_option("--timers", sim.timers, "timer file (key = value)");
  s->add_option("--profile", sim.profile, "builtin profile name or profile file")->capture_default_str();
  s->add_option("--out", sim.out, "output directory")->capture_default_str();
  s->add_option("--seed", sim.seed, "override the scenario seed");
  s->add_option("--noise", sim.noise, "multiplicative noise stddev fraction")->capture_default_str();
  s->add_option("--spike-rate", sim.spike_rate, "AT metadata spikes per minute")->capture_default_str();
  s->add_option("--spike-energy-mj", sim.spike_energy_mj, "energy per spike")->capture_default_str();
  s->add_option("--rate", sim.rate, "sample rate [Hz]")->capture_default_str();
  s->add_option("--voltage", sim.voltage, "supply voltage [V]")->capture_default_str();

  AnalyzeArgs an;
  auto* a = app.add_subcommand("analyze", "segment traces into phases and integrate energy");
  a->add_option("traces", an.traces, "trace CSV files")->required();
  a->add_option("--profile", an.profile, "builtin profile name or profile file")->capture_default_str();
  a->add_option("--timers", an.timers, "timer file");
  a->add_option("--coverage", an.coverage, "good or bad")->check(CLI::IsMember({"good", "bad"}))->capture_default_str();
  a->add_option("--columns", an.columns, "column mapping, e.g. time=Time,current=Main current");
  a->add_option("--voltage", an.voltage, "supply voltage when the trace has no voltage column")->capture_default_str();
  a->add_option("--percentile", an.percentile, "threshold percentile")->capture_default_str();
  a->add_option("--window", an.window, "FSTS window W [samples]");
  a->add_option("--coarse-window", an.coarse_window, "moving-median window [samples]");
  a->add_option("--min-phase-ms", an.min_phase_ms, "shortest phase kept");
  a->add_option("--spike-max-ms", an.spike_max_ms, "longest run treated as a spike");
  a->add_option("--truth", an.truth, "ground-truth CSV (default: sidecar truth.csv)");
  a->add_option("--out", an.out, "output directory (default: next to the trace)");

  LifetimeArgs lt;
  auto* l = app.add_subcommand("lifetime", "battery lifetime from per-interval energy");
  l->add_option("--e-con-j", lt.e_con_j, "connected-state energy per event [J]");
  l->add_option("--e-edrx-j", lt.e_edrx_j, "eDRX energy per interval [J]")->capture_default_str();
  l->add_option("--p-psm-uw", lt.p_psm_uw, "PSM power [uW]");
  l->add_option("--interval", lt.interval, "transmission interval, e.g. 4h");
  l->add_option("--tau", lt.tau, "TAU period for an uplink-free device, e.g. 7d");
  auto* bj = l->add_option("--battery-j", lt.battery_j, "battery capacity [J] (default 18000)");
  l->add_option("--battery-wh", lt.battery_wh, "battery capacity [Wh]")->excludes(bj);
  l->add_flag("--reproduce-table8", lt.table8, "emit the published lifetime table as CSV");
  l->add_option("--out", lt.out, "output file (default stdout)");

  RadioArgs ra;
  auto* r = app.add_subcommand("radio", "link-budget helpers");
  r->require_subcommand(1);
  auto* snr = r->add_subcommand("snr-map", "SNR (or SINR with --interference) from RSRP");
  snr->add_option("--rsrp", ra.rsrp, "RSRP, e.g. -1000 or -100dBm")->required();
  snr->add_option("--interference", ra.interference, "total interference over 180 kHz");
  snr->add_flag("--json", ra.json);
  auto* ecl = r->add_subcommand("ecl", "coverage class from RSRP");
  ecl->add_option("--rsrp", ra.rsrp, "RSRP");
  ecl->add_flag("--rsrp-at-threshold", ra.at_threshold, "use the ECL1 threshold itself as RSRP");
  ecl->add_option("--thr1", ra.thr1, "ECL1 RSRP threshold")->capture_default_str();
  ecl->add_option("--thr2", ra.thr2, "ECL2 RSRP threshold")->capture_default_str();
  ecl->add_flag("--json", ra.json);
  auto* rach = r->add_subcommand("rach", "preamble power/ECL sequence");
  rach->add_option("--attempts", ra.attempts, "attempts until success")->required()->check(CLI::PositiveNumber);
  rach->add_option("--p0", ra.p0, "initial preamble power")->required();
  rach->add_option("--rsrp", ra.rsrp, "RSRP selecting the initial ECL (default: ECL0)");
  rach->add_option("--thr1", ra.thr1, "ECL1 RSRP threshold")->capture_default_str();
  rach->add_option("--thr2", ra.thr2, "ECL2 RSRP threshold")->capture_default_str();
  rach->add_option("--max-per-ecl", ra.max_per_ecl, "attempts per ECL before escalating")->capture_default_str();
  rach->add_flag("--json", ra.json);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (s->parsed()) return cmd_simulate(sim);
    if (a->parsed()) return cmd_analyze(an);
    if (l->parsed()) return cmd_lifetime(lt, *l);
    if (snr->parsed()) return cmd_snr_map(ra);
    if (ecl->parsed()) return cmd_ecl(ra);
    if (rach->parsed()) return cmd_rach(ra);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDomain;
  }
  return kExitUsage;
}
