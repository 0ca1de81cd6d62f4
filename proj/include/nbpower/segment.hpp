#pragma once

// Phase recovery from raw current traces. Edges come from a smoothed series
// FSTS_i = min(max T[i-W..i], max T[i..i+W]) crossing a percentile
// threshold; a centered moving median first splits Connected from Idle.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "nbpower/core.hpp"
#include "nbpower/profiles.hpp"

namespace nbpower {

using Series = std::vector<double>;
using Run = std::pair<std::size_t, std::size_t>;  // [start, end)

// ---------------------------------------------------------------------------
// Batch smoothing operators

inline Series moving_max_forward(std::span<const double> t, std::size_t w) {
  if (t.empty()) throw DomainError("moving_max_forward: empty series");
  if (w < 1) throw DomainError("moving_max_forward: window must be >= 1");
  const std::size_t n = t.size();
  Series out(n);
  std::deque<std::size_t> dq;  // indices with decreasing values
  for (std::size_t k = n; k-- > 0;) {
    while (!dq.empty() && t[dq.back()] <= t[k]) dq.pop_back();
    dq.push_back(k);
    while (dq.front() > k + w) dq.pop_front();
    out[k] = t[dq.front()];
  }
  return out;
}

inline Series moving_max_backward(std::span<const double> t, std::size_t w) {
  if (t.empty()) throw DomainError("moving_max_backward: empty series");
  if (w < 1) throw DomainError("moving_max_backward: window must be >= 1");
  Series out(t.size());
  std::deque<std::size_t> dq;
  for (std::size_t k = 0; k < t.size(); ++k) {
    while (!dq.empty() && t[dq.back()] <= t[k]) dq.pop_back();
    dq.push_back(k);
    while (dq.front() + w < k) dq.pop_front();
    out[k] = t[dq.front()];
  }
  return out;
}

inline Series fsts(std::span<const double> mmf, std::span<const double> mmb) {
  if (mmf.size() != mmb.size()) throw DomainError("fsts: length mismatch");
  Series out(mmf.size());
  for (std::size_t i = 0; i < mmf.size(); ++i) out[i] = std::min(mmf[i], mmb[i]);
  return out;
}

inline Series fsts(std::span<const double> t, std::size_t w) {
  return fsts(moving_max_forward(t, w), moving_max_backward(t, w));
}

// Nearest-rank percentile: the ceil(p*n)-th smallest sample.
inline double threshold_from_percentile(std::span<const double> ref, double p) {
  if (ref.empty()) throw DomainError("threshold_from_percentile: empty reference");
  if (!(p > 0.0 && p < 1.0)) throw DomainError("percentile must be in (0, 1)");
  const auto n = ref.size();
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, n);
  Series v(ref.begin(), ref.end());
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(rank - 1), v.end());
  return v[rank - 1];
}

// Maximal runs of x >= thr.
inline std::vector<Run> runs_at_or_above(std::span<const double> x, double thr, std::size_t offset = 0) {
  std::vector<Run> runs;
  std::size_t i = 0;
  while (i < x.size()) {
    if (x[i] >= thr) {
      std::size_t j = i;
      while (j < x.size() && x[j] >= thr) ++j;
      runs.emplace_back(offset + i, offset + j);
      i = j;
    } else {
      ++i;
    }
  }
  return runs;
}

// ---------------------------------------------------------------------------
// Streaming pieces. Each keeps O(W) state so traces of any length can be
// fed chunk by chunk.

// max of the last w+1 pushed values.
class SlidingMax {
 public:
  explicit SlidingMax(std::size_t w = 1) : w_(w) {}
  double push(double x) {
    while (!dq_.empty() && dq_.back().second <= x) dq_.pop_back();
    dq_.emplace_back(i_, x);
    while (dq_.front().first + w_ < i_) dq_.pop_front();
    ++i_;
    return dq_.front().second;
  }
  void reset() {
    dq_.clear();
    i_ = 0;
  }

 private:
  std::size_t w_;
  std::size_t i_ = 0;
  std::deque<std::pair<std::size_t, double>> dq_;
};

// With M_j = max T[j-w..j]: MMB_i = M_i and MMF_i = M_{i+w}, so one sliding
// max plus a w-sample delay line gives FSTS. The tail is closed with suffix
// maxima in finish().
class StreamingFsts {
 public:
  explicit StreamingFsts(std::size_t w = 1) : w_(w), max_(w) {
    if (w < 1) throw DomainError("FSTS window must be >= 1");
  }

  // fn(index, sample, fsts) is called in index order.
  template <class Fn>
  void push(double x, Fn&& fn) {
    const double m = max_.push(x);
    pending_.emplace_back(x, m);
    if (pending_.size() > w_) {
      const auto [xi, mi] = pending_.front();
      pending_.pop_front();
      fn(out_++, xi, std::min(mi, m));
    }
  }

  template <class Fn>
  void finish(Fn&& fn) {
    Series suffix(pending_.size());
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t k = pending_.size(); k-- > 0;) suffix[k] = m = std::max(m, pending_[k].first);
    for (std::size_t k = 0; k < pending_.size(); ++k) fn(out_++, pending_[k].first, std::min(pending_[k].second, suffix[k]));
    pending_.clear();
  }

  void reset() {
    max_.reset();
    pending_.clear();
    out_ = 0;
  }

 private:
  std::size_t w_;
  SlidingMax max_;
  std::deque<std::pair<double, double>> pending_;  // (T_i, M_i) not yet emitted
  std::size_t out_ = 0;
};

class RunTracker {
 public:
  explicit RunTracker(double thr = 0.0) : thr_(thr) {}
  void push(std::size_t i, double f) {
    if (f >= thr_) {
      if (!in_) start_ = i;
      in_ = true;
    } else if (in_) {
      runs_.emplace_back(start_, i);
      in_ = false;
    }
  }
  void finish(std::size_t end) {
    if (in_) runs_.emplace_back(start_, end);
    in_ = false;
  }
  const std::vector<Run>& runs() const { return runs_; }
  void reset() {
    runs_.clear();
    in_ = false;
  }

 private:
  double thr_;
  bool in_ = false;
  std::size_t start_ = 0;
  std::vector<Run> runs_;
};

// Centered lower median over [i-h, i+h] (clipped at the trace ends),
// compared against a threshold. The median is >= thr exactly when at most
// (m-1)/2 of the m window samples are below thr, so a running count is
// enough. Output for sample i is available once sample i+h has arrived.
class CoarseStage {
 public:
  CoarseStage(double thr = 0.0, std::size_t half = 0) : thr_(thr), h_(half) {}

  // fn(index, sample, high)
  template <class Fn>
  void push(double x, Fn&& fn) {
    win_.push_back(x);
    below_ += x < thr_;
    ++hi_;
    while (next_ + h_ < hi_) emit(fn);
  }

  template <class Fn>
  void finish(Fn&& fn) {
    while (next_ < hi_) emit(fn);
  }

  std::size_t pushed() const { return hi_; }

 private:
  template <class Fn>
  void emit(Fn& fn) {
    while (lo_ + h_ < next_) {
      below_ -= win_.front() < thr_;
      win_.pop_front();
      ++lo_;
    }
    const std::size_t m = hi_ - lo_;
    fn(next_, win_[next_ - lo_], below_ <= (m - 1) / 2);
    ++next_;
  }

  double thr_;
  std::size_t h_;
  std::deque<double> win_;
  std::size_t lo_ = 0, hi_ = 0, next_ = 0, below_ = 0;
};

// ---------------------------------------------------------------------------
// Configuration

struct DetectorConfig {
  std::size_t window_w = 1;
  double threshold_percentile = 0.95;
  std::size_t coarse_median_window = 1;
  double min_phase_duration_ms = 50.0;
  double spike_max_duration_ms = 20.0;
  std::optional<double> threshold_a;  // overrides the percentile
  std::optional<Run> calibration_window;  // reference samples for the percentile
  double coarse_threshold_a = 0.0;
};

inline void validate_detector_config(const DetectorConfig& c) {
  if (!(c.threshold_percentile > 0.0 && c.threshold_percentile < 1.0))
    throw DomainError("threshold_percentile must be in (0, 1)");
  if (c.window_w < 1) throw DomainError("window_w must be >= 1");
  if (c.coarse_median_window < 1) throw DomainError("coarse_median_window must be >= 1");
  if (!(c.spike_max_duration_ms >= 0.0)) throw DomainError("spike_max_duration_ms must be >= 0");
  if (!(c.spike_max_duration_ms < c.min_phase_duration_ms))
    throw DomainError("spike_max_duration_ms must be < min_phase_duration_ms");
  if (c.calibration_window && c.calibration_window->first >= c.calibration_window->second)
    throw DomainError("calibration_window must be non-empty");
}

inline std::size_t ms_to_samples(double ms_value, double rate) {
  return static_cast<std::size_t>(std::llround(ms_value * 1e-3 * rate));
}

inline double detection_threshold(const CurrentTrace& trace, const DetectorConfig& c) {
  if (c.threshold_a) return *c.threshold_a;
  std::span<const double> ref(trace.samples());
  if (c.calibration_window) {
    const auto [a, b] = *c.calibration_window;
    if (b > trace.size()) throw DomainError("calibration_window outside the trace");
    ref = ref.subspan(a, b - a);
  }
  return threshold_from_percentile(ref, c.threshold_percentile);
}

// One segment per maximal run of FSTS >= threshold.
inline std::vector<Segment> detect_phases(const CurrentTrace& trace, const DetectorConfig& c,
                                          SegmentKind label = SegmentKind::EdrxListen) {
  validate_detector_config(c);
  if (trace.size() < c.window_w) throw DomainError("trace shorter than the detector window");
  const double thr = detection_threshold(trace, c);
  std::vector<Segment> out;
  for (auto [a, b] : runs_at_or_above(fsts(trace.samples(), c.window_w), thr))
    out.push_back({label, a, b, SegmentSource::Detected});
  return out;
}

enum class UeState { Idle, Connected };

inline std::string_view to_string(UeState s) { return s == UeState::Idle ? "Idle" : "Connected"; }

struct StateSpan {
  UeState state = UeState::Idle;
  std::size_t start_idx = 0;
  std::size_t end_idx = 0;
  friend bool operator==(const StateSpan&, const StateSpan&) = default;
};

inline std::vector<StateSpan> coarse_states(const CurrentTrace& trace, const DetectorConfig& c) {
  validate_detector_config(c);
  if (trace.size() < c.coarse_median_window) throw DomainError("trace shorter than the median window");
  std::vector<StateSpan> out;
  CoarseStage stage(c.coarse_threshold_a, c.coarse_median_window / 2);
  auto on = [&](std::size_t i, double, bool high) {
    const auto st = high ? UeState::Connected : UeState::Idle;
    if (!out.empty() && out.back().state == st)
      out.back().end_idx = i + 1;
    else
      out.push_back({st, i, i + 1});
  };
  for (double x : trace.samples()) stage.push(x, on);
  stage.finish(on);
  return out;
}

// Spikes (< spike_max) become Artifact. Segments in [spike_max, min_phase)
// merge into a touching same-kind neighbour, else get absorbed by a touching
// neighbour (preceding first); isolated ones are dropped.
inline std::vector<Segment> filter_artifacts(std::vector<Segment> segs, const DetectorConfig& c, double rate) {
  validate_detector_config(c);
  const std::size_t spike_max = ms_to_samples(c.spike_max_duration_ms, rate);
  const std::size_t min_phase = ms_to_samples(c.min_phase_duration_ms, rate);
  std::vector<Segment> out;
  out.reserve(segs.size());
  for (std::size_t k = 0; k < segs.size(); ++k) {
    Segment s = segs[k];
    if (s.kind == SegmentKind::Artifact || s.length() >= min_phase) {
      out.push_back(s);
      continue;
    }
    if (s.length() < spike_max) {
      s.kind = SegmentKind::Artifact;
      out.push_back(s);
      continue;
    }
    Segment* prev = (!out.empty() && out.back().end_idx == s.start_idx) ? &out.back() : nullptr;
    Segment* next = (k + 1 < segs.size() && segs[k + 1].start_idx == s.end_idx) ? &segs[k + 1] : nullptr;
    if (prev && prev->kind == s.kind) {
      prev->end_idx = s.end_idx;
    } else if (next && next->kind == s.kind) {
      next->start_idx = s.start_idx;
    } else if (prev) {
      prev->end_idx = s.end_idx;
    } else if (next) {
      next->start_idx = s.start_idx;
    } else {
      out.push_back(s);  // nothing to fold into
    }
  }
  return out;
}

// Splits a tiling so that every overlay segment replaces what it covers.
inline std::vector<Segment> overlay(const std::vector<Segment>& base, const std::vector<Segment>& top) {
  std::vector<Segment> out;
  std::size_t t = 0;
  for (const auto& b : base) {
    while (t < top.size() && top[t].end_idx <= b.start_idx) ++t;
    std::size_t pos = b.start_idx;
    for (std::size_t k = t; k < top.size() && top[k].start_idx < b.end_idx; ++k) {
      const std::size_t cs = std::max(top[k].start_idx, b.start_idx), ce = std::min(top[k].end_idx, b.end_idx);
      if (pos < cs) out.push_back({b.kind, pos, cs, b.source});
      if (!out.empty() && out.back().kind == top[k].kind && out.back().end_idx == cs)
        out.back().end_idx = ce;
      else
        out.push_back({top[k].kind, cs, ce, top[k].source});
      pos = ce;
    }
    if (pos < b.end_idx) out.push_back({b.kind, pos, b.end_idx, b.source});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Full analyzer: coarse split, then per-segment FSTS at the three phase
// thresholds, then labeling.

struct PhaseThresholds {
  double peak_a = 0.0;        // control-signaling peaks
  double inactivity_a = 0.0;  // cDRX sleep floor
  double listen_a = 0.0;      // eDRX listening
};

struct AnalyzerConfig {
  double sample_rate_hz = kDefaultSampleRateHz;
  DetectorConfig detector;
  PhaseThresholds thresholds;
  std::optional<std::size_t> drx_cycle_samples;
};

inline constexpr double kDefaultCoarseWindowS = 1.5;
inline constexpr double kDefaultWindowListenFactor = 1.5;

// Thresholds are percentiles of rendered typical phases of the profile;
// W is 1.5 listening durations.
inline AnalyzerConfig make_analyzer_config(const PowerProfile& p, const TimerConfig& t, Coverage cov, double rate,
                                           double v, double percentile = 0.95) {
  validate_profile(p);
  CurrentTrace::validate_rate_voltage(rate, v);
  auto typical = [&](double level_a, Micros d) {
    Series s(std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(to_seconds(d) * rate))), level_a);
    return threshold_from_percentile(s, percentile);
  };
  AnalyzerConfig c;
  c.sample_rate_hz = rate;
  c.thresholds.listen_a = typical(p.listen_current_a(cov, v), p.listen(cov).duration);
  c.thresholds.peak_a = typical(2.0 * p.txrx_current_mA * 1e-3, p.control_peak);
  c.thresholds.inactivity_a = typical(p.cdrx_sleep_current_mA * 1e-3, t.drx_cycle - t.on_duration_timer);

  const double idle_ceiling = std::max(p.psm_current_a(v), p.edrx_sleep_current_a(v));
  const double connected_floor =
      1e-3 * std::min({p.sync_current_mA, p.txrx_current_mA, p.reply_current_mA, p.paging_current_mA,
                       p.cdrx_sleep_current_mA, p.release_current_mA, p.tau_current_mA});
  c.detector.coarse_threshold_a = std::sqrt(idle_ceiling * connected_floor);
  c.detector.threshold_percentile = percentile;
  c.detector.window_w = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(kDefaultWindowListenFactor * to_seconds(p.listen(cov).duration) * rate)));
  c.detector.coarse_median_window =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(kDefaultCoarseWindowS * rate)));
  c.drx_cycle_samples = static_cast<std::size_t>(std::llround(to_seconds(t.drx_cycle) * rate));
  return c;
}

inline void validate_analyzer_config(const AnalyzerConfig& c) {
  validate_detector_config(c.detector);
  CurrentTrace::validate_rate_voltage(c.sample_rate_hz, 1.0);
}

// Connected segment [a, b): TxRx spans the first to last control peak;
// inactivity continues while the cDRX floor holds; the rest is release.
inline std::vector<Segment> label_connected(std::size_t a, std::size_t b, const std::vector<Run>& peaks,
                                            const std::vector<Run>& inactive, const AnalyzerConfig& c) {
  std::vector<Segment> out;
  auto add = [&](SegmentKind k, std::size_t s, std::size_t e) {
    if (s < e) out.push_back({k, s, e, SegmentSource::Detected});
  };
  if (peaks.empty()) {
    add(SegmentKind::Sync, a, b);
    return out;
  }
  const std::size_t txs = peaks.front().first, txe = peaks.back().second;
  const std::size_t min_phase = ms_to_samples(c.detector.min_phase_duration_ms, c.sample_rate_hz);
  if (txs - a < min_phase && b - txe < min_phase) {
    add(SegmentKind::TauUpdate, a, b);
    return out;
  }
  std::size_t ie = txe;
  for (const auto& r : inactive) {
    if (r.first <= txe - 1 && txe - 1 < r.second) {
      ie = std::min(std::max(r.second, txe), b);
      break;
    }
  }
  // A sliver past the last peak is the peak's own noisy tail.
  const std::size_t tx_end = ie - txe < min_phase ? ie : txe;
  add(SegmentKind::Sync, a, txs);
  add(SegmentKind::TxRx, txs, tx_end);
  add(SegmentKind::InactivityCdrx, tx_end, ie);
  add(SegmentKind::Release, ie, b);
  return out;
}

// Idle segment [a, b): listens are runs at the listen threshold; the gap
// before each listen is eDRX sleep, the tail after the last listen is eDRX
// sleep for one DRX cycle and deep sleep after that.
inline std::vector<Segment> label_idle(std::size_t a, std::size_t b, const std::vector<Run>& listen_runs,
                                       const AnalyzerConfig& c) {
  std::vector<Segment> raw;
  for (auto [s, e] : listen_runs) raw.push_back({SegmentKind::EdrxListen, s, e, SegmentSource::Detected});
  std::vector<Segment> listens, artifacts;
  for (const auto& s : filter_artifacts(std::move(raw), c.detector, c.sample_rate_hz))
    (s.kind == SegmentKind::Artifact ? artifacts : listens).push_back(s);

  std::vector<Segment> base;
  auto add = [&](SegmentKind k, std::size_t s, std::size_t e) {
    if (s < e) base.push_back({k, s, e, SegmentSource::Detected});
  };
  std::size_t pos = a;
  for (const auto& l : listens) {
    add(SegmentKind::EdrxSleep, pos, l.start_idx);
    base.push_back(l);
    pos = l.end_idx;
  }
  if (!listens.empty()) {
    const std::size_t edrx_end = c.drx_cycle_samples ? std::min(b, listens.back().start_idx + *c.drx_cycle_samples) : pos;
    add(SegmentKind::EdrxSleep, pos, edrx_end);
    pos = std::max(pos, edrx_end);
  }
  add(SegmentKind::PsmDeep, pos, b);
  return overlay(base, artifacts);
}

class StreamingAnalyzer {
 public:
  explicit StreamingAnalyzer(AnalyzerConfig cfg)
      : cfg_(std::move(cfg)),
        coarse_(cfg_.detector.coarse_threshold_a, cfg_.detector.coarse_median_window / 2),
        fsts_(cfg_.detector.window_w),
        peak_(cfg_.thresholds.peak_a),
        inactive_(cfg_.thresholds.inactivity_a),
        listen_(cfg_.thresholds.listen_a) {
    validate_analyzer_config(cfg_);
  }

  void push(double x) {
    coarse_.push(x, [this](std::size_t i, double xi, bool high) { on_sample(i, xi, high); });
  }
  void push(std::span<const double> xs) {
    for (double x : xs) push(x);
  }

  std::size_t samples_seen() const { return coarse_.pushed(); }

  std::vector<Segment> finish() {
    coarse_.finish([this](std::size_t i, double xi, bool high) { on_sample(i, xi, high); });
    if (open_) close_segment(coarse_.pushed());
    open_ = false;
    return std::move(out_);
  }

 private:
  void on_sample(std::size_t i, double x, bool high) {
    if (open_ && high != high_) close_segment(i);
    if (!open_) {
      open_ = true;
      high_ = high;
      start_ = i;
    }
    fsts_.push(x, [this](std::size_t li, double, double f) { track(start_ + li, f); });
  }

  void track(std::size_t i, double f) {
    peak_.push(i, f);
    inactive_.push(i, f);
    listen_.push(i, f);
  }

  void close_segment(std::size_t end) {
    fsts_.finish([this](std::size_t li, double, double f) { track(start_ + li, f); });
    peak_.finish(end);
    inactive_.finish(end);
    listen_.finish(end);
    const auto segs = high_ ? label_connected(start_, end, peak_.runs(), inactive_.runs(), cfg_)
                            : label_idle(start_, end, listen_.runs(), cfg_);
    out_.insert(out_.end(), segs.begin(), segs.end());
    fsts_.reset();
    peak_.reset();
    inactive_.reset();
    listen_.reset();
    open_ = false;
  }

  AnalyzerConfig cfg_;
  CoarseStage coarse_;
  StreamingFsts fsts_;
  RunTracker peak_, inactive_, listen_;
  bool open_ = false, high_ = false;
  std::size_t start_ = 0;
  std::vector<Segment> out_;
};

inline std::vector<Segment> analyze(const CurrentTrace& trace, const AnalyzerConfig& c) {
  if (trace.empty()) throw DomainError("cannot analyze an empty trace");
  StreamingAnalyzer a(c);
  a.push(trace.samples());
  return a.finish();
}

// ---------------------------------------------------------------------------
// Evaluation against ground truth

struct KindCounts {
  std::size_t truth = 0, detected = 0, matched = 0;
};

struct EvalReport {
  std::size_t window = 0;
  std::size_t n_truth = 0, n_detected = 0, n_matched = 0;
  double precision = 1.0, recall = 1.0;
  std::size_t max_start_error = 0, max_end_error = 0;
  double mean_boundary_error = 0.0;
  std::map<SegmentKind, KindCounts> per_kind;
  std::size_t spikes_total = 0, spikes_as_artifact = 0;
};

inline bool within(std::size_t a, std::size_t b, std::size_t w) { return (a > b ? a - b : b - a) <= w; }

// One-to-one matching of active phases: same kind, both edges within w.
inline EvalReport evaluate(const std::vector<Segment>& truth, const std::vector<Segment>& detected, std::size_t w,
                           const std::vector<Segment>& spikes = {}) {
  EvalReport r;
  r.window = w;
  std::map<SegmentKind, std::pair<std::vector<Segment>, std::vector<Segment>>> by_kind;
  for (const auto& s : truth)
    if (is_active(s.kind)) by_kind[s.kind].first.push_back(s);
  for (const auto& s : detected)
    if (is_active(s.kind)) by_kind[s.kind].second.push_back(s);
  double err_sum = 0.0;
  for (auto& [kind, lists] : by_kind) {
    auto& [t, d] = lists;
    auto& kc = r.per_kind[kind];
    kc.truth = t.size();
    kc.detected = d.size();
    std::size_t i = 0, j = 0;
    while (i < t.size() && j < d.size()) {
      if (within(t[i].start_idx, d[j].start_idx, w) && within(t[i].end_idx, d[j].end_idx, w)) {
        const auto es = t[i].start_idx > d[j].start_idx ? t[i].start_idx - d[j].start_idx : d[j].start_idx - t[i].start_idx;
        const auto ee = t[i].end_idx > d[j].end_idx ? t[i].end_idx - d[j].end_idx : d[j].end_idx - t[i].end_idx;
        r.max_start_error = std::max(r.max_start_error, es);
        r.max_end_error = std::max(r.max_end_error, ee);
        err_sum += static_cast<double>(es + ee);
        ++kc.matched;
        ++i;
        ++j;
      } else if (d[j].start_idx < t[i].start_idx) {
        ++j;
      } else {
        ++i;
      }
    }
    r.n_truth += kc.truth;
    r.n_detected += kc.detected;
    r.n_matched += kc.matched;
  }
  if (r.n_detected) r.precision = static_cast<double>(r.n_matched) / static_cast<double>(r.n_detected);
  if (r.n_truth) r.recall = static_cast<double>(r.n_matched) / static_cast<double>(r.n_truth);
  if (r.n_matched) r.mean_boundary_error = err_sum / (2.0 * static_cast<double>(r.n_matched));

  r.spikes_total = spikes.size();
  for (const auto& sp : spikes) {
    const bool hit = std::any_of(detected.begin(), detected.end(), [&](const Segment& d) {
      return d.kind == SegmentKind::Artifact && d.start_idx < sp.end_idx && sp.start_idx < d.end_idx;
    });
    r.spikes_as_artifact += hit;
  }
  return r;
}

}  // namespace nbpower
