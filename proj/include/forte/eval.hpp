#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "forte/force.hpp"
#include "forte/io.hpp"
#include "forte/slip.hpp"

namespace forte {

struct TrialLabel {
  bool gt = false;
  bool pred = false;
};

/// Trial-wise slip metrics plus event latencies.
struct EvalReport {
  std::vector<TrialLabel> trials;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double accuracy = 1.0;
  double precision = 1.0;  // 1.0 when nothing was predicted positive
  double recall = 1.0;     // 1.0 when there was nothing to find
  double f1 = 1.0;

  std::vector<double> latencies_ms;  // one per detected ground-truth event
  std::size_t gt_events = 0;
  std::size_t detected_events = 0;
  std::size_t false_alarms = 0;      // eta onsets outside every event window
  std::map<std::string, int> outcomes;

  void add_trial(bool gt, bool pred);
  void merge(const EvalReport& other);
  /// Recomputes the aggregate rates from the counts.
  void finalize();
  double max_latency_ms() const;
  double mean_latency_ms() const;
  std::string to_json() const;

  static EvalReport from_labels(const std::vector<TrialLabel>& labels);
};

struct SlipInterval {
  double onset = 0.0;
  double end = 0.0;
};

/// Ground-truth slip intervals; intervals separated by less than `merge_gap_s`
/// are joined.
std::vector<SlipInterval> slip_events(const Trace& trace, double merge_gap_s = 0.2);

struct DetectionEvent {
  double t = 0.0;
  Finger finger = Finger::Right;
  double sigma_bar_db2 = 0.0;
  bool eta = true;
};

struct TimelineRow {
  double t = 0.0;
  std::array<double, 2> sigma_bar{};
  bool eta = false;
  std::array<double, kNumChannels> feature_db{};
  std::optional<double> force_est_n;
};

struct ReplayOptions {
  PipelineConfig config;
  const ForceModel* force_model = nullptr;
  bool realtime = false;
  double merge_gap_s = 0.2;
};

struct ReplayResult {
  std::vector<DetectionEvent> events;
  std::vector<TimelineRow> timeline;
  std::vector<SlipInterval> gt_events;
  bool has_ground_truth = false;
  EvalReport report;  // empty trial list when the trace has no slip_gt
};

/// Baseline from the first `baseline_seconds`, then filter, detect and
/// (optionally) estimate force over the whole trace.
ReplayResult replay(const Trace& trace, const ReplayOptions& opt);

/// Matches eta onsets against ground-truth events and fills the event
/// fields of `report`.
void score_events(const std::vector<SlipInterval>& gt, const std::vector<TimelineRow>& timeline, double window_s,
                  EvalReport& report);

void write_events(std::ostream& out, const std::vector<DetectionEvent>& events);
void write_timeline(std::ostream& out, const std::vector<TimelineRow>& rows);

/// Per-step PSD features of a trace; these do not depend on the variance,
/// gate or threshold parameters, so a sweep computes them once.
struct FeatureTrack {
  std::vector<double> t;
  std::vector<std::array<double, kNumChannels>> feature_db;
};
FeatureTrack feature_track(const Trace& trace, const PipelineConfig& cfg);
/// Variance, aggregation and threshold stages over a feature track.
std::vector<TimelineRow> eta_from_features(const FeatureTrack& track, const PipelineConfig& cfg);

struct SweepGrid {
  std::vector<double> delta_db;
  std::vector<double> alpha_db2;
  std::vector<double> threshold_db2;
  std::vector<int> history;
  std::size_t size() const { return delta_db.size() * alpha_db2.size() * threshold_db2.size() * history.size(); }
};

struct SweepCell {
  double delta_db = 0.0, alpha_db2 = 0.0, threshold_db2 = 0.0;
  int history = 0;
  EvalReport report;
};

std::vector<SweepCell> sweep(const std::vector<Trace>& traces, const SweepGrid& grid, const PipelineConfig& base);
void write_sweep(std::ostream& out, const std::vector<SweepCell>& cells);

struct BenchOptions {
  double seconds = 60.0;
  bool realtime = false;
  std::size_t support_vectors = 5000;
  std::uint64_t seed = 0;
  PipelineConfig config;
  double slip_budget_ms = 2.0;
  double predict_budget_ms = 10.0;
};

struct BenchReport {
  std::size_t frames = 0;
  std::size_t slip_steps = 0;
  std::size_t predictions = 0;
  double wall_s = 0.0;
  double ingest_fps = 0.0;
  double slip_p50_us = 0.0, slip_p99_us = 0.0, slip_max_us = 0.0;
  double predict_p50_us = 0.0, predict_p99_us = 0.0, predict_max_us = 0.0;
  bool pass = false;
  std::string to_json() const;
};

BenchReport bench(const BenchOptions& opt);

/// Random model with the given number of support vectors, for timing.
ForceModel synthetic_force_model(std::size_t support_vectors, std::uint64_t seed);

double percentile(std::vector<double> values, double q);

}  // namespace forte
