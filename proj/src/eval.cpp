#include "forte/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include <json.hpp>

#include "forte/scenario.hpp"

namespace forte {

void EvalReport::add_trial(bool gt, bool pred) {
  trials.push_back(TrialLabel{gt, pred});
  if (gt && pred) ++tp;
  else if (!gt && pred) ++fp;
  else if (gt && !pred) ++fn;
  else ++tn;
  finalize();
}

void EvalReport::merge(const EvalReport& other) {
  trials.insert(trials.end(), other.trials.begin(), other.trials.end());
  tp += other.tp;
  fp += other.fp;
  fn += other.fn;
  tn += other.tn;
  latencies_ms.insert(latencies_ms.end(), other.latencies_ms.begin(), other.latencies_ms.end());
  gt_events += other.gt_events;
  detected_events += other.detected_events;
  false_alarms += other.false_alarms;
  for (const auto& [k, v] : other.outcomes) outcomes[k] += v;
  finalize();
}

void EvalReport::finalize() {
  const double n = static_cast<double>(tp + fp + fn + tn);
  accuracy = n > 0 ? static_cast<double>(tp + tn) / n : 1.0;
  precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 1.0;
  recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 1.0;
  f1 = precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

double EvalReport::max_latency_ms() const {
  return latencies_ms.empty() ? 0.0 : *std::max_element(latencies_ms.begin(), latencies_ms.end());
}

double EvalReport::mean_latency_ms() const {
  if (latencies_ms.empty()) return 0.0;
  return std::accumulate(latencies_ms.begin(), latencies_ms.end(), 0.0) / static_cast<double>(latencies_ms.size());
}

EvalReport EvalReport::from_labels(const std::vector<TrialLabel>& labels) {
  EvalReport r;
  for (const auto& l : labels) r.add_trial(l.gt, l.pred);
  r.finalize();
  return r;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["trials"] = trials.size();
  j["tp"] = tp;
  j["fp"] = fp;
  j["fn"] = fn;
  j["tn"] = tn;
  j["accuracy"] = accuracy;
  j["precision"] = precision;
  j["recall"] = recall;
  j["f1"] = f1;
  j["gt_events"] = gt_events;
  j["detected_events"] = detected_events;
  j["false_alarms"] = false_alarms;
  j["latency_ms"] = latencies_ms;
  j["max_latency_ms"] = max_latency_ms();
  j["mean_latency_ms"] = mean_latency_ms();
  if (!outcomes.empty()) j["outcomes"] = outcomes;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

std::vector<SlipInterval> slip_events(const Trace& trace, double merge_gap_s) {
  std::vector<SlipInterval> out;
  if (!trace.has_slip) return out;
  bool in = false;
  SlipInterval cur;
  double prev_t = 0.0;
  for (const auto& r : trace.rows) {
    const bool s = r.slip_gt && *r.slip_gt == 1;
    if (s && !in) {
      if (!out.empty() && r.frame.t - out.back().end < merge_gap_s) {
        cur = out.back();
        out.pop_back();
      } else {
        cur.onset = r.frame.t;
      }
      in = true;
    } else if (!s && in) {
      cur.end = prev_t;
      out.push_back(cur);
      in = false;
    }
    prev_t = r.frame.t;
  }
  if (in) {
    cur.end = prev_t;
    out.push_back(cur);
  }
  return out;
}

void score_events(const std::vector<SlipInterval>& gt, const std::vector<TimelineRow>& timeline, double window_s,
                  EvalReport& report) {
  report.gt_events += gt.size();
  std::size_t k = 0;
  for (const auto& ev : gt) {
    while (k < timeline.size() && timeline[k].t < ev.onset) ++k;
    for (std::size_t j = k; j < timeline.size() && timeline[j].t <= ev.end + window_s; ++j) {
      if (timeline[j].eta) {
        ++report.detected_events;
        report.latencies_ms.push_back(std::round((timeline[j].t - ev.onset) * 1e9) / 1e6);
        break;
      }
    }
  }
  bool prev = false;
  for (const auto& row : timeline) {
    if (row.eta && !prev) {
      const bool explained = std::any_of(gt.begin(), gt.end(), [&](const SlipInterval& ev) {
        return row.t >= ev.onset && row.t <= ev.end + window_s;
      });
      if (!explained) ++report.false_alarms;
    }
    prev = row.eta;
  }
}

ReplayResult replay(const Trace& trace, const ReplayOptions& opt) {
  opt.config.validate();
  ReplayResult res;
  const auto frames = trace.frames();
  SlipPipeline pipe(opt.config, estimate_baseline(frames, opt.config.baseline_seconds));
  std::optional<ForceEstimator> est;
  if (opt.force_model) est.emplace(*opt.force_model, opt.config.sample_rate_hz);

  const auto wall0 = std::chrono::steady_clock::now();
  const double t0 = frames.empty() ? 0.0 : frames.front().t;
  bool prev_eta = false;
  for (const auto& f : frames) {
    if (opt.realtime)
      std::this_thread::sleep_until(wall0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                std::chrono::duration<double>(f.t - t0)));
    const SlipState* st = pipe.push(f);
    if (est) est->update(pipe.ring());
    if (!st) continue;
    TimelineRow row;
    row.t = st->t;
    row.sigma_bar = st->finger_variance_db2;
    row.eta = st->eta;
    row.feature_db = st->feature_db;
    if (est) row.force_est_n = est->force();
    if (st->eta && !prev_eta)
      res.events.push_back(DetectionEvent{st->t, st->dominant_finger(), st->max_finger_variance(), true});
    prev_eta = st->eta;
    res.timeline.push_back(row);
  }

  res.has_ground_truth = trace.has_slip;
  if (trace.has_slip) {
    res.gt_events = slip_events(trace, opt.merge_gap_s);
    const bool gt = !res.gt_events.empty();
    const bool pred = std::any_of(res.timeline.begin(), res.timeline.end(), [](const TimelineRow& r) { return r.eta; });
    res.report.add_trial(gt, pred);
    score_events(res.gt_events, res.timeline, opt.merge_gap_s, res.report);
  }
  return res;
}

void write_events(std::ostream& out, const std::vector<DetectionEvent>& events) {
  out << "t_detect,finger,sigma_bar_db2,eta\n";
  for (const auto& e : events)
    out << format_double(e.t) << ',' << finger_name(e.finger) << ',' << format_double(e.sigma_bar_db2) << ','
        << (e.eta ? 1 : 0) << '\n';
}

void write_timeline(std::ostream& out, const std::vector<TimelineRow>& rows) {
  const bool force = !rows.empty() && rows.front().force_est_n.has_value();
  out << "t,sigma_bar_R_db2,sigma_bar_L_db2,eta";
  for (std::size_t c = 0; c < kNumChannels; ++c) out << ",p" << c << "_db";
  if (force) out << ",force_est_n";
  out << '\n';
  for (const auto& r : rows) {
    out << format_double(r.t) << ',' << format_double(r.sigma_bar[0]) << ',' << format_double(r.sigma_bar[1]) << ','
        << (r.eta ? 1 : 0);
    for (double p : r.feature_db) out << ',' << format_double(p);
    if (force) out << ',' << format_double(r.force_est_n.value_or(0.0));
    out << '\n';
  }
}

// ---------------------------------------------------------------------------

FeatureTrack feature_track(const Trace& trace, const PipelineConfig& cfg) {
  FeatureTrack track;
  const auto frames = trace.frames();
  SlipPipeline pipe(cfg, estimate_baseline(frames, cfg.baseline_seconds));
  for (const auto& f : frames) {
    if (const SlipState* st = pipe.push(f)) {
      track.t.push_back(st->t);
      track.feature_db.push_back(st->feature_db);
    }
  }
  return track;
}

std::vector<TimelineRow> eta_from_features(const FeatureTrack& track, const PipelineConfig& cfg) {
  std::vector<FeatureHistory> hist;
  for (std::size_t c = 0; c < kNumChannels; ++c) hist.emplace_back(static_cast<std::size_t>(cfg.history_length));
  std::vector<TimelineRow> rows;
  rows.reserve(track.t.size());
  std::array<double, kNumChannels> var{};
  for (std::size_t k = 0; k < track.t.size(); ++k) {
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      hist[c].push(track.feature_db[k][c]);
      var[c] = gated_variance(hist[c], cfg);
    }
    TimelineRow row;
    row.t = track.t[k];
    row.feature_db = track.feature_db[k];
    row.sigma_bar = finger_aggregate(var, cfg);
    row.eta = std::max(row.sigma_bar[0], row.sigma_bar[1]) > cfg.slip_threshold_db2;
    rows.push_back(row);
  }
  return rows;
}

std::vector<SweepCell> sweep(const std::vector<Trace>& traces, const SweepGrid& grid, const PipelineConfig& base) {
  if (grid.size() == 0) throw std::invalid_argument("sweep: empty parameter grid");
  std::vector<FeatureTrack> tracks;
  std::vector<std::vector<SlipInterval>> events;
  for (const auto& t : traces) {
    tracks.push_back(feature_track(t, base));
    events.push_back(slip_events(t));
  }
  std::vector<SweepCell> cells;
  for (double d : grid.delta_db)
    for (double a : grid.alpha_db2)
      for (double th : grid.threshold_db2)
        for (int v : grid.history) {
          PipelineConfig cfg = base;
          cfg.monotonic_increment_db = d;
          cfg.group_variance_gate_db2 = a;
          cfg.slip_threshold_db2 = th;
          cfg.history_length = v;
          cfg.validate();
          SweepCell cell{d, a, th, v, {}};
          for (std::size_t i = 0; i < traces.size(); ++i) {
            const auto rows = eta_from_features(tracks[i], cfg);
            const bool pred = std::any_of(rows.begin(), rows.end(), [](const TimelineRow& r) { return r.eta; });
            cell.report.add_trial(!events[i].empty(), pred);
            score_events(events[i], rows, 0.2, cell.report);
          }
          cells.push_back(std::move(cell));
        }
  return cells;
}

void write_sweep(std::ostream& out, const std::vector<SweepCell>& cells) {
  out << "delta_db,alpha_db2,threshold_db2,history,accuracy,precision,recall,f1,tp,fp,fn,tn,gt_events,"
         "detected_events,false_alarms,mean_latency_ms,max_latency_ms\n";
  for (const auto& c : cells) {
    const auto& r = c.report;
    out << format_double(c.delta_db) << ',' << format_double(c.alpha_db2) << ',' << format_double(c.threshold_db2)
        << ',' << c.history << ',' << format_double(r.accuracy) << ',' << format_double(r.precision) << ','
        << format_double(r.recall) << ',' << format_double(r.f1) << ',' << r.tp << ',' << r.fp << ',' << r.fn << ','
        << r.tn << ',' << r.gt_events << ',' << r.detected_events << ',' << r.false_alarms << ','
        << format_double(r.mean_latency_ms()) << ',' << format_double(r.max_latency_ms()) << '\n';
  }
}

// ---------------------------------------------------------------------------

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

ForceModel synthetic_force_model(std::size_t support_vectors, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.2, 0.2), c(-1.0, 1.0);
  std::vector<double> svs(support_vectors * kForceFeatureDim), coeffs(support_vectors);
  for (auto& x : svs) x = u(rng);
  for (auto& x : coeffs) x = c(rng);
  return ForceModel::from_parts(kForceFeatureDim, std::move(svs), std::move(coeffs), 1.0, 2.0, 10.0, 0.01,
                                FeatureSet::Full);
}

std::string BenchReport::to_json() const {
  nlohmann::ordered_json j;
  j["frames"] = frames;
  j["slip_steps"] = slip_steps;
  j["predictions"] = predictions;
  j["wall_s"] = wall_s;
  j["ingest_fps"] = ingest_fps;
  j["slip_step_us"] = {{"p50", slip_p50_us}, {"p99", slip_p99_us}, {"max", slip_max_us}};
  j["predict_us"] = {{"p50", predict_p50_us}, {"p99", predict_p99_us}, {"max", predict_max_us}};
  j["pass"] = pass;
  return j.dump(2) + "\n";
}

BenchReport bench(const BenchOptions& opt) {
  using clock = std::chrono::steady_clock;
  sim::ScenarioSpec spec;
  spec.name = "Q";
  spec.seed = opt.seed;
  spec.duration_s = opt.seconds;
  spec.pipeline = opt.config;
  const Trace trace = sim::run_scenario(spec).trace;
  const auto frames = trace.frames();
  const ForceModel model = synthetic_force_model(opt.support_vectors, opt.seed + 1);

  SlipPipeline pipe(opt.config, estimate_baseline(frames, opt.config.baseline_seconds));
  std::vector<double> slip_us, predict_us;
  slip_us.reserve(frames.size() / 4 + 1);
  constexpr std::size_t kForceHop = 20;
  const double fs = opt.config.sample_rate_hz;
  const auto wall0 = clock::now();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (opt.realtime)
      std::this_thread::sleep_until(wall0 + std::chrono::duration_cast<clock::duration>(
                                                std::chrono::duration<double>(static_cast<double>(i) / fs)));
    const auto a = clock::now();
    const SlipState* st = pipe.push(frames[i]);
    const auto b = clock::now();
    if (st) slip_us.push_back(std::chrono::duration<double, std::micro>(b - a).count());
    if (i % kForceHop == 0) {
      const ForceFeature f = build_feature(pipe.ring(), fs);
      const auto c = clock::now();
      volatile double y = model.predict(f.v);
      (void)y;
      const auto d = clock::now();
      predict_us.push_back(std::chrono::duration<double, std::micro>(d - c).count());
    }
  }
  const double wall = std::chrono::duration<double>(clock::now() - wall0).count();

  BenchReport r;
  r.frames = frames.size();
  r.slip_steps = slip_us.size();
  r.predictions = predict_us.size();
  r.wall_s = wall;
  r.ingest_fps = wall > 0 ? static_cast<double>(frames.size()) / wall : 0.0;
  r.slip_p50_us = percentile(slip_us, 0.50);
  r.slip_p99_us = percentile(slip_us, 0.99);
  r.slip_max_us = slip_us.empty() ? 0.0 : *std::max_element(slip_us.begin(), slip_us.end());
  r.predict_p50_us = percentile(predict_us, 0.50);
  r.predict_p99_us = percentile(predict_us, 0.99);
  r.predict_max_us = predict_us.empty() ? 0.0 : *std::max_element(predict_us.begin(), predict_us.end());
  r.pass = r.ingest_fps >= fs && r.slip_p99_us <= opt.slip_budget_ms * 1000.0 &&
           r.predict_p99_us <= opt.predict_budget_ms * 1000.0;
  return r;
}

}  // namespace forte
