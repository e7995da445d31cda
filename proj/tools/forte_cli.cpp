// forte: replay, simulate, grasp, train-force, eval-force, sweep, bench.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "forte/eval.hpp"
#include "forte/scenario.hpp"

namespace fs = std::filesystem;
using namespace forte;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitThreshold = 3;

std::uint64_t env_seed() {
  const char* s = std::getenv("FORTE_SEED");
  if (!s || !*s) return 0;
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw DataError(std::string("FORTE_SEED is not an unsigned integer: '") + s + "'");
  }
}

struct Settings {
  sim::ScenarioSpec spec;  // pipeline, controller, sensor, gripper, object
  SvrParams svr;
};

// Keys use the scenario-file layout (`pipeline.fft_window`,
// `controller.increment_deg`, `sensor.*`, ...) plus `svr.*`.
Settings load_settings(const std::string& path) {
  Settings s;
  if (path.empty()) return s;
  const KeyValues kv = KeyValues::parse_file(path);
  s.spec.apply(kv);
  s.svr.C = kv.get_double("svr.C", s.svr.C);
  s.svr.epsilon = kv.get_double("svr.epsilon", s.svr.epsilon);
  s.svr.gamma = kv.get_double("svr.gamma", s.svr.gamma);
  s.svr.tolerance = kv.get_double("svr.tolerance", s.svr.tolerance);
  s.svr.max_iterations = static_cast<std::uint64_t>(kv.get_double("svr.max_iterations", 0.0));
  s.svr.cache_mb = kv.get_double("svr.cache_mb", s.svr.cache_mb);
  if (const auto extra = kv.unused(); !extra.empty()) throw DataError(path + ": unknown key '" + extra.front() + "'");
  return s;
}

template <class Fn>
void write_file(const std::string& path, Fn&& fn) {
  if (path.empty()) return;
  if (path == "-") {
    fn(std::cout);
    return;
  }
  if (const auto dir = fs::path(path).parent_path(); !dir.empty()) fs::create_directories(dir);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  fn(out);
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(item));
  return out;
}

std::vector<sim::LabeledTrace> load_press_set(const std::string& dataset, const std::string& generate,
                                              std::size_t trials, std::uint64_t seed) {
  if (!dataset.empty()) return sim::read_dataset(dataset);
  if (generate != "B" && generate != "E") throw DataError("--generate must be B or E");
  return sim::generate_press_traces(generate, trials, seed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FORTE tactile slip detection, force estimation and grasp control"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config;
  std::uint64_t seed = 0;
  bool seed_given = false;
  app.add_option("--config", config, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option_function<std::uint64_t>(
      "--seed", [&](const std::uint64_t& v) { seed = v, seed_given = true; }, "global seed (default: $FORTE_SEED or 0)");

  // replay
  auto* replay_cmd = app.add_subcommand("replay", "run the pipeline over a recorded trace");
  std::string trace_path, model_path, events_out, timeline_out, report_out;
  bool realtime = false;
  double min_recall = -1.0, max_latency = -1.0;
  replay_cmd->add_option("trace", trace_path, "trace CSV")->required();
  replay_cmd->add_option("--force-model", model_path, "force model JSON");
  replay_cmd->add_option("--events", events_out, "detection events CSV");
  replay_cmd->add_option("--timeline", timeline_out, "per-step timeline CSV");
  replay_cmd->add_option("--report", report_out, "metrics JSON (default: stdout)");
  replay_cmd->add_flag("--realtime", realtime, "pace frames at the sample rate");
  replay_cmd->add_option("--min-recall", min_recall, "exit 3 below this event recall");
  replay_cmd->add_option("--max-latency-ms", max_latency, "exit 3 above this detection latency");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "generate scenario traces");
  std::string scenario = "A", scenario_file, out_trace, out_gt, out_dir;
  std::size_t trials = 0;
  sim_cmd->add_option("--scenario", scenario, "A, B, C, D, E or Q");
  sim_cmd->add_option("--scenario-file", scenario_file, "scenario definition file")->check(CLI::ExistingFile);
  sim_cmd->add_option("--out-trace", out_trace, "trace CSV");
  sim_cmd->add_option("--out-gt", out_gt, "ground-truth CSV");
  sim_cmd->add_option("--trials", trials, "B/E: number of press trials for a dataset");
  sim_cmd->add_option("--out-dir", out_dir, "B/E: dataset directory");

  // grasp
  auto* grasp_cmd = app.add_subcommand("grasp", "closed-loop grasp session in the simulator");
  std::string policy = "forte", object, log_out, grasp_trace, grasp_gt, expect;
  grasp_cmd->add_option("--policy", policy, "forte, onoff or woslip");
  grasp_cmd->add_option("--object", object, "object id")->required();
  grasp_cmd->add_option("--force-model", model_path, "force model JSON");
  grasp_cmd->add_option("--log", log_out, "session log CSV");
  grasp_cmd->add_option("--out-trace", grasp_trace, "sensor trace CSV");
  grasp_cmd->add_option("--out-gt", grasp_gt, "ground-truth CSV");
  grasp_cmd->add_option("--expect", expect, "exit 3 unless the outcome matches (SUCCESS, DROPPED, CRUSHED)");

  // train-force / eval-force
  std::string dataset, generate = "B", features = "24", model_out;
  double decimate_hz = 2.0, max_rmse = -1.0;
  std::size_t gen_trials = 240;
  int folds = 10;
  auto* train_cmd = app.add_subcommand("train-force", "fit the force regressor");
  auto* evalf_cmd = app.add_subcommand("eval-force", "trial-wise cross-validation of the force regressor");
  for (auto* c : {train_cmd, evalf_cmd}) {
    c->add_option("--dataset", dataset, "dataset directory with manifest.csv");
    c->add_option("--generate", generate, "simulate a B or E dataset when --dataset is absent");
    c->add_option("--trials", gen_trials, "trials to simulate");
    c->add_option("--features", features, "24 or 6");
    c->add_option("--decimate-hz", decimate_hz, "training sample rate per trial");
  }
  train_cmd->add_option("--out", model_out, "model JSON")->required();
  evalf_cmd->add_option("--folds", folds, "number of folds");
  evalf_cmd->add_option("--model", model_path, "score a saved model instead of cross-validating");
  evalf_cmd->add_option("--report", report_out, "report JSON (default: stdout)");
  evalf_cmd->add_option("--max-rmse", max_rmse, "exit 3 above this RMSE");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "grid over detector parameters");
  std::vector<std::string> sweep_traces;
  std::string sweep_scenario = "A", deltas = "0.1", alphas = "0.6", thresholds = "2", histories = "15", sweep_out = "-";
  std::size_t sweep_seeds = 20;
  sweep_cmd->add_option("--traces", sweep_traces, "trace CSVs with slip_gt");
  sweep_cmd->add_option("--scenario", sweep_scenario, "simulate this scenario when no traces are given");
  sweep_cmd->add_option("--seeds", sweep_seeds, "number of simulated runs");
  sweep_cmd->add_option("--delta", deltas, "comma-separated monotonic increments (dB)");
  sweep_cmd->add_option("--alpha", alphas, "comma-separated group gates (dB^2)");
  sweep_cmd->add_option("--threshold", thresholds, "comma-separated slip thresholds (dB^2)");
  sweep_cmd->add_option("--history", histories, "comma-separated history lengths");
  sweep_cmd->add_option("--out", sweep_out, "sweep CSV (default: stdout)");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "throughput and latency benchmark");
  BenchOptions bopt;
  bench_cmd->add_option("--seconds", bopt.seconds, "load length")->check(CLI::PositiveNumber);
  bench_cmd->add_flag("--realtime", bopt.realtime, "pace frames at the sample rate");
  bench_cmd->add_option("--support-vectors", bopt.support_vectors, "synthetic model size");
  bench_cmd->add_option("--report", report_out, "report JSON (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (!seed_given) seed = env_seed();
    const Settings st = load_settings(config);
    const PipelineConfig& pcfg = st.spec.pipeline;
    pcfg.validate();

    if (*replay_cmd) {
      const Trace trace = read_trace_file(trace_path);
      ForceModel model;
      ReplayOptions opt;
      opt.config = pcfg;
      opt.realtime = realtime;
      if (!model_path.empty()) {
        model = ForceModel::load(model_path);
        opt.force_model = &model;
      }
      const ReplayResult res = replay(trace, opt);
      write_file(events_out, [&](std::ostream& o) { write_events(o, res.events); });
      write_file(timeline_out, [&](std::ostream& o) { write_timeline(o, res.timeline); });
      if (!res.has_ground_truth) {
        std::cerr << "no slip_gt column: metrics omitted\n";
        return kExitOk;
      }
      write_file(report_out.empty() ? "-" : report_out, [&](std::ostream& o) { o << res.report.to_json(); });
      const auto& r = res.report;
      const double event_recall =
          r.gt_events ? static_cast<double>(r.detected_events) / static_cast<double>(r.gt_events) : 1.0;
      if (min_recall >= 0 && event_recall < min_recall) return kExitThreshold;
      if (max_latency >= 0 && r.max_latency_ms() > max_latency) return kExitThreshold;
      return kExitOk;
    }

    if (*sim_cmd) {
      sim::ScenarioSpec spec = st.spec;
      spec.name = scenario;
      spec.seed = seed;
      if (!scenario_file.empty()) spec.apply(KeyValues::parse_file(scenario_file));
      if (!sim::is_scenario(spec.name)) throw DataError("unknown scenario '" + spec.name + "'");
      if (trials > 0) {
        if (spec.name != "B" && spec.name != "E") throw DataError("--trials needs scenario B or E");
        if (out_dir.empty()) throw DataError("--trials needs --out-dir");
        sim::write_dataset(out_dir, sim::generate_press_traces(spec.name, trials, spec.seed));
        return kExitOk;
      }
      const auto res = sim::run_scenario(spec, &sim::default_force_model());
      write_file(out_trace.empty() ? "-" : out_trace, [&](std::ostream& o) { write_trace(o, res.trace); });
      write_file(out_gt, [&](std::ostream& o) { sim::write_ground_truth(o, res.ground_truth); });
      std::cerr << "scenario " << res.name << " object " << res.object.name << ": " << res.outcome << '\n';
      return kExitOk;
    }

    if (*grasp_cmd) {
      sim::GraspSetup g;
      g.object = sim::find_object(object);
      if (st.spec.object) g.object = *st.spec.object;
      g.seed = seed;
      g.sensor = st.spec.sensor;
      g.gripper = st.spec.gripper;
      g.pipeline = pcfg;
      g.controller = st.spec.controller;
      g.controller.policy = parse_policy(policy);
      g.record_trace = !grasp_trace.empty() || !grasp_gt.empty();
      const ForceModel model = model_path.empty() ? sim::default_force_model() : ForceModel::load(model_path);
      const auto res = sim::run_grasp(g, model);
      write_file(log_out, [&](std::ostream& o) { write_session_log(o, res.log); });
      write_file(grasp_trace, [&](std::ostream& o) { write_trace(o, res.trace); });
      write_file(grasp_gt, [&](std::ostream& o) { sim::write_ground_truth(o, res.ground_truth); });
      nlohmann::ordered_json j;
      j["object"] = g.object.name;
      j["policy"] = policy_name(g.controller.policy);
      j["seed"] = seed;
      j["outcome"] = phase_name(res.outcome);
      j["reason"] = res.reason;
      j["increments"] = res.increments;
      j["slip_onsets"] = res.slip_onsets;
      j["max_normal_force_n"] = res.max_normal_force_n;
      j["required_force_n"] = res.required_force_n;
      j["duration_s"] = res.duration_s;
      std::cout << j.dump(2) << '\n';
      if (!expect.empty() && expect != phase_name(res.outcome)) return kExitThreshold;
      return kExitOk;
    }

    if (*train_cmd || *evalf_cmd) {
      const FeatureSet set = parse_feature_set(features);
      const auto traces = load_press_set(dataset, generate, gen_trials, seed);
      const auto trials_v = sim::traces_to_trials(traces, pcfg, decimate_hz, set);
      if (*train_cmd) {
        TrainStats stats;
        ForceModel model;
        try {
          model = train(trials_v, st.svr, &stats, set);
        } catch (const TrainingError& e) {
          std::cerr << "warning: " << e.what() << "; saving the best model found\n";
          model = e.model();
          stats = e.stats();
        }
        model.save(model_out);
        std::cerr << "trained on " << stats.num_samples << " samples, " << model.num_support_vectors()
                  << " support vectors, " << stats.iterations << " iterations\n";
        return kExitOk;
      }
      nlohmann::ordered_json j;
      j["feature_set"] = feature_set_tag(set);
      j["trials"] = trials_v.size();
      double score = 0.0;
      if (!model_path.empty()) {
        const ForceModel model = ForceModel::load(model_path);
        if (model.feature_set() != set) throw DataError("model feature set does not match --features");
        std::vector<ForceSample> all;
        for (const auto& t : trials_v) all.insert(all.end(), t.samples.begin(), t.samples.end());
        score = rmse(model, all);
        j["rmse_n"] = score;
      } else {
        const auto cv = cross_validate(trials_v, folds, st.svr, seed, set);
        j["folds"] = folds;
        j["fold_rmse_n"] = cv.fold_rmse;
        j["mean_rmse_n"] = cv.mean_rmse;
        j["pooled_rmse_n"] = cv.pooled_rmse;
        score = cv.mean_rmse;
      }
      write_file(report_out.empty() ? "-" : report_out, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
      if (max_rmse >= 0 && score > max_rmse) return kExitThreshold;
      return kExitOk;
    }

    if (*sweep_cmd) {
      std::vector<Trace> traces;
      for (const auto& p : sweep_traces) traces.push_back(read_trace_file(p));
      if (traces.empty()) {
        for (std::size_t i = 0; i < sweep_seeds; ++i) {
          sim::ScenarioSpec spec = st.spec;
          spec.name = sweep_scenario;
          spec.seed = seed + i;
          traces.push_back(sim::run_scenario(spec, &sim::default_force_model()).trace);
        }
      }
      SweepGrid grid;
      grid.delta_db = parse_list(deltas);
      grid.alpha_db2 = parse_list(alphas);
      grid.threshold_db2 = parse_list(thresholds);
      for (double h : parse_list(histories)) grid.history.push_back(static_cast<int>(h));
      const auto cells = sweep(traces, grid, pcfg);
      write_file(sweep_out, [&](std::ostream& o) { write_sweep(o, cells); });
      return kExitOk;
    }

    if (*bench_cmd) {
      bopt.seed = seed;
      bopt.config = pcfg;
      const BenchReport r = bench(bopt);
      write_file(report_out.empty() ? "-" : report_out, [&](std::ostream& o) { o << r.to_json(); });
      return r.pass ? kExitOk : kExitThreshold;
    }
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
