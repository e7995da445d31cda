// One line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "forte/eval.hpp"
#include "forte/scenario.hpp"
#include "forte/slip.hpp"
#include "oracles.hpp"

using namespace forte;
namespace fs = std::filesystem;

namespace {

struct Result {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Result psd_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  PipelineConfig cfg;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 0.05);
  std::uniform_real_distribution<double> f(1.0, 999.0), ph(0.0, 6.283185307179586);
  double worst = 0.0;
  for (int w = 0; w < 100; ++w) {
    std::vector<double> x(static_cast<std::size_t>(cfg.fft_window));
    const double fr = f(rng), p = ph(rng);
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] = g(rng) + 0.1 * std::sin(6.283185307179586 * fr * static_cast<double>(i) / cfg.sample_rate_hz + p);
    const auto got = compute_psd(x, cfg);
    const auto want = oracle::periodogram(x, cfg.sample_rate_hz);
    if (got.size() != want.size()) return {false, "bin count differs"};
    for (std::size_t k = 0; k < got.size(); ++k)
      worst = std::max(worst, std::abs(got[k] - want[k]) / std::max(std::abs(want[k]), 1e-300));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {worst <= 1e-6 && secs < 10.0,
          fmt("max relative bin error %.2e over 100 windows of %d", worst, cfg.fft_window)};
}

Result epsilon_floor() {
  PipelineConfig cfg;
  std::vector<double> zero(static_cast<std::size_t>(cfg.fft_window), 0.0);
  const double floor_db = psd_feature(compute_psd(zero, cfg), cfg);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> expo(-300, 300), kind(0, 4);
  std::size_t bad = 0;
  for (int w = 0; w < 10000; ++w) {
    std::vector<double> x(zero.size());
    const double scale = std::pow(10.0, expo(rng) / 10.0);
    const int k = kind(rng);
    for (std::size_t i = 0; i < x.size(); ++i) {
      switch (k) {
        case 0: x[i] = u(rng); break;
        case 1: x[i] = u(rng) * scale; break;
        case 2: x[i] = i % 2 ? 1.0 : -1.0; break;
        case 3: x[i] = (i == x.size() / 2) ? scale : 0.0; break;
        default: x[i] = std::nextafter(0.0, 1.0) * (i % 3); break;
      }
    }
    const double v = psd_feature(compute_psd(x, cfg), cfg);
    if (!std::isfinite(v)) ++bad;
  }
  const bool exact = floor_db == -120.0;
  return {exact && bad == 0, fmt("zero input %.17g dB, %zu non-finite of 10000 fuzz windows", floor_db, bad)};
}

Result gated_variance_oracle() {
  PipelineConfig cfg;
  const std::size_t n = 100000;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> rise(0.0, 1.5), fallback(-3.0, 3.0);
  std::bernoulli_distribution keep_rising(0.9);
  std::vector<double> seq(n);
  double v = -60.0;
  for (std::size_t i = 0; i < n; ++i) {
    v = keep_rising(rng) ? v + rise(rng) : -60.0 + fallback(rng);
    seq[i] = v;
  }
  FeatureHistory h(static_cast<std::size_t>(cfg.history_length));
  double worst = 0.0;
  std::size_t open = 0;
  for (std::size_t i = 0; i < n; ++i) {
    h.push(seq[i]);
    const double s = gated_variance(h, cfg);
    const double b = oracle::gated_variance(seq, i + 1, static_cast<std::size_t>(cfg.history_length),
                                            cfg.monotonic_increment_db);
    worst = std::max(worst, std::abs(s - b));
    open += b > 0.0;
  }
  return {worst <= 1e-9, fmt("max |streaming - batch| %.2e over %zu steps (%zu with the gate open)", worst, n, open)};
}

Result detection_latency() {
  EvalReport total;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    sim::ScenarioSpec s;
    s.name = "A";
    s.seed = seed;
    total.merge(replay(sim::run_scenario(s).trace, ReplayOptions{}).report);
  }
  const double recall = total.gt_events ? double(total.detected_events) / double(total.gt_events) : 1.0;
  const bool pass = total.max_latency_ms() <= 100.0 && recall >= 0.9 && total.false_alarms == 0;
  return {pass, fmt("%zu/%zu events detected (recall %.3f), max latency %.1f ms, mean %.1f ms, %zu false alarms",
                    total.detected_events, total.gt_events, recall, total.max_latency_ms(), total.mean_latency_ms(),
                    total.false_alarms)};
}

Result quiescent_silence() {
  sim::ScenarioSpec s;
  s.name = "Q";
  s.seed = 0;
  s.duration_s = 600.0;
  const auto res = replay(sim::run_scenario(s).trace, ReplayOptions{});
  std::size_t firing = 0;
  for (const auto& r : res.timeline) firing += r.eta;
  return {firing == 0, fmt("%zu eta steps of %zu over 600 s", firing, res.timeline.size())};
}

Result throughput() {
  BenchOptions opt;
  const auto r = bench(opt);
  return {r.pass, fmt("ingest %.0f frames/s, slip p99 %.1f us, predict p99 %.1f us with %zu support vectors",
                      r.ingest_fps, r.slip_p99_us, r.predict_p99_us, opt.support_vectors)};
}

Result force_estimation() {
  PipelineConfig cfg;
  SvrParams p;
  const auto b = sim::traces_to_trials(sim::generate_press_traces("B", 240, 7), cfg, 2.0);
  const auto cv = cross_validate(b, 10, p, 1);
  const auto e = sim::generate_press_traces("E", 60, 9);
  const auto full = cross_validate(sim::traces_to_trials(e, cfg, 2.0, FeatureSet::Full), 10, p, 1, FeatureSet::Full);
  const auto cur = cross_validate(sim::traces_to_trials(e, cfg, 2.0, FeatureSet::CurrentOnly), 10, p, 1,
                                  FeatureSet::CurrentOnly);
  const bool pass = cv.mean_rmse <= 0.25 && full.mean_rmse < cur.mean_rmse;
  return {pass, fmt("B 240 trials 10-fold mean RMSE %.4f N; E drift set 24-dim %.4f N vs 6-dim %.4f N", cv.mean_rmse,
                    full.mean_rmse, cur.mean_rmse)};
}

Result policy_ordering() {
  const auto& model = sim::default_force_model();
  sim::GripperModel gripper;
  std::map<Policy, int> wins;
  int runs = 0;
  std::size_t crush_rule = 0, crush_broken = 0, drop_rule = 0, drop_broken = 0;
  for (const auto& obj : sim::object_suite()) {
    const bool must_crush = obj.fragility_n < sim::closed_grip_force(obj, gripper);
    const bool must_drop = obj.required_grip_force() > ControllerConfig{}.f_init_n;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      ++runs;
      for (Policy pol : {Policy::Forte, Policy::OnOff, Policy::WoSlip}) {
        sim::GraspSetup g;
        g.object = obj;
        g.seed = seed;
        g.controller.policy = pol;
        g.record_trace = false;
        const auto r = sim::run_grasp(g, model);
        wins[pol] += r.outcome == Phase::Success;
        if (pol == Policy::OnOff && must_crush) {
          ++crush_rule;
          crush_broken += r.outcome != Phase::Crushed;
        }
        if (pol == Policy::WoSlip && must_drop) {
          ++drop_rule;
          drop_broken += r.outcome != Phase::Dropped;
        }
      }
    }
  }
  const bool pass = wins[Policy::Forte] > std::max(wins[Policy::OnOff], wins[Policy::WoSlip]) && crush_broken == 0 &&
                    drop_broken == 0;
  return {pass, fmt("success FORTE %d/%d, ON_OFF %d, WO_SLIP %d; ON_OFF crushed %zu/%zu, WO_SLIP dropped %zu/%zu",
                    wins[Policy::Forte], runs, wins[Policy::OnOff], wins[Policy::WoSlip], crush_rule - crush_broken,
                    crush_rule, drop_rule - drop_broken, drop_rule)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// stdout is compared too, one file per command
int run_cli(const fs::path& dir, const std::string& args, std::size_t index) {
  const auto out = dir / ("stdout_" + std::to_string(index) + ".txt");
  const std::string cmd = std::string(FORTE_CLI) + " " + args + " > " + out.string() + " 2>/dev/null";
  return std::system(cmd.c_str());
}

Result determinism() {
  const fs::path root = fs::temp_directory_path() / "forte_acceptance_determinism";
  fs::remove_all(root);
  std::vector<std::string> failures;
  for (int pass = 0; pass < 2; ++pass) {
    const fs::path d = root / std::to_string(pass);
    fs::create_directories(d);
    const auto p = [&](const char* name) { return (d / name).string(); };
    const std::vector<std::string> cmds{
        "--seed 7 simulate --scenario A --out-trace " + p("a.csv") + " --out-gt " + p("a_gt.csv"),
        "replay " + p("a.csv") + " --events " + p("events.csv") + " --timeline " + p("timeline.csv") + " --report " +
            p("report.json"),
        "--seed 2 grasp --object jam_jar --log " + p("session.csv") + " --out-trace " + p("g.csv") + " --out-gt " +
            p("g_gt.csv"),
        "--seed 1 simulate --scenario B --trials 6 --out-dir " + p("dataset"),
        "train-force --dataset " + p("dataset") + " --out " + p("model.json"),
        "eval-force --dataset " + p("dataset") + " --folds 3 --report " + p("cv.json"),
        "replay " + p("a.csv") + " --force-model " + p("model.json") + " --timeline " + p("timeline_force.csv"),
        "--seed 3 sweep --scenario A --seeds 3 --delta 0.1,0.2 --alpha 0.6 --threshold 1,2 --history 15 --out " +
            p("sweep.csv"),
    };
    for (std::size_t i = 0; i < cmds.size(); ++i)
      if (run_cli(d, cmds[i], i) != 0) failures.push_back("exit status: " + cmds[i]);
  }
  std::size_t files = 0;
  const fs::path a = root / "0", b = root / "1";
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    ++files;
    const auto rel = fs::relative(e.path(), a);
    if (!fs::exists(b / rel) || slurp(e.path()) != slurp(b / rel)) failures.push_back("differs: " + rel.string());
  }
  fs::remove_all(root);
  std::string detail = fmt("8 commands run twice, %zu output files compared", files);
  for (const auto& f : failures) detail += "; " + f;
  return {failures.empty() && files > 0, detail};
}

Result metric_conventions() {
  const auto quiet = EvalReport::from_labels({{false, false}, {false, false}, {false, false}});
  std::mt19937_64 rng(10);
  std::size_t mismatches = 0;
  for (int set = 0; set < 1000; ++set) {
    const auto n = static_cast<std::size_t>(rng() % 50);
    std::bernoulli_distribution g((rng() % 5) / 4.0), pr((rng() % 5) / 4.0);
    std::vector<TrialLabel> labels(n);
    long tp = 0, fp = 0, fn = 0, tn = 0;
    for (auto& l : labels) {
      l = {g(rng), pr(rng)};
      (l.gt ? (l.pred ? tp : fn) : (l.pred ? fp : tn)) += 1;
    }
    const double p = tp + fp ? double(tp) / double(tp + fp) : 1.0;
    const double r = tp + fn ? double(tp) / double(tp + fn) : 1.0;
    const double f1 = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    const double acc = n ? double(tp + tn) / double(n) : 1.0;
    const auto rep = EvalReport::from_labels(labels);
    const auto off = [](double x, double y) { return std::abs(x - y) > 1e-12; };
    if (off(rep.precision, p) || off(rep.recall, r) || off(rep.f1, f1) || off(rep.accuracy, acc)) ++mismatches;
  }
  return {quiet.precision == 1.0 && mismatches == 0,
          fmt("all-abstention precision %.1f; %zu/1000 random label sets disagree with the oracle", quiet.precision,
              mismatches)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Result()>>> criteria{
      {"PSD equals direct DFT periodogram", psd_oracle},
      {"epsilon floor and finite features", epsilon_floor},
      {"streaming gated variance equals batch", gated_variance_oracle},
      {"scenario A detection latency and recall", detection_latency},
      {"10-minute quiescent trace stays silent", quiescent_silence},
      {"throughput and latency budget", throughput},
      {"force estimation cross-validation", force_estimation},
      {"grasp policy ordering", policy_ordering},
      {"byte-identical CLI outputs", determinism},
      {"metric conventions", metric_conventions},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Result r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, std::string("threw: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2zu %s  %s: %s [%.1f s]\n", i + 1, r.pass ? "PASS" : "FAIL", criteria[i].first,
                r.detail.c_str(), s);
    std::fflush(stdout);
    failed += !r.pass;
  }
  return failed ? 1 : 0;
}
