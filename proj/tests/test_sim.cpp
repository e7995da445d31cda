#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <sstream>

#include "forte/eval.hpp"
#include "forte/scenario.hpp"

using namespace forte;
using namespace forte::sim;

namespace {

constexpr double kDeg = 3.14159265358979323846 / 180.0;

SimObject block(double mass, double mu_s, double mu_k) {
  SimObject o;
  o.name = "block";
  o.mass_kg = mass;
  o.mu_static = mu_s;
  o.mu_kinetic = mu_k;
  o.width_m = 0.05;
  return o;
}

// Hold at theta, then lift; returns the first sample index with slip per
// finger (-1 if never) and the object height at the first slip.
struct LiftRun {
  std::array<long, 2> first{-1, -1};
  double height_at_slip = -1;
  std::size_t slip_samples = 0;
};

LiftRun lift(const SimObject& obj, double theta, double seconds = 4.0, std::uint64_t seed = 1) {
  World w(obj, SensorResponseModel{}, GripperModel{}, seed);
  w.settle_at(theta);
  LiftRun r;
  const auto n = static_cast<long>(seconds * 2000);
  for (long i = 0; i < n; ++i) {
    const auto out = w.tick(theta, i < 1000 ? 0.0 : 0.005);
    for (std::size_t f = 0; f < 2; ++f)
      if (out.truth.finger_slip[f] && r.first[f] < 0) r.first[f] = i;
    if (out.truth.slip && r.height_at_slip < 0) r.height_at_slip = out.truth.object_height_m;
    r.slip_samples += out.truth.slip;
  }
  return r;
}

std::string trace_text(const Trace& t) {
  std::ostringstream s;
  write_trace(s, t);
  return s.str();
}

}  // namespace

TEST_SUITE("sim") {

TEST_CASE("object and sensor invariants") {
  for (const auto& o : object_suite()) {
    CHECK(o.mass_kg > 0);
    CHECK(o.mu_kinetic > 0);
    CHECK(o.mu_kinetic < o.mu_static);
    CHECK(o.fragility_n > 0);
  }
  CHECK(objects_in_category("fragile").size() >= 5);
  CHECK(objects_in_category("slippery").size() >= 5);
  SimObject bad = block(0.1, 0.5, 0.6);
  CHECK_THROWS(bad.validate());
  SensorResponseModel s;
  CHECK(s.gain_per_n[0] > s.gain_per_n[1]);
  CHECK(s.gain_per_n[1] > s.gain_per_n[2]);
  CHECK(s.adc_bits == 11);
  CHECK_THROWS(find_object("no_such_thing"));
}

TEST_CASE("pressure is monotone in force over 0 to 8 N") {
  SensorResponseModel s;
  s.noise_std = 0;
  s.hum_amplitude = 0;
  s.drift_std_per_sqrt_s = 0;
  s.adc_offset_std_counts = 0;
  s.relaxation_fraction = 0;
  const SimObject obj = block(0.1, 1.0, 0.8);
  GripperModel g;
  double prev = -1.0;
  for (double force = 0.25; force <= 8.0; force += 0.25) {
    World w(obj, s, g, 0);
    const double th = g.theta_for_force(obj, force);
    w.settle_at(th);
    const auto out = w.tick(th, 0.0);
    CHECK(out.frame.channels[0] >= prev);
    prev = out.frame.channels[0];
    CHECK(out.frame.channels[0] > out.frame.channels[1]);
    CHECK(out.frame.channels[1] > out.frame.channels[2]);
  }
}

TEST_CASE("no contact means noise only and no slip") {
  const SimObject obj = block(0.1, 1.0, 0.8);
  GripperModel g;
  World w(obj, SensorResponseModel{}, g, 4);
  const double th = g.theta_zero_force(obj) + 0.05;
  w.settle_at(th);
  std::array<double, kNumChannels> sum{}, sq{};
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    const auto out = w.tick(th, i < 2000 ? 0.0 : 0.01);
    CHECK_FALSE(out.truth.slip);
    CHECK_FALSE(out.truth.contact[0]);
    CHECK(out.truth.grip_force_n == 0.0);
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      sum[c] += out.frame.channels[c];
      sq[c] += out.frame.channels[c] * out.frame.channels[c];
    }
  }
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    const double mean = sum[c] / n;
    CHECK(std::sqrt(sq[c] / n - mean * mean) < 0.01);
  }
  CHECK(w.burst_count() == 0);
}

TEST_CASE("Coulomb: 1 N per finger, mu_s 0.5, 1.5 N weight slips at lift") {
  const SimObject obj = block(1.5 / kGravity, 0.5, 0.4);
  GripperModel g;
  const double th = g.theta_for_force(obj, 1.0);
  CHECK(g.normal_force(obj, th) == doctest::Approx(1.0));
  const auto r = lift(obj, th);
  // 0.75 N of load per finger against 0.5 N of static friction
  CHECK(r.first[0] >= 1000);
  CHECK(r.first[1] >= 1000);
  CHECK(r.height_at_slip < 1e-3);
}

TEST_CASE("Coulomb: same load with mu_s 0.8 holds") {
  const SimObject obj = block(1.5 / kGravity, 0.8, 0.6);
  GripperModel g;
  const auto r = lift(obj, g.theta_for_force(obj, 1.0));
  CHECK(r.slip_samples == 0);
}

TEST_CASE("grasp offset makes the lighter-loaded finger slip first") {
  for (double offset : {-0.004, 0.004}) {
    SimObject obj = block(1.5 / kGravity, 0.5, 0.4);
    obj.grasp_offset_m = offset;
    GripperModel g;
    const double th = g.theta_for_force(obj, 1.0);
    const double beta = obj.asymmetry();
    REQUIRE(beta != 0.0);
    // normal forces n(1 + beta) and n(1 - beta) carry equal tangential load
    const int leading = beta > 0 ? 1 : 0;
    const auto r = lift(obj, th);
    REQUIRE(r.first[leading] >= 0);
    CHECK((r.first[1 - leading] < 0 || r.first[leading] < r.first[1 - leading]));
  }
}

TEST_CASE("every emitted value sits on the 11-bit grid") {
  ScenarioSpec spec;
  spec.name = "A";
  spec.seed = 2;
  spec.duration_s = 3.0;
  World w(find_object("apple"), SensorResponseModel{}, GripperModel{}, 9);
  w.settle_at(0.2);
  for (int i = 0; i < 6000; ++i) {
    const auto out = w.tick(0.2, i > 2000 ? 0.005 : 0.0);
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      CHECK(out.counts[c] >= 0);
      CHECK(out.counts[c] < 2048);
      CHECK(out.frame.channels[c] == normalize_raw(out.counts[c], 11, 1024));
      const double scaled = out.frame.channels[c] * 1024.0;
      CHECK(scaled == std::round(scaled));
    }
  }
}

TEST_CASE("object moves at most 2 m/s per tick") {
  // lift firmly, then open in mid-air so it falls
  const SimObject& obj = find_object("soap_bar");
  GripperModel g;
  World w(obj, SensorResponseModel{}, g, 3);
  const double hold = g.theta_for_force(obj, 3.0 * obj.required_grip_force());
  const double open = g.theta_zero_force(obj) + 0.1;
  double prev = 0.0;
  bool fell = false;
  w.settle_at(hold);
  for (int i = 0; i < 8000; ++i) {
    const auto out = w.tick(i < 4000 ? hold : open, i < 4000 ? 0.02 : 0.0);
    CHECK(std::abs(out.truth.object_height_m - prev) <= 2.0 / 2000.0 + 1e-12);
    fell = fell || out.truth.object_height_m < prev;
    prev = out.truth.object_height_m;
  }
  CHECK(fell);
}

TEST_CASE("slip ground truth needs contact on the slipping finger") {
  auto r = run_scenario([] {
    ScenarioSpec s;
    s.name = "A";
    s.seed = 5;
    return s;
  }());
  std::size_t slip = 0;
  for (std::size_t i = 0; i < r.trace.rows.size(); ++i) {
    if (!*r.trace.rows[i].slip_gt) continue;
    ++slip;
    CHECK((r.ground_truth[i].force_r_n > 0 || r.ground_truth[i].force_l_n > 0));
  }
  CHECK(slip > 0);
}

TEST_CASE("same scenario and seed give byte-identical traces") {
  for (const char* name : {"A", "B", "Q"}) {
    ScenarioSpec s;
    s.name = name;
    s.seed = 11;
    s.duration_s = 4.0;
    const auto a = run_scenario(s);
    const auto b = run_scenario(s);
    CHECK(trace_text(a.trace) == trace_text(b.trace));
    std::ostringstream ga, gb;
    write_ground_truth(ga, a.ground_truth);
    write_ground_truth(gb, b.ground_truth);
    CHECK(ga.str() == gb.str());
    s.seed = 12;
    CHECK(trace_text(run_scenario(s).trace) != trace_text(a.trace));
  }
}

TEST_CASE("scenario A just short of the grasp angle slips") {
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    ScenarioSpec s;
    s.name = "A";
    s.seed = seed;
    const auto probe = run_scenario(s);
    // larger angle is more open
    s.theta_deg = probe.info.at("theta_grasp_deg") + 0.05;
    const auto r = run_scenario(s);
    CHECK(r.info.at("applied_force_n") < r.info.at("required_force_n"));
    CHECK(slip_events(r.trace).size() >= 1);
  }
}

TEST_CASE("unknown scenario") {
  ScenarioSpec s;
  s.name = "Z";
  CHECK_FALSE(is_scenario("Z"));
  CHECK_THROWS(run_scenario(s));
}

TEST_CASE("scenario C with ON_OFF crushes") {
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    ScenarioSpec s;
    s.name = "C";
    s.seed = seed;
    s.controller.policy = Policy::OnOff;
    const auto r = run_scenario(s);
    CHECK(closed_grip_force(r.object, s.gripper) > r.object.fragility_n);
    CHECK(r.outcome == "CRUSHED");
  }
}

TEST_CASE("preload exit force stays within one closing step of f_init") {
  GripperModel g;
  ControllerConfig cfg;
  for (const char* name : {"grape", "apple", "jam_jar", "soap_bar"}) {
    const SimObject& obj = find_object(name);
    const double th = g.theta_for_force(obj, 1.0);
    const double step = g.normal_force(obj, th - cfg.closing_deg_per_tick * kDeg) - g.normal_force(obj, th);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      GraspSetup setup;
      setup.object = obj;
      setup.seed = seed;
      setup.record_trace = false;
      const auto r = run_grasp(setup, default_force_model());
      INFO(name, " seed ", seed);
      CHECK(r.preload_force_n >= cfg.f_init_n);
      CHECK(r.preload_force_n <= cfg.f_init_n + step + 1e-9);
    }
  }
}

TEST_CASE("FORTE on a low-friction jar increments then succeeds") {
  const auto& jar = find_object("jam_jar");
  CHECK(jar.required_grip_force() > ControllerConfig{}.f_init_n);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    GraspSetup setup;
    setup.object = jar;
    setup.seed = seed;
    const auto r = run_grasp(setup, default_force_model());
    CHECK(r.outcome == Phase::Success);
    CHECK(r.increments >= 1);
    CHECK(r.max_normal_force_n < jar.fragility_n);
  }
}

TEST_CASE("scenario B dataset trains end to end") {
  const auto dir = std::filesystem::temp_directory_path() / "forte_sim_dataset";
  std::filesystem::remove_all(dir);
  const auto traces = generate_press_traces("B", 40, 3);
  CHECK(traces.size() == 40);
  write_dataset(dir.string(), traces);
  const auto back = read_dataset(dir.string());
  REQUIRE(back.size() == traces.size());
  CHECK(back[7].tag == traces[7].tag);
  CHECK(trace_text(back[7].trace) == trace_text(traces[7].trace));
  const auto trials = traces_to_trials(back, PipelineConfig{}, 2.0);
  const auto cv = cross_validate(trials, 5, SvrParams{}, 1);
  CHECK(std::isfinite(cv.mean_rmse));
  CHECK(cv.mean_rmse < 0.5);
  std::filesystem::remove_all(dir);
}

}
