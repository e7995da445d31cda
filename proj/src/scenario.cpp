#include "forte/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "forte/slip.hpp"

namespace forte::sim {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

SimObject make(const char* name, const char* geometry, const char* category, double mass, double width, double mu_s,
               double mu_k, double fragility) {
  SimObject o;
  o.name = name;
  o.geometry = geometry;
  o.category = category;
  o.mass_kg = mass;
  o.width_m = width;
  o.mu_static = mu_s;
  o.mu_kinetic = mu_k;
  o.fragility_n = fragility;
  return o;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

// Seed streams for the different random draws of one scenario run.
std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

const std::vector<SimObject>& object_suite() {
  static const std::vector<SimObject> suite = [] {
    std::vector<SimObject> s;
    s.push_back(make("raspberry", "sphere", "fragile", 0.005, 0.022, 0.8, 0.6, 0.8));
    s.push_back(make("blueberry", "sphere", "fragile", 0.002, 0.015, 0.7, 0.55, 1.0));
    s.push_back(make("grape", "ellipsoid", "fragile", 0.007, 0.020, 0.6, 0.45, 1.2));
    s.push_back(make("cherry_tomato", "sphere", "fragile", 0.015, 0.028, 0.9, 0.7, 1.5));
    s.push_back(make("marshmallow", "cylinder", "fragile", 0.007, 0.035, 1.0, 0.8, 0.9));
    s.push_back(make("strawberry", "cone", "fragile", 0.015, 0.030, 0.9, 0.7, 1.3));
    s.push_back(make("soap_bar", "box", "slippery", 0.120, 0.045, 0.50, 0.38, kInf));
    s.push_back(make("metal_can", "cylinder", "slippery", 0.120, 0.066, 0.50, 0.38, kInf));
    s.push_back(make("plastic_bottle", "cylinder", "slippery", 0.100, 0.065, 0.45, 0.34, kInf));
    s.push_back(make("pringles", "cylinder", "slippery", 0.180, 0.075, 0.70, 0.53, kInf));
    s.push_back(make("jam_jar", "cylinder", "slippery", 0.145, 0.069, 0.60, 0.45, kInf));
    s.push_back(make("apple", "sphere", "everyday", 0.231, 0.080, 1.20, 0.90, kInf));
    s.push_back(make("mug", "cylinder", "everyday", 0.300, 0.080, 1.00, 0.75, kInf));
    s.push_back(make("banana", "curved", "everyday", 0.120, 0.035, 0.80, 0.60, kInf));
    return s;
  }();
  return suite;
}

const SimObject& find_object(const std::string& name) {
  for (const auto& o : object_suite())
    if (o.name == name) return o;
  throw std::invalid_argument("unknown object '" + name + "'");
}

std::vector<SimObject> objects_in_category(const std::string& category) {
  std::vector<SimObject> out;
  for (const auto& o : object_suite())
    if (o.category == category) out.push_back(o);
  return out;
}

const std::vector<std::string>& indentor_tags() {
  static const std::vector<std::string> tags{"flat", "round", "edge", "sphere", "cylinder", "wedge"};
  return tags;
}

SimObject indentor(std::size_t tag_index) {
  static const std::array<std::array<double, 3>, 6> profiles{{
      {1.0, 1.0, 1.0},
      {1.1, 0.95, 0.8},
      {1.25, 0.85, 0.7},
      {0.9, 1.1, 0.9},
      {1.0, 1.0, 0.9},
      {0.8, 1.0, 1.15},
  }};
  const std::size_t i = tag_index % profiles.size();
  SimObject o = make(("indentor_" + indentor_tags()[i]).c_str(), indentor_tags()[i].c_str(), "indentor", 0.05, 0.05,
                     1.0, 0.8, kInf);
  o.gain_profile = profiles[i];
  return o;
}

double theta_grasp(const SimObject& obj, const GripperModel& gripper) {
  return gripper.theta_for_force(obj, obj.required_grip_force());
}

double closed_grip_force(const SimObject& obj, const GripperModel& gripper, double theta_closed_rad) {
  return gripper.normal_force(obj, theta_closed_rad);
}

void write_ground_truth(std::ostream& out, const std::vector<GtRow>& rows) {
  out << "t,slip_gt,force_R_n,force_L_n,phase\n";
  for (const auto& r : rows)
    out << format_double(r.t) << ',' << r.slip << ',' << format_double(r.force_r_n) << ','
        << format_double(r.force_l_n) << ',' << r.phase << '\n';
}

// ---------------------------------------------------------------------------

void ScenarioSpec::apply(const KeyValues& kv) {
  name = kv.get_string("scenario", name);
  seed = static_cast<std::uint64_t>(kv.get_double("seed", static_cast<double>(seed)));
  if (kv.has("object")) object_name = kv.get_string("object", "");

  bool touched = false;
  SimObject o = object ? *object : (object_name ? find_object(*object_name) : SimObject{});
  const auto obj_double = [&](const char* key, double& field) {
    const std::string k = std::string("object.") + key;
    if (kv.has(k)) {
      field = kv.get_double(k, field);
      touched = true;
    }
  };
  if (kv.has("object.name")) {
    o.name = kv.get_string("object.name", o.name);
    touched = true;
  }
  if (kv.has("object.category")) {
    o.category = kv.get_string("object.category", o.category);
    touched = true;
  }
  obj_double("mass_kg", o.mass_kg);
  obj_double("width_m", o.width_m);
  obj_double("mu_static", o.mu_static);
  obj_double("mu_kinetic", o.mu_kinetic);
  obj_double("fragility_n", o.fragility_n);
  obj_double("contact_length_m", o.contact_length_m);
  obj_double("normal_stiffness_n_per_m", o.normal_stiffness_n_per_m);
  obj_double("gain_distal", o.gain_profile[0]);
  obj_double("gain_middle", o.gain_profile[1]);
  obj_double("gain_root", o.gain_profile[2]);
  if (touched) {
    o.validate();
    object = o;
  }

  auto& s = sensor;
  s.saturation_n = kv.get_double("sensor.saturation_n", s.saturation_n);
  s.shear_gain_per_n = kv.get_double("sensor.shear_gain_per_n", s.shear_gain_per_n);
  s.burst_amplitude = kv.get_double("sensor.burst_amplitude", s.burst_amplitude);
  s.burst_reference_n = kv.get_double("sensor.burst_reference_n", s.burst_reference_n);
  s.burst_floor = kv.get_double("sensor.burst_floor", s.burst_floor);
  s.burst_freq_min_hz = kv.get_double("sensor.burst_freq_min_hz", s.burst_freq_min_hz);
  s.burst_freq_max_hz = kv.get_double("sensor.burst_freq_max_hz", s.burst_freq_max_hz);
  s.burst_decay_min_s = kv.get_double("sensor.burst_decay_min_s", s.burst_decay_min_s);
  s.burst_decay_max_s = kv.get_double("sensor.burst_decay_max_s", s.burst_decay_max_s);
  s.noise_std = kv.get_double("sensor.noise_std", s.noise_std);
  s.hum_amplitude = kv.get_double("sensor.hum_amplitude", s.hum_amplitude);
  s.hum_freq_hz = kv.get_double("sensor.hum_freq_hz", s.hum_freq_hz);
  s.drift_std_per_sqrt_s = kv.get_double("sensor.drift_std_per_sqrt_s", s.drift_std_per_sqrt_s);
  s.drift_bound = kv.get_double("sensor.drift_bound", s.drift_bound);
  s.relaxation_fraction = kv.get_double("sensor.relaxation_fraction", s.relaxation_fraction);
  s.relaxation_time_s = kv.get_double("sensor.relaxation_time_s", s.relaxation_time_s);
  s.adc_bits = kv.get_int("sensor.adc_bits", s.adc_bits);
  s.adc_offset_std_counts = kv.get_double("sensor.adc_offset_std_counts", s.adc_offset_std_counts);
  for (std::size_t j = 0; j < 3; ++j) {
    s.gain_per_n[j] = kv.get_double("sensor.gain_" + std::to_string(j), s.gain_per_n[j]);
    s.vibration_weight[j] = kv.get_double("sensor.vibration_weight_" + std::to_string(j), s.vibration_weight[j]);
  }
  s.validate();

  auto& g = gripper;
  g.gap_per_rad = kv.get_double("gripper.gap_per_rad", g.gap_per_rad);
  g.servo_time_constant_s = kv.get_double("gripper.servo_time_constant_s", g.servo_time_constant_s);
  g.arm_time_constant_s = kv.get_double("gripper.arm_time_constant_s", g.arm_time_constant_s);
  g.tangential_stiffness_n_per_m = kv.get_double("gripper.tangential_stiffness_n_per_m", g.tangential_stiffness_n_per_m);
  g.slide_duration_s = kv.get_double("gripper.slide_duration_s", g.slide_duration_s);
  g.theta_open_rad = kv.get_double("gripper.theta_open_rad", g.theta_open_rad);

  apply_pipeline_config(kv, pipeline, "pipeline.");
  apply_controller_config(kv, controller, "controller.");

  if (kv.has("theta_deg")) theta_deg = kv.get_double("theta_deg", 0.0);
  if (kv.has("force_fraction")) force_fraction = kv.get_double("force_fraction", 0.0);
  if (kv.has("grasp_offset_m")) grasp_offset_m = kv.get_double("grasp_offset_m", 0.0);
  if (kv.has("duration_s")) duration_s = kv.get_double("duration_s", 0.0);
  if (kv.has("indentor")) indentor = static_cast<std::size_t>(kv.get_int("indentor", 0));
  lift_speed_m_per_s = kv.get_double("lift_speed_m_per_s", lift_speed_m_per_s);
  still_s = kv.get_double("still_s", still_s);
}

bool is_scenario(const std::string& name) {
  return name == "A" || name == "B" || name == "C" || name == "D" || name == "E" || name == "Q";
}

namespace {

void record(ScenarioResult& r, const TickOutput& o, const char* phase) {
  TraceRow row;
  row.frame = o.frame;
  row.force_n = o.truth.grip_force_n;
  row.slip_gt = o.truth.slip ? 1 : 0;
  r.trace.rows.push_back(row);
  GtRow gt;
  gt.t = o.frame.t;
  gt.slip = o.truth.slip ? 1 : 0;
  gt.force_r_n = o.truth.normal_force_n[0];
  gt.force_l_n = o.truth.normal_force_n[1];
  gt.phase = phase;
  r.ground_truth.push_back(std::move(gt));
}

SimObject pick_object(const ScenarioSpec& spec, const SimObject& fallback) {
  if (spec.object) return *spec.object;
  if (spec.object_name) return find_object(*spec.object_name);
  return fallback;
}

std::size_t samples_for(double seconds, double fs) { return static_cast<std::size_t>(std::llround(seconds * fs)); }

ScenarioResult run_lift(const ScenarioSpec& spec) {
  std::mt19937_64 rng(mix(spec.seed, 1));
  SimObject obj = pick_object(spec, find_object(spec.seed % 2 == 0 ? "apple" : "jam_jar"));
  const double offset_draw = uniform(rng, -0.004, 0.004);
  const double frac_draw = uniform(rng, 0.0, 1.0);
  obj.grasp_offset_m = spec.grasp_offset_m.value_or(offset_draw);
  const double required = obj.required_grip_force();
  const double frac = spec.force_fraction.value_or(frac_draw);
  const double theta = spec.theta_deg ? *spec.theta_deg * kDeg : spec.gripper.theta_for_force(obj, frac * required);

  World w(obj, spec.sensor, spec.gripper, mix(spec.seed, 2), spec.pipeline.sample_rate_hz);
  w.settle_at(theta);
  ScenarioResult r;
  r.name = spec.name;
  r.object = obj;
  r.trace.has_force = r.trace.has_slip = true;
  const double fs = spec.pipeline.sample_rate_hz;
  const std::size_t n = samples_for(spec.duration_s.value_or(9.5), fs);
  const std::size_t still = samples_for(spec.still_s, fs);
  for (std::size_t i = 0; i < n; ++i) {
    const bool lifting = i >= still;
    record(r, w.tick(theta, lifting ? spec.lift_speed_m_per_s : 0.0), lifting ? "lift" : "hold");
  }
  r.outcome = "completed";
  r.info["theta_hat_deg"] = theta / kDeg;
  r.info["theta_grasp_deg"] = theta_grasp(obj, spec.gripper) / kDeg;
  r.info["theta_zero_force_deg"] = spec.gripper.theta_zero_force(obj) / kDeg;
  r.info["required_force_n"] = required;
  r.info["applied_force_n"] = spec.gripper.normal_force(obj, theta);
  r.info["lift_onset_s"] = static_cast<double>(still) / fs;
  return r;
}

ScenarioResult run_hold(const ScenarioSpec& spec) {
  std::mt19937_64 rng(mix(spec.seed, 1));
  SimObject obj = pick_object(spec, find_object("apple"));
  obj.grasp_offset_m = spec.grasp_offset_m.value_or(uniform(rng, -0.004, 0.004));
  const double theta = spec.theta_deg ? *spec.theta_deg * kDeg
                                      : spec.gripper.theta_for_force(obj, 1.5 * obj.required_grip_force());
  World w(obj, spec.sensor, spec.gripper, mix(spec.seed, 2), spec.pipeline.sample_rate_hz);
  w.settle_at(theta);
  ScenarioResult r;
  r.name = spec.name;
  r.object = obj;
  r.trace.has_force = r.trace.has_slip = true;
  const std::size_t n = samples_for(spec.duration_s.value_or(600.0), spec.pipeline.sample_rate_hz);
  r.trace.rows.reserve(n);
  r.ground_truth.reserve(n);
  for (std::size_t i = 0; i < n; ++i) record(r, w.tick(theta, 0.0), "hold");
  r.outcome = "completed";
  r.info["theta_hat_deg"] = theta / kDeg;
  r.info["applied_force_n"] = spec.gripper.normal_force(obj, theta);
  return r;
}

struct Press {
  double target_rad;
  double hold_s;
  double rest_s;
};

// Close onto an indentor, hold, release; repeated for every press.
ScenarioResult run_press(const ScenarioSpec& spec, bool stress) {
  std::mt19937_64 rng(mix(spec.seed, 1));
  const std::size_t tag = spec.indentor.value_or(static_cast<std::size_t>(spec.seed % indentor_tags().size()));
  SimObject obj = pick_object(spec, indentor(tag));
  SensorResponseModel sensor = spec.sensor;
  if (stress) {
    sensor.drift_std_per_sqrt_s = std::max(sensor.drift_std_per_sqrt_s, 0.004);
    sensor.drift_bound = std::max(sensor.drift_bound, 0.15);
    sensor.relaxation_fraction = std::max(sensor.relaxation_fraction, 0.3);
    sensor.relaxation_time_s = std::min(sensor.relaxation_time_s, 3.0);
  }
  const GripperModel& g = spec.gripper;
  const double theta_zero = g.theta_zero_force(obj);
  const double theta_start = theta_zero + 5.0 * kDeg;
  const double fs = spec.pipeline.sample_rate_hz;

  std::vector<Press> presses;
  const int count = stress ? 3 : 1;
  for (int k = 0; k < count; ++k) {
    Press p;
    p.target_rad = uniform(rng, 0.0, theta_zero);
    p.hold_s = stress ? uniform(rng, 2.0, 4.0) : 4.0;
    p.rest_s = stress ? uniform(rng, 0.5, 1.5) : 1.0;
    presses.push_back(p);
  }
  if (spec.theta_deg) presses.front().target_rad = *spec.theta_deg * kDeg;

  World w(obj, sensor, g, mix(spec.seed, 2), fs);
  w.settle_at(theta_start);
  ScenarioResult r;
  r.name = spec.name;
  r.object = obj;
  r.trace.has_force = r.trace.has_slip = true;
  constexpr double kInit = 1.0, kRamp = 0.5;

  auto run = [&](double seconds, auto theta_of, const char* phase) {
    const std::size_t n = samples_for(seconds, fs);
    for (std::size_t i = 0; i < n; ++i) record(r, w.tick(theta_of(static_cast<double>(i) / n), 0.0), phase);
  };
  run(kInit, [&](double) { return theta_start; }, "init");
  for (const auto& p : presses) {
    run(kRamp, [&](double u) { return theta_start + (p.target_rad - theta_start) * u; }, "press");
    run(p.hold_s, [&](double) { return p.target_rad; }, "hold");
    run(kRamp, [&](double u) { return p.target_rad + (theta_start - p.target_rad) * u; }, "release");
    run(p.rest_s, [&](double) { return theta_start; }, "rest");
  }
  if (spec.duration_s) {
    const double have = static_cast<double>(r.trace.rows.size()) / fs;
    if (*spec.duration_s > have) run(*spec.duration_s - have, [&](double) { return theta_start; }, "rest");
  }
  r.outcome = "completed";
  r.info["indentor"] = static_cast<double>(tag % indentor_tags().size());
  r.info["target_force_n"] = g.normal_force(obj, presses.front().target_rad);
  r.info["theta_zero_force_deg"] = theta_zero / kDeg;
  return r;
}

ScenarioResult run_closed_loop(const ScenarioSpec& spec, const char* category, const ForceModel* model) {
  std::mt19937_64 rng(mix(spec.seed, 1));
  const auto pool = objects_in_category(category);
  SimObject obj = pick_object(spec, pool[spec.seed % pool.size()]);
  obj.grasp_offset_m = spec.grasp_offset_m.value_or(uniform(rng, -0.1, 0.1) * obj.width_m);
  GraspSetup setup;
  setup.object = obj;
  setup.seed = mix(spec.seed, 2);
  setup.sensor = spec.sensor;
  setup.gripper = spec.gripper;
  setup.pipeline = spec.pipeline;
  setup.controller = spec.controller;
  const GraspResult g = run_grasp(setup, model ? *model : default_force_model());
  ScenarioResult r;
  r.name = spec.name;
  r.object = obj;
  r.trace = g.trace;
  r.ground_truth = g.ground_truth;
  r.session_log = g.log;
  r.outcome = phase_name(g.outcome);
  r.info["increments"] = g.increments;
  r.info["slip_onsets"] = static_cast<double>(g.slip_onsets);
  r.info["required_force_n"] = g.required_force_n;
  r.info["max_normal_force_n"] = g.max_normal_force_n;
  r.info["preload_force_n"] = g.preload_force_n;
  return r;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioSpec& spec, const ForceModel* force_model) {
  if (spec.name == "A") return run_lift(spec);
  if (spec.name == "B") return run_press(spec, false);
  if (spec.name == "E") return run_press(spec, true);
  if (spec.name == "Q") return run_hold(spec);
  if (spec.name == "C") return run_closed_loop(spec, "fragile", force_model);
  if (spec.name == "D") return run_closed_loop(spec, "slippery", force_model);
  throw std::invalid_argument("unknown scenario '" + spec.name + "'");
}

// ---------------------------------------------------------------------------

GraspResult run_grasp(const GraspSetup& setup, const ForceModel& force_model) {
  const double fs = setup.pipeline.sample_rate_hz;
  ControllerConfig ccfg = setup.controller;
  ccfg.sample_rate_hz = fs;
  World w(setup.object, setup.sensor, setup.gripper, setup.seed, fs);
  GraspController ctl(ccfg, setup.gripper.theta_open_rad);
  ControlCommand cmd{setup.gripper.theta_open_rad, 0.0};
  w.settle_at(cmd.theta_rad);

  GraspResult res;
  res.required_force_n = setup.object.required_grip_force();
  res.trace.has_force = res.trace.has_slip = true;

  const auto tick_every = static_cast<std::size_t>(std::max<long>(1, std::lround(fs / ccfg.tick_hz)));
  const std::size_t init_samples = std::max<std::size_t>(1, samples_for(ccfg.init_seconds, fs));
  const std::size_t max_samples = samples_for(setup.max_session_s, fs);

  std::vector<SensorFrame> init_frames;
  std::optional<SlipPipeline> pipe;
  std::optional<ForceEstimator> est;
  std::uint64_t onsets = 0;
  bool eta = false;
  double start_z = 0.0;

  auto feed = [&](const SensorFrame& f) {
    if (const SlipState* st = pipe->push(f)) {
      eta = st->eta;
      if (st->rising_edge) ++onsets;
    }
    est->update(pipe->ring());
  };

  for (std::size_t i = 0; i < max_samples; ++i) {
    const TickOutput o = w.tick(cmd.theta_rad, cmd.arm_velocity);
    if (i == 0) start_z = o.truth.object_height_m;
    const Phase phase = ctl.phase();
    res.max_normal_force_n = std::max({res.max_normal_force_n, o.truth.normal_force_n[0], o.truth.normal_force_n[1]});
    if (phase == Phase::Lifting) {
      res.slip_gt_lifting = res.slip_gt_lifting || o.truth.slip;
      res.slip_pred_lifting = res.slip_pred_lifting || eta;
    }
    if (setup.record_trace) {
      TraceRow row;
      row.frame = o.frame;
      row.force_n = o.truth.grip_force_n;
      row.slip_gt = o.truth.slip ? 1 : 0;
      res.trace.rows.push_back(row);
      res.ground_truth.push_back(
          GtRow{o.frame.t, o.truth.slip ? 1 : 0, o.truth.normal_force_n[0], o.truth.normal_force_n[1], phase_name(phase)});
    }

    if (!pipe) {
      init_frames.push_back(o.frame);
      if (init_frames.size() >= init_samples) {
        const ChannelVector base = estimate_baseline(init_frames, setup.pipeline.baseline_seconds);
        pipe.emplace(setup.pipeline, base);
        est.emplace(force_model, fs);
        for (const auto& f : init_frames) feed(f);
        init_frames.clear();
      }
    } else {
      feed(o.frame);
    }

    if ((i + 1) % tick_every != 0) continue;
    ControlInput in;
    in.t = w.time();
    in.ring = pipe ? &pipe->ring() : nullptr;
    in.eta = eta;
    in.slip_onsets = onsets;
    in.force_n = est ? est->force() : 0.0;
    in.object_lift_m = o.truth.object_height_m - start_z;
    in.crushed = w.crushed();
    cmd = ctl.step(in);
    if (is_terminal(ctl.phase())) break;
  }

  res.outcome = ctl.phase();
  if (!is_terminal(res.outcome)) {
    res.outcome = Phase::Dropped;
    res.reason = "session timeout";
  } else {
    for (auto it = ctl.log().rbegin(); it != ctl.log().rend(); ++it)
      if (it->event.rfind("phase:", 0) == 0) {
        res.reason = it->event.substr(6);
        break;
      }
  }
  res.increments = ctl.increments();
  res.slip_onsets = ctl.slip_onsets_while_lifting();
  res.preload_force_n = ctl.preload_exit_force();
  res.duration_s = w.time();
  res.log = ctl.log();
  return res;
}

// ---------------------------------------------------------------------------

std::vector<LabeledTrace> generate_press_traces(const std::string& scenario, std::size_t trials, std::uint64_t seed) {
  if (scenario != "B" && scenario != "E") throw std::invalid_argument("press datasets come from scenario B or E");
  std::vector<LabeledTrace> out;
  out.reserve(trials);
  for (std::size_t k = 0; k < trials; ++k) {
    ScenarioSpec spec;
    spec.name = scenario;
    spec.seed = mix(seed, 100 + k);
    spec.indentor = k % indentor_tags().size();
    ScenarioResult r = run_scenario(spec);
    char id[32];
    std::snprintf(id, sizeof(id), "trial_%03zu", k);
    out.push_back(LabeledTrace{id, indentor_tags()[*spec.indentor], std::move(r.trace)});
  }
  return out;
}

ForceTrial trace_to_trial(const LabeledTrace& lt, const PipelineConfig& cfg, double decimate_hz, FeatureSet set) {
  if (!lt.trace.has_force) throw DataError("trace '" + lt.id + "' has no force_n column");
  if (!(decimate_hz > 0.0)) throw std::invalid_argument("decimation rate must be positive");
  const auto frames = lt.trace.frames();
  Preprocessor pre(cfg, estimate_baseline(frames, cfg.baseline_seconds));
  ChannelRing ring(ChannelRing::default_capacity(cfg));
  constexpr int kFeatureHop = 20;
  const auto keep_every =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.sample_rate_hz / decimate_hz)));
  ForceTrial trial;
  trial.id = lt.id;
  trial.tag = lt.tag;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    ring.push(pre.push(frames[i]));
    if (i % kFeatureHop != 0 || i % keep_every != 0) continue;
    const auto& row = lt.trace.rows[i];
    if (!row.force_n) continue;
    ForceSample s;
    s.x = project_feature(build_feature(ring, cfg.sample_rate_hz), set);
    s.force_n = *row.force_n;
    trial.samples.push_back(std::move(s));
  }
  return trial;
}

std::vector<ForceTrial> traces_to_trials(const std::vector<LabeledTrace>& traces, const PipelineConfig& cfg,
                                         double decimate_hz, FeatureSet set) {
  std::vector<ForceTrial> out;
  out.reserve(traces.size());
  for (const auto& t : traces) out.push_back(trace_to_trial(t, cfg, decimate_hz, set));
  return out;
}

void write_dataset(const std::string& dir, const std::vector<LabeledTrace>& traces) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream manifest(fs::path(dir) / "manifest.csv", std::ios::binary);
  if (!manifest) throw DataError("cannot write manifest in '" + dir + "'");
  manifest << "trial_id,tag,file\n";
  for (const auto& t : traces) {
    const std::string file = t.id + ".csv";
    write_trace_file((fs::path(dir) / file).string(), t.trace);
    manifest << t.id << ',' << t.tag << ',' << file << '\n';
  }
}

std::vector<LabeledTrace> read_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream manifest(fs::path(dir) / "manifest.csv");
  if (!manifest) throw DataError("dataset '" + dir + "' has no manifest.csv");
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(manifest, line) || line.rfind("trial_id,tag,file", 0) != 0)
    throw DataError("manifest header must be trial_id,tag,file", 1);
  std::vector<LabeledTrace> out;
  while (std::getline(manifest, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id, tag, file;
    if (!std::getline(ss, id, ',') || !std::getline(ss, tag, ',') || !std::getline(ss, file))
      throw DataError("manifest row needs trial_id,tag,file", lineno);
    out.push_back(LabeledTrace{id, tag, read_trace_file((fs::path(dir) / file).string())});
  }
  return out;
}

const ForceModel& default_force_model() {
  static const ForceModel model = [] {
    PipelineConfig cfg;
    const auto traces = generate_press_traces("B", 48, 20240917);
    const auto trials = traces_to_trials(traces, cfg, 2.0);
    return train(trials, SvrParams{});
  }();
  return model;
}

}  // namespace forte::sim
