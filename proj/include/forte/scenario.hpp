#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "forte/controller.hpp"
#include "forte/force.hpp"
#include "forte/io.hpp"
#include "forte/sim.hpp"

namespace forte::sim {

/// Fragile, slippery and everyday objects for closed-loop grasp trials.
const std::vector<SimObject>& object_suite();
const SimObject& find_object(const std::string& name);
std::vector<SimObject> objects_in_category(const std::string& category);

/// Load-cell indentors: same width, different pressure distribution over
/// the distal/middle/root channels.
const std::vector<std::string>& indentor_tags();
SimObject indentor(std::size_t tag_index);

/// Servo angle of the minimal stable grasp.
double theta_grasp(const SimObject& obj, const GripperModel& gripper);
/// Mean normal force when the gripper is fully closed on the object.
double closed_grip_force(const SimObject& obj, const GripperModel& gripper, double theta_closed_rad = 0.0);

struct GtRow {
  double t = 0.0;
  int slip = 0;
  double force_r_n = 0.0;
  double force_l_n = 0.0;
  std::string phase;
};

void write_ground_truth(std::ostream& out, const std::vector<GtRow>& rows);

/// One scenario run. Unset optionals are drawn from the seed.
struct ScenarioSpec {
  std::string name = "A";
  std::uint64_t seed = 0;
  std::optional<std::string> object_name;
  std::optional<SimObject> object;
  SensorResponseModel sensor;
  GripperModel gripper;
  PipelineConfig pipeline;
  ControllerConfig controller;

  std::optional<double> theta_deg;       // held servo angle (A, Q) or press target (B)
  std::optional<double> force_fraction;  // A: fraction of the required grip force
  std::optional<double> grasp_offset_m;
  double lift_speed_m_per_s = 0.001;     // A
  double still_s = 1.5;                  // A: hold before lifting
  std::optional<double> duration_s;      // A, B, E, Q
  std::optional<std::size_t> indentor;   // B, E

  /// Reads `scenario`, `seed`, `object`, `object.*`, `sensor.*`, `gripper.*`,
  /// `pipeline.*`, `controller.*` and the schedule keys.
  void apply(const KeyValues& kv);
};

struct ScenarioResult {
  std::string name;
  Trace trace;  // carries force_n and slip_gt
  std::vector<GtRow> ground_truth;
  std::string outcome;  // "completed" for open-loop runs, else a terminal phase
  SimObject object;
  std::vector<SessionLogRow> session_log;
  std::map<std::string, double> info;
};

/// Scenarios: A insufficient-force lift, B indentor press, C fragile grasp,
/// D slippery grasp, E drift stress press, Q quiescent hold.
ScenarioResult run_scenario(const ScenarioSpec& spec, const ForceModel* force_model = nullptr);
bool is_scenario(const std::string& name);

struct GraspSetup {
  SimObject object;
  std::uint64_t seed = 0;
  SensorResponseModel sensor;
  GripperModel gripper;
  PipelineConfig pipeline;
  ControllerConfig controller;
  double max_session_s = 60.0;
  bool record_trace = true;
};

struct GraspResult {
  Phase outcome = Phase::Init;
  std::string reason;
  int increments = 0;
  std::uint64_t slip_onsets = 0;      // eta rising edges during lifting
  bool slip_gt_lifting = false;       // any ground-truth slip during lifting
  bool slip_pred_lifting = false;     // any eta during lifting
  double max_normal_force_n = 0.0;
  double required_force_n = 0.0;
  double preload_force_n = 0.0;
  double duration_s = 0.0;
  std::vector<SessionLogRow> log;
  Trace trace;
  std::vector<GtRow> ground_truth;
};

GraspResult run_grasp(const GraspSetup& setup, const ForceModel& force_model);

// ---------------------------------------------------------------------------
// Force datasets

struct LabeledTrace {
  std::string id;
  std::string tag;
  Trace trace;
};

/// Press trials from scenario B (or E), cycling through the indentor tags.
std::vector<LabeledTrace> generate_press_traces(const std::string& scenario, std::size_t trials,
                                                std::uint64_t seed);

/// Filters a labelled trace, builds features at 100 Hz and keeps one sample
/// every 1/decimate_hz seconds.
ForceTrial trace_to_trial(const LabeledTrace& lt, const PipelineConfig& cfg, double decimate_hz,
                          FeatureSet set = FeatureSet::Full);
std::vector<ForceTrial> traces_to_trials(const std::vector<LabeledTrace>& traces, const PipelineConfig& cfg,
                                         double decimate_hz, FeatureSet set = FeatureSet::Full);

/// Directory of trace CSVs plus manifest.csv (`trial_id,tag,file`).
void write_dataset(const std::string& dir, const std::vector<LabeledTrace>& traces);
std::vector<LabeledTrace> read_dataset(const std::string& dir);

/// Model trained once per process on a compact press dataset.
const ForceModel& default_force_model();

}  // namespace forte::sim
