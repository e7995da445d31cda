#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "forte/signal.hpp"

namespace forte {

enum class Policy { Forte, OnOff, WoSlip };
enum class Phase { Init, Closing, Preload, Lifting, Success, Dropped, Crushed };

/// Range: max - min over the window. Endpoint: |last - first|.
enum class ContactMetric { Range, Endpoint };
/// FallingEdge: one increment per slip onset. Periodic: additionally one
/// increment per `periodic_increment_s` of sustained slip.
enum class IncrementMode { FallingEdge, Periodic };

const char* policy_name(Policy p);
Policy parse_policy(const std::string& s);
const char* phase_name(Phase p);
bool is_terminal(Phase p);

inline constexpr double kFullScaleSpan = 2.0;

struct ControllerConfig {
  double contact_threshold = 0.005;  // fraction of full-scale span
  int contact_window = 200;          // samples
  double f_init_n = 0.25;
  double lift_speed_m_per_s = 0.005;
  double increment_deg = 0.88;
  double tick_hz = 20.0;
  Policy policy = Policy::Forte;

  double closing_deg_per_tick = 0.5;
  double theta_closed_deg = 0.0;
  double init_seconds = 1.0;
  double success_height_m = 0.05;
  double drop_window_s = 0.25;
  double drop_noise_factor = 1.2;
  /// Give up the lift once the arm has travelled this multiple of the
  /// success height.
  double lift_timeout_factor = 1.5;
  ContactMetric contact_metric = ContactMetric::Range;
  IncrementMode increment_mode = IncrementMode::FallingEdge;
  double periodic_increment_s = 0.1;
  /// Slip onsets this soon after an increment are ignored; the servo step
  /// itself rings the sensors. 0 disables.
  double increment_blanking_s = 0.2;
  double sample_rate_hz = 2000.0;

  double increment_rad() const;
  void validate() const;
};

class KeyValues;
void apply_controller_config(const KeyValues& kv, ControllerConfig& cfg, const std::string& prefix = "");

/// Largest per-channel change over the trailing window exceeds the threshold.
bool detect_contact(const ChannelRing& ring, const ControllerConfig& cfg);

/// Latest-value snapshot handed to the controller on each tick.
struct ControlInput {
  double t = 0.0;
  const ChannelRing* ring = nullptr;  // filtered frames; null before INIT ends
  bool eta = false;
  std::uint64_t slip_onsets = 0;      // running count of eta rising edges
  double force_n = 0.0;
  std::optional<double> object_lift_m;  // object height above its start pose
  bool crushed = false;
};

struct ControlCommand {
  double theta_rad = 0.0;
  double arm_velocity = 0.0;
};

struct SessionLogRow {
  double t = 0.0;
  Phase phase = Phase::Init;
  double theta_deg = 0.0;
  double force_est_n = 0.0;
  bool eta = false;
  std::string event;
};

/// Tick-driven grasp state machine.
class GraspController {
 public:
  GraspController(const ControllerConfig& cfg, double theta_open_rad);

  ControlCommand step(const ControlInput& in);

  Phase phase() const { return phase_; }
  double theta_rad() const { return theta_; }
  double lifted_m() const { return lifted_; }
  bool grip_saturated() const { return saturated_; }
  int increments() const { return increments_; }
  std::uint64_t slip_onsets_while_lifting() const { return onsets_lifting_; }
  double preload_exit_force() const { return preload_exit_force_; }
  const ChannelVector& noise_floor() const { return noise_floor_; }
  const std::vector<SessionLogRow>& log() const { return log_; }
  const ControllerConfig& config() const { return cfg_; }

 private:
  void enter(Phase p, double t, const std::string& why);
  void event(double t, const std::string& what);
  void close_by(double rad, double t);
  bool signal_at_rest(const ChannelRing& ring) const;

  ControllerConfig cfg_;
  Phase phase_ = Phase::Init;
  double theta_;
  double lifted_ = 0.0;
  bool saturated_ = false;
  int increments_ = 0;
  std::uint64_t onsets_seen_ = 0;
  std::uint64_t onsets_lifting_ = 0;
  double sustained_since_ = -1.0;
  double last_increment_t_ = -1e300;
  double preload_exit_force_ = 0.0;
  double last_force_ = 0.0;
  bool last_eta_ = false;
  ChannelVector noise_floor_{};
  std::vector<SessionLogRow> log_;
};

void write_session_log(std::ostream& out, const std::vector<SessionLogRow>& rows);

}  // namespace forte
