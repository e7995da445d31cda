#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "forte/signal.hpp"

namespace forte::sim {

inline constexpr double kGravity = 9.81;

struct SimObject {
  std::string name = "object";
  std::string geometry = "generic";
  std::string category = "everyday";
  double mass_kg = 0.1;
  double width_m = 0.05;
  double mu_static = 1.0;
  double mu_kinetic = 0.8;
  double fragility_n = std::numeric_limits<double>::infinity();
  /// Lateral offset from the gripper midline; loads one finger more than the
  /// other.
  double grasp_offset_m = 0.0;
  /// Vertical extent of finger contact before the fingers slide off.
  double contact_length_m = 0.03;
  /// Per-finger normal stiffness of fin-ray plus object, N/m.
  double normal_stiffness_n_per_m = 320.0;
  /// Multipliers on the (distal, middle, root) pressure gains.
  std::array<double, 3> gain_profile{1.0, 1.0, 1.0};

  void validate() const;
  /// Fraction by which the leading finger's normal force exceeds the mean.
  double asymmetry() const;
  /// Mean normal force needed for a static hold with both fingers sticking.
  double required_grip_force() const;
};

struct SensorResponseModel {
  std::array<double, 3> gain_per_n{0.06, 0.04, 0.025};  // distal > middle > root
  double saturation_n = 12.0;
  double shear_gain_per_n = 0.01;
  std::array<double, 3> vibration_weight{1.0, 0.75, 0.55};
  double burst_amplitude = 0.06;     // normalized units at the reference release
  double burst_reference_n = 0.1;    // released tangential force for full amplitude
  double burst_floor = 0.35;         // minimum fraction of burst_amplitude
  double burst_freq_min_hz = 20.0;
  double burst_freq_max_hz = 40.0;
  double burst_decay_min_s = 0.03;
  double burst_decay_max_s = 0.06;
  double noise_std = 0.002;
  /// Servo PWM ripple coupled into every channel while the servo is powered.
  double hum_amplitude = 0.002;
  double hum_freq_hz = 50.0;
  double drift_std_per_sqrt_s = 0.001;
  double drift_bound = 0.05;
  double relaxation_fraction = 0.05;
  double relaxation_time_s = 4.0;
  int adc_bits = 11;
  double adc_offset_std_counts = 6.0;

  void validate() const;
};

struct GripperModel {
  double gap_per_rad = 0.145;          // m of finger gap per rad of servo
  double servo_time_constant_s = 0.025;
  double arm_time_constant_s = 0.05;
  double tangential_stiffness_n_per_m = 300.0;
  double slide_duration_s = 0.008;
  double theta_open_rad = 0.75;

  double theta_zero_force(const SimObject& obj) const { return obj.width_m / gap_per_rad; }
  /// Mean normal force at a servo angle, ignoring dynamics.
  double normal_force(const SimObject& obj, double theta) const;
  /// Servo angle producing a given mean normal force.
  double theta_for_force(const SimObject& obj, double force_n) const;
};

struct GroundTruth {
  bool slip = false;
  std::array<bool, 2> finger_slip{};
  std::array<double, 2> normal_force_n{};   // indexed by Finger
  std::array<double, 2> tangential_force_n{};
  double grip_force_n = 0.0;                // load-cell equivalent
  double object_height_m = 0.0;
  double gripper_height_m = 0.0;
  bool crushed = false;
  std::array<bool, 2> contact{};
};

struct TickOutput {
  SensorFrame frame;                             // normalized ADC reading
  std::array<std::int64_t, kNumChannels> counts{};
  GroundTruth truth;
};

/// One gripper + object world stepped at the sensor rate.
class World {
 public:
  World(SimObject obj, SensorResponseModel sensor, GripperModel gripper, std::uint64_t seed,
        double sample_rate_hz = 2000.0);

  /// Place the servo at `theta` with the sensor relaxation state settled.
  void settle_at(double theta);

  TickOutput tick(double theta_cmd, double arm_velocity);

  double time() const { return t_; }
  double theta() const { return theta_; }
  bool crushed() const { return crushed_; }
  const SimObject& object() const { return obj_; }
  const GripperModel& gripper() const { return gripper_; }
  const SensorResponseModel& sensor() const { return sensor_; }
  double dt() const { return dt_; }
  std::size_t burst_count() const { return bursts_started_; }

 private:
  struct Burst {
    int finger;
    double t0, amplitude, freq_hz, decay_s, phase;
  };
  struct Slide {
    bool active = false;
    double elapsed = 0.0;
    double distance = 0.0;
    double start_offset = 0.0;
  };

  void start_slide(int f, double stretch, double normal);

  SimObject obj_;
  SensorResponseModel sensor_;
  GripperModel gripper_;
  std::mt19937_64 rng_;
  double dt_;
  std::uint64_t samples_ = 0;
  double t_ = 0.0;
  double theta_;
  double gripper_z_ = 0.0;
  double arm_v_ = 0.0;
  double object_z_ = 0.0;
  double object_v_ = 0.0;
  std::array<double, 2> slip_offset_{};
  std::array<Slide, 2> slides_{};
  std::array<bool, 2> lost_{};
  std::array<double, 2> relaxed_{};   // low-passed normal force
  std::array<double, kNumChannels> drift_{};
  std::array<double, kNumChannels> adc_offset_{};
  std::array<double, kNumChannels> hum_phase_{};
  std::vector<Burst> bursts_;
  std::size_t bursts_started_ = 0;
  bool crushed_ = false;
};

}  // namespace forte::sim
