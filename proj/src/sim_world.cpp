#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "forte/sim.hpp"

namespace forte::sim {

void SimObject::validate() const {
  if (!(mass_kg > 0.0)) throw std::invalid_argument("object mass must be positive");
  if (!(width_m > 0.0)) throw std::invalid_argument("object width must be positive");
  if (!(mu_kinetic > 0.0 && mu_kinetic < mu_static))
    throw std::invalid_argument("friction must satisfy 0 < mu_kinetic < mu_static");
  if (!(fragility_n > 0.0)) throw std::invalid_argument("fragility must be positive");
  if (!(contact_length_m > 0.0)) throw std::invalid_argument("contact length must be positive");
  if (!(normal_stiffness_n_per_m > 0.0)) throw std::invalid_argument("normal stiffness must be positive");
}

double SimObject::asymmetry() const {
  return std::clamp(2.0 * grasp_offset_m / width_m, -0.6, 0.6);
}

double SimObject::required_grip_force() const {
  // Both fingers carry half the weight; the trailing finger saturates first.
  return mass_kg * kGravity / (2.0 * mu_static * (1.0 - std::abs(asymmetry())));
}

void SensorResponseModel::validate() const {
  if (!(gain_per_n[0] > gain_per_n[1] && gain_per_n[1] > gain_per_n[2] && gain_per_n[2] > 0.0))
    throw std::invalid_argument("sensor gains must satisfy distal > middle > root > 0");
  if (!(saturation_n > 0.0)) throw std::invalid_argument("saturation force must be positive");
  if (noise_std < 0.0 || drift_std_per_sqrt_s < 0.0) throw std::invalid_argument("noise levels must be >= 0");
  if (!(burst_freq_min_hz > 0.0 && burst_freq_min_hz <= burst_freq_max_hz))
    throw std::invalid_argument("burst frequency range is invalid");
  if (!(burst_decay_min_s > 0.0 && burst_decay_min_s <= burst_decay_max_s))
    throw std::invalid_argument("burst decay range is invalid");
  if (relaxation_fraction < 0.0 || relaxation_fraction >= 1.0 || !(relaxation_time_s > 0.0))
    throw std::invalid_argument("relaxation parameters are invalid");
  if (adc_bits <= 1 || adc_bits > 24) throw std::invalid_argument("adc_bits out of range");
}

double GripperModel::normal_force(const SimObject& obj, double theta) const {
  const double gap = gap_per_rad * theta;
  const double compression = std::max(0.0, obj.width_m - gap) / 2.0;
  return obj.normal_stiffness_n_per_m * compression;
}

double GripperModel::theta_for_force(const SimObject& obj, double force_n) const {
  const double compression = force_n / obj.normal_stiffness_n_per_m;
  return (obj.width_m - 2.0 * compression) / gap_per_rad;
}

World::World(SimObject obj, SensorResponseModel sensor, GripperModel gripper, std::uint64_t seed,
             double sample_rate_hz)
    : obj_(std::move(obj)),
      sensor_(sensor),
      gripper_(gripper),
      rng_(seed),
      dt_(1.0 / sample_rate_hz),
      theta_(gripper.theta_open_rad) {
  obj_.validate();
  sensor_.validate();
  std::normal_distribution<double> offset(0.0, sensor_.adc_offset_std_counts);
  for (auto& o : adc_offset_) o = offset(rng_);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  for (auto& p : hum_phase_) p = phase(rng_);
}

void World::settle_at(double theta) {
  theta_ = theta;
  const double n = gripper_.normal_force(obj_, theta);
  const double beta = obj_.asymmetry();
  relaxed_ = {n * (1.0 + beta), n * (1.0 - beta)};
}

void World::start_slide(int f, double stretch, double normal) {
  const double k = gripper_.tangential_stiffness_n_per_m;
  const double sign = stretch >= 0.0 ? 1.0 : -1.0;
  // Spring-block overshoot: the stretch swings to the mirror image of its
  // breakaway value about the kinetic friction level.
  const double end = sign * (2.0 * obj_.mu_kinetic - obj_.mu_static) * normal / k;
  auto& s = slides_[static_cast<std::size_t>(f)];
  s.active = true;
  s.elapsed = 0.0;
  s.distance = stretch - end;
  s.start_offset = slip_offset_[static_cast<std::size_t>(f)];

  const double released = 0.5 * k * std::abs(s.distance);
  const double scale = std::max(sensor_.burst_floor, std::sqrt(released / sensor_.burst_reference_n));
  std::uniform_real_distribution<double> freq(sensor_.burst_freq_min_hz, sensor_.burst_freq_max_hz);
  std::uniform_real_distribution<double> decay(sensor_.burst_decay_min_s, sensor_.burst_decay_max_s);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  Burst b;
  b.finger = f;
  b.t0 = t_;
  b.amplitude = sensor_.burst_amplitude * std::min(scale, 3.0);
  b.freq_hz = freq(rng_);
  b.decay_s = decay(rng_);
  b.phase = phase(rng_);
  bursts_.push_back(b);
  ++bursts_started_;
}

TickOutput World::tick(double theta_cmd, double arm_velocity) {
  TickOutput out;
  out.frame.t = t_;

  theta_ += (theta_cmd - theta_) * (1.0 - std::exp(-dt_ / gripper_.servo_time_constant_s));
  arm_v_ += (arm_velocity - arm_v_) * (1.0 - std::exp(-dt_ / gripper_.arm_time_constant_s));
  gripper_z_ += arm_v_ * dt_;

  // Normal forces.
  const double n_mean = gripper_.normal_force(obj_, theta_);
  const double beta = obj_.asymmetry();
  std::array<double, 2> normal{n_mean * (1.0 + beta), n_mean * (1.0 - beta)};
  for (std::size_t f = 0; f < 2; ++f)
    if (lost_[f]) normal[f] = 0.0;
  if (std::max(normal[0], normal[1]) > obj_.fragility_n) crushed_ = true;

  // Advance active slides along a half-cosine displacement profile.
  const double slide_d = gripper_.slide_duration_s;
  for (std::size_t f = 0; f < 2; ++f) {
    auto& s = slides_[f];
    if (!s.active) continue;
    s.elapsed += dt_;
    const double frac = std::min(1.0, s.elapsed / slide_d);
    slip_offset_[f] = s.start_offset + s.distance * 0.5 * (1.0 - std::cos(std::numbers::pi * frac));
    if (frac >= 1.0) s.active = false;
  }

  // Quasi-static object height; free fall without contact.
  const double k_t = gripper_.tangential_stiffness_n_per_m;
  const double weight = obj_.mass_kg * kGravity;
  std::array<bool, 2> contact{normal[0] > 0.0, normal[1] > 0.0};
  const int n_contact = int{contact[0]} + int{contact[1]};
  constexpr double kMaxObjectSpeed = 2.0;
  if (n_contact > 0) {
    double offsets = 0.0;
    for (std::size_t f = 0; f < 2; ++f)
      if (contact[f]) offsets += slip_offset_[f];
    double z = gripper_z_ - (offsets + weight / k_t) / n_contact;
    z = std::max(0.0, z);
    const double max_step = kMaxObjectSpeed * dt_;
    object_z_ = std::clamp(z, object_z_ - max_step, object_z_ + max_step);
    object_v_ = 0.0;
  } else {
    object_v_ = std::max(object_v_ - kGravity * dt_, -kMaxObjectSpeed);
    object_z_ += object_v_ * dt_;
    if (object_z_ <= 0.0) {
      object_z_ = 0.0;
      object_v_ = 0.0;
    }
  }

  std::array<double, 2> tangential{};
  for (std::size_t f = 0; f < 2; ++f) {
    if (!contact[f]) continue;
    const double stretch = gripper_z_ - object_z_ - slip_offset_[f];
    tangential[f] = k_t * stretch;
    if (!slides_[f].active && std::abs(tangential[f]) > obj_.mu_static * normal[f])
      start_slide(static_cast<int>(f), stretch, normal[f]);
    if (std::abs(slip_offset_[f]) > obj_.contact_length_m) lost_[f] = true;
  }

  // Ground truth.
  GroundTruth& gt = out.truth;
  constexpr double kSlipVelocity = 1e-5;
  for (std::size_t f = 0; f < 2; ++f) {
    const auto& s = slides_[f];
    const double peak_v = std::numbers::pi * std::abs(s.distance) / (2.0 * slide_d);
    gt.finger_slip[f] = contact[f] && s.active && peak_v > kSlipVelocity;
  }
  gt.slip = gt.finger_slip[0] || gt.finger_slip[1];
  gt.normal_force_n = normal;
  gt.tangential_force_n = tangential;
  gt.grip_force_n = 0.5 * (normal[0] + normal[1]);
  gt.object_height_m = object_z_;
  gt.gripper_height_m = gripper_z_;
  gt.crushed = crushed_;
  gt.contact = contact;

  // Sensor response.
  const double relax_alpha = 1.0 - std::exp(-dt_ / sensor_.relaxation_time_s);
  for (std::size_t f = 0; f < 2; ++f) relaxed_[f] += (normal[f] - relaxed_[f]) * relax_alpha;

  std::array<double, kNumChannels> pressure{};
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    const std::size_t f = c / kChannelsPerFinger;
    const std::size_t j = c % kChannelsPerFinger;
    const double effective = normal[f] - sensor_.relaxation_fraction * relaxed_[f];
    const double sat = sensor_.saturation_n * std::tanh(effective / sensor_.saturation_n);
    pressure[c] = sensor_.gain_per_n[j] * obj_.gain_profile[j] * sat +
                  sensor_.shear_gain_per_n * sensor_.vibration_weight[j] * tangential[f];
  }
  for (auto it = bursts_.begin(); it != bursts_.end();) {
    const double age = t_ - it->t0;
    const double env = std::exp(-age / it->decay_s);
    if (env < 1e-4) {
      it = bursts_.erase(it);
      continue;
    }
    const double v = it->amplitude * env * std::sin(2.0 * std::numbers::pi * it->freq_hz * age + it->phase);
    const auto base = static_cast<std::size_t>(it->finger) * kChannelsPerFinger;
    for (std::size_t j = 0; j < kChannelsPerFinger; ++j) pressure[base + j] += v * sensor_.vibration_weight[j];
    ++it;
  }

  std::normal_distribution<double> noise(0.0, 1.0);
  const double drift_step = sensor_.drift_std_per_sqrt_s * std::sqrt(dt_);
  const std::int64_t full = std::int64_t{1} << sensor_.adc_bits;
  const std::int64_t mid = full / 2;
  const double half_span = static_cast<double>(mid);
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    drift_[c] = std::clamp(drift_[c] + drift_step * noise(rng_), -sensor_.drift_bound, sensor_.drift_bound);
    const double hum = sensor_.hum_amplitude * sensor_.vibration_weight[c % kChannelsPerFinger] *
                       std::sin(2.0 * std::numbers::pi * sensor_.hum_freq_hz * t_ + hum_phase_[c]);
    const double v = pressure[c] + drift_[c] + hum + sensor_.noise_std * noise(rng_);
    const auto count = std::clamp<std::int64_t>(
        std::llround(static_cast<double>(mid) + adc_offset_[c] + v * half_span), 0, full - 1);
    out.counts[c] = count;
    out.frame.channels[c] = normalize_raw(count, sensor_.adc_bits, mid);
  }

  ++samples_;
  t_ = static_cast<double>(samples_) * dt_;
  return out;
}

}  // namespace forte::sim
