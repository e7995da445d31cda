#include "forte/controller.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "forte/io.hpp"

namespace forte {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kMinNoiseFloor = 1e-3;
}  // namespace

const char* policy_name(Policy p) {
  switch (p) {
    case Policy::Forte: return "forte";
    case Policy::OnOff: return "onoff";
    case Policy::WoSlip: return "woslip";
  }
  return "?";
}

Policy parse_policy(const std::string& s) {
  if (s == "forte" || s == "FORTE") return Policy::Forte;
  if (s == "onoff" || s == "ON_OFF" || s == "on-off") return Policy::OnOff;
  if (s == "woslip" || s == "WO_SLIP" || s == "wo-slip") return Policy::WoSlip;
  throw std::invalid_argument("unknown policy '" + s + "'");
}

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Init: return "INIT";
    case Phase::Closing: return "CLOSING";
    case Phase::Preload: return "PRELOAD";
    case Phase::Lifting: return "LIFTING";
    case Phase::Success: return "SUCCESS";
    case Phase::Dropped: return "DROPPED";
    case Phase::Crushed: return "CRUSHED";
  }
  return "?";
}

bool is_terminal(Phase p) { return p == Phase::Success || p == Phase::Dropped || p == Phase::Crushed; }

double ControllerConfig::increment_rad() const { return increment_deg * kDegToRad; }

void ControllerConfig::validate() const {
  const bool positive = contact_threshold > 0 && contact_window > 0 && f_init_n > 0 && lift_speed_m_per_s > 0 &&
                        increment_deg > 0 && tick_hz > 0 && closing_deg_per_tick > 0 && success_height_m > 0 &&
                        drop_window_s > 0 && drop_noise_factor > 0 && periodic_increment_s > 0 &&
                        sample_rate_hz > 0 && lift_timeout_factor >= 1.0 && init_seconds >= 0 &&
                        increment_blanking_s >= 0;
  if (!positive) throw std::invalid_argument("controller parameters must be positive");
}

void apply_controller_config(const KeyValues& kv, ControllerConfig& cfg, const std::string& prefix) {
  const auto k = [&](const char* name) { return prefix + name; };
  cfg.contact_threshold = kv.get_double(k("contact_threshold"), cfg.contact_threshold);
  cfg.contact_window = kv.get_int(k("contact_window"), cfg.contact_window);
  cfg.f_init_n = kv.get_double(k("f_init_n"), cfg.f_init_n);
  cfg.lift_speed_m_per_s = kv.get_double(k("lift_speed_m_per_s"), cfg.lift_speed_m_per_s);
  cfg.increment_deg = kv.get_double(k("increment_deg"), cfg.increment_deg);
  cfg.tick_hz = kv.get_double(k("tick_hz"), cfg.tick_hz);
  cfg.policy = parse_policy(kv.get_string(k("policy"), policy_name(cfg.policy)));
  cfg.closing_deg_per_tick = kv.get_double(k("closing_deg_per_tick"), cfg.closing_deg_per_tick);
  cfg.theta_closed_deg = kv.get_double(k("theta_closed_deg"), cfg.theta_closed_deg);
  cfg.init_seconds = kv.get_double(k("init_seconds"), cfg.init_seconds);
  cfg.success_height_m = kv.get_double(k("success_height_m"), cfg.success_height_m);
  cfg.drop_window_s = kv.get_double(k("drop_window_s"), cfg.drop_window_s);
  cfg.drop_noise_factor = kv.get_double(k("drop_noise_factor"), cfg.drop_noise_factor);
  cfg.lift_timeout_factor = kv.get_double(k("lift_timeout_factor"), cfg.lift_timeout_factor);
  const std::string metric = kv.get_string(k("contact_metric"), cfg.contact_metric == ContactMetric::Range ? "range" : "endpoint");
  if (metric == "range") cfg.contact_metric = ContactMetric::Range;
  else if (metric == "endpoint") cfg.contact_metric = ContactMetric::Endpoint;
  else throw DataError("contact_metric must be range or endpoint");
  const std::string mode =
      kv.get_string(k("increment_mode"), cfg.increment_mode == IncrementMode::FallingEdge ? "falling_edge" : "periodic");
  if (mode == "falling_edge") cfg.increment_mode = IncrementMode::FallingEdge;
  else if (mode == "periodic") cfg.increment_mode = IncrementMode::Periodic;
  else throw DataError("increment_mode must be falling_edge or periodic");
  cfg.periodic_increment_s = kv.get_double(k("periodic_increment_s"), cfg.periodic_increment_s);
  cfg.increment_blanking_s = kv.get_double(k("increment_blanking_s"), cfg.increment_blanking_s);
  cfg.validate();
}

bool detect_contact(const ChannelRing& ring, const ControllerConfig& cfg) {
  const auto w = static_cast<std::size_t>(cfg.contact_window);
  if (ring.size() < w) return false;
  const double limit = cfg.contact_threshold * kFullScaleSpan;
  if (cfg.contact_metric == ContactMetric::Range) {
    const ChannelVector r = ring.range_last(w);
    return *std::max_element(r.begin(), r.end()) > limit;
  }
  for (std::size_t c = 0; c < kNumChannels; ++c)
    if (std::abs(ring.at(c, 0) - ring.at(c, w - 1)) > limit) return true;
  return false;
}

// ---------------------------------------------------------------------------

GraspController::GraspController(const ControllerConfig& cfg, double theta_open_rad)
    : cfg_(cfg), theta_(theta_open_rad) {
  cfg_.validate();
  if (!(theta_open_rad > cfg.theta_closed_deg * kDegToRad))
    throw std::invalid_argument("open servo angle must exceed the closed angle");
}

void GraspController::event(double t, const std::string& what) {
  SessionLogRow row;
  row.t = t;
  row.phase = phase_;
  row.theta_deg = theta_ / kDegToRad;
  row.force_est_n = last_force_;
  row.eta = last_eta_;
  row.event = what;
  log_.push_back(std::move(row));
}

void GraspController::enter(Phase p, double t, const std::string& why) {
  phase_ = p;
  event(t, std::string("phase:") + phase_name(p) + (why.empty() ? "" : " " + why));
}

void GraspController::close_by(double rad, double t) {
  const double closed = cfg_.theta_closed_deg * kDegToRad;
  theta_ -= rad;
  if (theta_ <= closed) {
    theta_ = closed;
    if (!saturated_) {
      saturated_ = true;
      event(t, "grip_saturated");
    }
  }
}

bool GraspController::signal_at_rest(const ChannelRing& ring) const {
  const auto k = static_cast<std::size_t>(std::llround(cfg_.drop_window_s * cfg_.sample_rate_hz));
  if (ring.size() < k) return false;
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    const double limit = cfg_.drop_noise_factor * noise_floor_[c];
    for (std::size_t a = 0; a < k; ++a)
      if (ring.at(c, a) > limit) return false;
  }
  return true;
}

ControlCommand GraspController::step(const ControlInput& in) {
  last_force_ = in.force_n;
  last_eta_ = in.eta;
  const double tick = 1.0 / cfg_.tick_hz;
  const double close_step = cfg_.closing_deg_per_tick * kDegToRad;
  const bool uses_sensors = cfg_.policy != Policy::OnOff;

  if (!is_terminal(phase_) && phase_ != Phase::Init && in.crushed) enter(Phase::Crushed, in.t, "fragility exceeded");

  switch (phase_) {
    case Phase::Init:
      if (in.t >= cfg_.init_seconds) {
        noise_floor_.fill(kMinNoiseFloor);
        if (uses_sensors && in.ring) {
          for (std::size_t c = 0; c < kNumChannels; ++c)
            for (std::size_t a = 0; a < in.ring->size(); ++a)
              noise_floor_[c] = std::max(noise_floor_[c], std::abs(in.ring->at(c, a)));
        }
        enter(Phase::Closing, in.t, "");
      }
      break;
    case Phase::Closing:
      if (!uses_sensors) {
        if (saturated_) {
          onsets_seen_ = in.slip_onsets;
          enter(Phase::Lifting, in.t, "closed");
        } else {
          close_by(close_step, in.t);
        }
      } else if (in.ring && detect_contact(*in.ring, cfg_)) {
        event(in.t, "contact");
        enter(Phase::Preload, in.t, "");
      } else {
        close_by(close_step, in.t);
      }
      break;
    case Phase::Preload:
      if (in.force_n >= cfg_.f_init_n) {
        preload_exit_force_ = in.force_n;
        onsets_seen_ = in.slip_onsets;
        enter(Phase::Lifting, in.t, "");
      } else {
        close_by(close_step, in.t);
      }
      break;
    case Phase::Lifting: {
      lifted_ += cfg_.lift_speed_m_per_s * tick;
      const std::uint64_t fresh = in.slip_onsets - onsets_seen_;
      onsets_seen_ = in.slip_onsets;
      onsets_lifting_ += fresh;
      if (cfg_.policy == Policy::Forte) {
        bool inc = fresh > 0;
        if (cfg_.increment_mode == IncrementMode::Periodic) {
          if (!in.eta) {
            sustained_since_ = -1.0;
          } else if (inc || sustained_since_ < 0.0) {
            sustained_since_ = in.t;
          } else if (in.t - sustained_since_ >= cfg_.periodic_increment_s - 1e-9) {
            inc = true;
            sustained_since_ = in.t;
          }
        }
        if (in.t - last_increment_t_ < cfg_.increment_blanking_s - 1e-9) inc = false;
        if (inc) {
          last_increment_t_ = in.t;
          close_by(cfg_.increment_rad(), in.t);
          ++increments_;
          event(in.t, "increment");
        }
      }
      const bool high_enough = in.object_lift_m ? *in.object_lift_m >= cfg_.success_height_m
                                                : lifted_ >= cfg_.success_height_m - 1e-12;
      if (high_enough) {
        enter(Phase::Success, in.t, "");
      } else if (uses_sensors && in.ring && signal_at_rest(*in.ring)) {
        enter(Phase::Dropped, in.t, "contact lost");
      } else if (lifted_ >= cfg_.lift_timeout_factor * cfg_.success_height_m) {
        enter(Phase::Dropped, in.t, "lift timeout");
      }
      break;
    }
    default:
      break;
  }

  SessionLogRow row;
  row.t = in.t;
  row.phase = phase_;
  row.theta_deg = theta_ / kDegToRad;
  row.force_est_n = in.force_n;
  row.eta = in.eta;
  log_.push_back(std::move(row));

  ControlCommand cmd;
  cmd.theta_rad = theta_;
  cmd.arm_velocity = phase_ == Phase::Lifting ? cfg_.lift_speed_m_per_s : 0.0;
  return cmd;
}

void write_session_log(std::ostream& out, const std::vector<SessionLogRow>& rows) {
  out << "t,phase,theta_deg,force_est_n,eta,event\n";
  for (const auto& r : rows) {
    out << format_double(r.t) << ',' << phase_name(r.phase) << ',' << format_double(r.theta_deg) << ','
        << format_double(r.force_est_n) << ',' << (r.eta ? 1 : 0) << ',' << r.event << '\n';
  }
}

}  // namespace forte
