#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "forte/controller.hpp"
#include "forte/io.hpp"

using namespace forte;

namespace {

ChannelRing ramp_ring(std::size_t n, std::size_t channel, double total) {
  ChannelRing ring(4000);
  SensorFrame f;
  for (std::size_t i = 0; i < n; ++i) {
    f.t = static_cast<double>(i) / 2000.0;
    f.channels.fill(0.0);
    f.channels[channel] = total * static_cast<double>(i) / static_cast<double>(n - 1);
    ring.push(f);
  }
  return ring;
}

// Scripted plant: level(t) is written to every channel at 2 kHz between
// ticks, force(t) and onsets(t) are fed straight through.
struct Script {
  std::function<double(double)> level = [](double) { return 0.0; };
  std::function<double(double)> force = [](double) { return 0.0; };
  std::function<std::uint64_t(double)> onsets = [](double) { return std::uint64_t{0}; };
  std::function<bool(double)> eta = [](double) { return false; };
  bool give_ring = true;
  double seconds = 30.0;
};

GraspController drive(const ControllerConfig& cfg, const Script& s) {
  GraspController c(cfg, 0.75);
  ChannelRing ring(20000);
  const double tick = 1.0 / cfg.tick_hz;
  std::size_t sample = 0;
  for (int k = 1; k * tick <= s.seconds + 1e-9; ++k) {
    const double t = k * tick;
    while (static_cast<double>(sample) / 2000.0 < t) {
      SensorFrame f;
      f.t = static_cast<double>(sample) / 2000.0;
      f.channels.fill(s.level(f.t));
      ring.push(f);
      ++sample;
    }
    ControlInput in;
    in.t = t;
    in.ring = s.give_ring ? &ring : nullptr;
    in.force_n = s.force(t);
    in.slip_onsets = s.onsets(t);
    in.eta = s.eta(t);
    c.step(in);
    if (is_terminal(c.phase())) break;
  }
  return c;
}

// contact at 2 s, force climbs 1 N/s from there, signal stays up afterwards
Script contact_script() {
  Script s;
  s.level = [](double t) { return t < 2.0 ? 0.0 : 0.2; };
  s.force = [](double t) { return t < 2.0 ? 0.0 : (t - 2.0); };
  return s;
}

std::vector<Phase> tick_phases(const GraspController& c) {
  std::vector<Phase> out;
  for (const auto& r : c.log())
    if (r.event.empty()) out.push_back(r.phase);
  return out;
}

}  // namespace

TEST_SUITE("controller") {

TEST_CASE("defaults") {
  ControllerConfig cfg;
  CHECK(cfg.contact_threshold == 0.005);
  CHECK(cfg.contact_window == 200);
  CHECK(cfg.f_init_n == 0.25);
  CHECK(cfg.lift_speed_m_per_s == 0.005);
  CHECK(cfg.increment_deg == 0.88);
  CHECK(cfg.tick_hz == 20.0);
  CHECK(cfg.increment_rad() == doctest::Approx(0.015358897).epsilon(1e-8));
  CHECK_NOTHROW(cfg.validate());
  cfg.f_init_n = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("detect_contact on a flat trace") {
  ChannelRing ring = ramp_ring(400, 0, 0.0);
  CHECK_FALSE(detect_contact(ring, ControllerConfig{}));
}

TEST_CASE("detect_contact on 0.011 within 0.1 s") {
  ChannelRing ring = ramp_ring(200, 3, 0.011);
  CHECK(detect_contact(ring, ControllerConfig{}));
}

TEST_CASE("detect_contact ignores 0.011 spread over 1 s") {
  ChannelRing ring = ramp_ring(2000, 3, 0.011);
  CHECK_FALSE(detect_contact(ring, ControllerConfig{}));
}

TEST_CASE("detect_contact needs a full window") {
  ChannelRing ring = ramp_ring(150, 0, 0.5);
  CHECK_FALSE(detect_contact(ring, ControllerConfig{}));
}

TEST_CASE("endpoint metric ignores an excursion that returns") {
  ChannelRing ring(400);
  SensorFrame f;
  for (int i = 0; i < 200; ++i) {
    f.channels.fill(0.0);
    f.channels[1] = (i > 50 && i < 150) ? 0.05 : 0.0;
    ring.push(f);
  }
  ControllerConfig cfg;
  CHECK(detect_contact(ring, cfg));
  cfg.contact_metric = ContactMetric::Endpoint;
  CHECK_FALSE(detect_contact(ring, cfg));
}

TEST_CASE("FORTE walks the phase graph") {
  ControllerConfig cfg;
  const auto c = drive(cfg, contact_script());
  CHECK(c.phase() == Phase::Success);
  const auto ph = tick_phases(c);
  const std::vector<Phase> order{Phase::Init, Phase::Closing, Phase::Preload, Phase::Lifting, Phase::Success};
  std::size_t at = 0;
  for (Phase p : ph) {
    while (at < order.size() && order[at] != p) ++at;
    REQUIRE(at < order.size());
  }
  CHECK(ph.front() == Phase::Init);
}

TEST_CASE("theta only decreases while closing") {
  ControllerConfig cfg;
  const auto c = drive(cfg, contact_script());
  double prev = 1e9;
  for (const auto& r : c.log()) {
    if (r.phase != Phase::Closing) continue;
    CHECK(r.theta_deg <= prev);
    prev = r.theta_deg;
  }
}

TEST_CASE("preload exits at the first tick with force at or above f_init") {
  ControllerConfig cfg;
  const auto c = drive(cfg, contact_script());
  CHECK(c.preload_exit_force() >= cfg.f_init_n);
  // force climbs 1 N/s, so one tick adds 0.05 N
  CHECK(c.preload_exit_force() <= cfg.f_init_n + 0.05 + 1e-12);
}

TEST_CASE("grip saturates at theta_closed") {
  ControllerConfig cfg;
  Script s;  // no contact ever
  s.seconds = 10.0;
  const auto c = drive(cfg, s);
  CHECK(c.grip_saturated());
  CHECK(c.theta_rad() == 0.0);
  bool flagged = false;
  for (const auto& r : c.log()) flagged = flagged || r.event == "grip_saturated";
  CHECK(flagged);
}

TEST_CASE("ON_OFF never reads sensors") {
  ControllerConfig cfg;
  cfg.policy = Policy::OnOff;
  Script with = contact_script();
  with.level = [](double t) { return std::sin(40.0 * t) * 0.5; };
  Script without = with;
  without.give_ring = false;
  const auto a = drive(cfg, with);
  const auto b = drive(cfg, without);
  REQUIRE(a.log().size() == b.log().size());
  for (std::size_t i = 0; i < a.log().size(); ++i) {
    CHECK(a.log()[i].phase == b.log()[i].phase);
    CHECK(a.log()[i].theta_deg == b.log()[i].theta_deg);
  }
  CHECK(a.phase() == Phase::Success);
  CHECK(a.grip_saturated());
  for (const auto& r : a.log()) CHECK(r.phase != Phase::Preload);
}

TEST_CASE("WO_SLIP holds theta after preload") {
  ControllerConfig cfg;
  cfg.policy = Policy::WoSlip;
  Script s = contact_script();
  s.onsets = [](double t) { return static_cast<std::uint64_t>(t > 3.0 ? (t - 3.0) * 5.0 : 0.0); };
  s.eta = [](double t) { return t > 3.0 && std::fmod(t, 0.2) < 0.1; };
  const auto c = drive(cfg, s);
  CHECK(c.increments() == 0);
  CHECK(c.slip_onsets_while_lifting() > 0);
  double held = -1;
  for (const auto& r : c.log()) {
    if (r.phase != Phase::Lifting) continue;
    if (held < 0) held = r.theta_deg;
    CHECK(r.theta_deg == held);
  }
  CHECK(held > 0);
}

TEST_CASE("increments follow slip onsets within the same tick") {
  for (double blank : {0.0, 0.2}) {
    ControllerConfig cfg;
    cfg.increment_blanking_s = blank;
    std::mt19937_64 rng(17);
    std::bernoulli_distribution coin(0.15);
    std::map<long, std::uint64_t> fresh;
    std::uint64_t total = 0;
    for (long k = 0; k < 2000; ++k) {
      total += coin(rng) ? 1 : 0;
      fresh[k] = total;
    }
    Script s = contact_script();
    s.onsets = [&](double t) { return fresh[std::lround(t * 20.0)]; };
    const auto c = drive(cfg, s);

    double prev_theta = -1;
    std::uint64_t prev_on = 0;
    double last_inc = -1e9;
    int decrements = 0;
    for (const auto& r : c.log()) {
      if (!r.event.empty()) continue;
      const std::uint64_t on = fresh[std::lround(r.t * 20.0)];
      if (r.phase == Phase::Lifting && prev_theta >= 0 && r.theta_deg < prev_theta) {
        ++decrements;
        CHECK(on > prev_on);
        CHECK(r.t - last_inc >= blank - 1e-9);
        last_inc = r.t;
      }
      prev_theta = r.theta_deg;
      prev_on = on;
    }
    CHECK(decrements == c.increments());
    CHECK(c.increments() > 0);
    CHECK(static_cast<std::uint64_t>(c.increments()) <= c.slip_onsets_while_lifting());
  }
}

TEST_CASE("sustained eta gives one increment per onset in edge mode") {
  ControllerConfig cfg;
  Script s = contact_script();
  s.onsets = [](double t) { return std::uint64_t{t > 3.0 ? 1u : 0u}; };
  s.eta = [](double t) { return t > 3.0; };
  CHECK(drive(cfg, s).increments() == 1);

  cfg.increment_mode = IncrementMode::Periodic;
  cfg.increment_blanking_s = 0.0;
  s.seconds = 4.0;
  const auto c = drive(cfg, s);
  // onset tick, then one per 0.1 s of sustained eta until 4 s
  CHECK(c.increments() >= 9);
  CHECK(c.increments() <= 11);
}

TEST_CASE("crush ends the session from closing") {
  ControllerConfig cfg;
  GraspController c(cfg, 0.75);
  ControlInput in;
  in.t = 1.0;
  c.step(in);
  CHECK(c.phase() == Phase::Closing);
  in.t = 1.05;
  in.crushed = true;
  c.step(in);
  CHECK(c.phase() == Phase::Crushed);
  const double th = c.theta_rad();
  in.t = 1.1;
  c.step(in);
  CHECK(c.theta_rad() == th);
}

TEST_CASE("contact loss mid-lift is a drop") {
  ControllerConfig cfg;
  Script s = contact_script();
  s.level = [](double t) { return t < 2.0 || t > 4.0 ? 0.0 : 0.2; };
  const auto c = drive(cfg, s);
  CHECK(c.phase() == Phase::Dropped);
  CHECK(c.log().back().t <= 4.0 + cfg.drop_window_s + 0.1);
}

TEST_CASE("identical inputs give identical session logs") {
  ControllerConfig cfg;
  Script s = contact_script();
  s.onsets = [](double t) { return static_cast<std::uint64_t>(t > 2.5 ? std::floor((t - 2.5) * 1.7) : 0.0); };
  std::ostringstream a, b;
  write_session_log(a, drive(cfg, s).log());
  write_session_log(b, drive(cfg, s).log());
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("t,phase,theta_deg,force_est_n,eta,event\n", 0) == 0);
}

TEST_CASE("controller keys from a config file") {
  std::istringstream in("controller.increment_deg = 1.5\ncontroller.policy = woslip\n");
  auto kv = KeyValues::parse(in);
  ControllerConfig cfg;
  apply_controller_config(kv, cfg, "controller.");
  CHECK(cfg.increment_deg == 1.5);
  CHECK(cfg.policy == Policy::WoSlip);
  CHECK(kv.unused().empty());
  CHECK_THROWS(parse_policy("sometimes"));
}

}
