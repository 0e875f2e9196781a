#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "riskpipe/error.hpp"
#include "riskpipe/rng.hpp"
#include "riskpipe/skill_label.hpp"

namespace riskpipe {

enum class ComponentKind {
  Joint,
  Motor,
  Link,
  Gripper,
  Base,
  Controller,
  Camera,
  Power,
  Software,
};

inline const char* to_string(ComponentKind k) {
  switch (k) {
    case ComponentKind::Joint:
      return "Joint";
    case ComponentKind::Motor:
      return "Motor";
    case ComponentKind::Link:
      return "Link";
    case ComponentKind::Gripper:
      return "Gripper";
    case ComponentKind::Base:
      return "Base";
    case ComponentKind::Controller:
      return "Controller";
    case ComponentKind::Camera:
      return "Camera";
    case ComponentKind::Power:
      return "Power";
    case ComponentKind::Software:
      return "Software";
  }
  throw ValidationError("unknown component kind");
}

inline ComponentKind component_kind_from_string(const std::string& s) {
  for (ComponentKind k :
       {ComponentKind::Joint, ComponentKind::Motor, ComponentKind::Link,
        ComponentKind::Gripper, ComponentKind::Base, ComponentKind::Controller,
        ComponentKind::Camera, ComponentKind::Power, ComponentKind::Software}) {
    if (s == to_string(k)) return k;
  }
  throw FormatError("unknown component kind: " + s);
}

struct HardwareComponent {
  std::string id;
  ComponentKind kind = ComponentKind::Joint;
  // Only Joint and Motor components are tied to a joint series.
  std::optional<int> joint_index;

  bool operator==(const HardwareComponent&) const = default;
};

struct JointSample {
  double t = 0;
  double position = 0;
  double velocity = 0;
  double effort = 0;

  bool operator==(const JointSample&) const = default;
};

struct GripperSample {
  double t = 0;
  double aperture = 0;
  double force = 0;

  bool operator==(const GripperSample&) const = default;
};

// Tolerance for the uniform-timestamp check, in seconds.
inline constexpr double kTimestampTolerance = 1e-9;

struct TrajectoryLog {
  double dt = 0;
  std::vector<std::vector<JointSample>> joints;
  std::vector<GripperSample> gripper;
  std::vector<HardwareComponent> hardware;

  bool operator==(const TrajectoryLog&) const = default;

  std::size_t sample_count() const { return gripper.size(); }
  std::size_t joint_count() const { return joints.size(); }
  double duration() const { return static_cast<double>(sample_count()) * dt; }

  const HardwareComponent* find_component(const std::string& id) const {
    for (const auto& c : hardware) {
      if (c.id == id) return &c;
    }
    return nullptr;
  }

  void validate() const {
    if (!(dt > 0)) throw ValidationError("dt: must be > 0");
    const std::size_t n = gripper.size();
    if (n < 1) throw ValidationError("gripper: series must have N >= 1 samples");
    for (std::size_t j = 0; j < joints.size(); ++j) {
      if (joints[j].size() != n)
        throw ValidationError("joints[" + std::to_string(j) +
                              "]: series length differs from gripper series");
    }
    for (std::size_t k = 0; k < n; ++k) {
      const double expected = static_cast<double>(k) * dt;
      auto check_sample = [&](double t, const char* what) {
        if (!std::isfinite(t) || t < 0)
          throw ValidationError(std::string(what) + ": timestamp not finite/non-negative");
        if (std::abs(t - expected) > kTimestampTolerance)
          throw ValidationError(std::string(what) + ": non-uniform timestamp at sample " +
                                std::to_string(k));
      };
      check_sample(gripper[k].t, "gripper");
      if (!std::isfinite(gripper[k].aperture) || !std::isfinite(gripper[k].force))
        throw ValidationError("gripper: non-finite channel value");
      for (std::size_t j = 0; j < joints.size(); ++j) {
        const JointSample& s = joints[j][k];
        check_sample(s.t, "joints");
        if (!std::isfinite(s.position) || !std::isfinite(s.velocity) ||
            !std::isfinite(s.effort))
          throw ValidationError("joints: non-finite channel value");
      }
    }
    std::unordered_set<std::string> ids;
    for (const auto& c : hardware) {
      if (!ids.insert(c.id).second)
        throw ValidationError("hardware: duplicate component id " + c.id);
      const bool needs_index =
          c.kind == ComponentKind::Joint || c.kind == ComponentKind::Motor;
      if (needs_index != c.joint_index.has_value())
        throw ValidationError("hardware: joint_index present iff kind is Joint/Motor (" +
                              c.id + ")");
      if (c.joint_index &&
          (*c.joint_index < 0 ||
           static_cast<std::size_t>(*c.joint_index) >= joints.size()))
        throw ValidationError("hardware: joint_index out of range for " + c.id);
    }
  }
};

struct PhaseDurations {
  double move = 2.0;
  double pick = 1.0;
  double carry = 2.0;
  double place = 1.0;
  double idle_lead = 0.5;
  double idle_tail = 0.5;

  double total() const { return move + pick + carry + place + idle_lead + idle_tail; }
};

struct NoiseSigma {
  double position = 0.001;
  double velocity = 0.01;
  double effort = 0.05;
  double aperture = 0.0005;
  double force = 0.1;
};

struct ScenarioConfig {
  int n_joints = 7;
  double v_max = 1.0;
  PhaseDurations durations;
  NoiseSigma noise_sigma;
  double dt = 0.01;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_joints < 1) throw ValidationError("n_joints: must be >= 1");
    if (!(v_max >= 0) || !std::isfinite(v_max))
      throw ValidationError("v_max: must be finite and >= 0");
    for (double d : {durations.move, durations.pick, durations.carry,
                     durations.place, durations.idle_lead, durations.idle_tail}) {
      if (!(d >= 0) || !std::isfinite(d))
        throw ValidationError("durations: every phase must be finite and >= 0");
    }
    if (!(dt > 0) || !std::isfinite(dt)) throw ValidationError("dt: must be > 0");
    for (double s : {noise_sigma.position, noise_sigma.velocity, noise_sigma.effort,
                     noise_sigma.aperture, noise_sigma.force}) {
      if (!(s >= 0) || !std::isfinite(s))
        throw ValidationError("noise_sigma: every entry must be finite and >= 0");
    }
    if (!(durations.total() > 0))
      throw ValidationError("durations: total duration must be > 0");
  }
};

struct Episode {
  TrajectoryLog log;
  std::vector<SkillLabel> ground_truth;  // one label per sample
};

// Fixed physical constants of the canonical pick-and-place scene.
inline constexpr double kApertureOpen = 0.08;    // m
inline constexpr double kHoldForce = 10.0;       // N
inline constexpr double kEffortInertia = 0.1;    // N*m per rad/s^2
inline constexpr double kCarryLoad = 0.5;        // N*m, payload torque while carrying
inline constexpr double kRampFraction = 0.2;     // accel/decel share of a motion phase

namespace detail {

// Velocity of the trapezoidal profile at local phase time tau.
inline double trapezoid_velocity(double tau, double duration, double v_max) {
  if (duration <= 0 || tau < 0 || tau >= duration) return 0;
  const double a = kRampFraction * duration;
  if (tau < a) return v_max * (tau / a);
  if (tau < duration - a) return v_max;
  return v_max * ((duration - tau) / a);
}

inline double trapezoid_accel(double tau, double duration, double v_max) {
  if (duration <= 0 || tau < 0 || tau >= duration) return 0;
  const double a = kRampFraction * duration;
  if (tau < a) return v_max / a;
  if (tau < duration - a) return 0;
  return -v_max / a;
}

// Displacement integral of the trapezoid; total travel is 0.8 * v_max * D.
inline double trapezoid_displacement(double tau, double duration, double v_max) {
  if (duration <= 0 || tau <= 0) return 0;
  const double a = kRampFraction * duration;
  if (tau >= duration) return (1.0 - kRampFraction) * v_max * duration;
  if (tau < a) return v_max * tau * tau / (2 * a);
  if (tau < duration - a) return v_max * (a / 2 + (tau - a));
  const double r = duration - tau;
  return (1.0 - kRampFraction) * v_max * duration - v_max * r * r / (2 * a);
}

}  // namespace detail

// Registry of the canonical manipulator: per-joint Joint/Motor/Link triples
// plus the singleton Gripper, Base, Controller, Camera, Power and Software.
inline std::vector<HardwareComponent> canonical_hardware(int n_joints) {
  std::vector<HardwareComponent> hw;
  for (int j = 0; j < n_joints; ++j)
    hw.push_back({"joint" + std::to_string(j), ComponentKind::Joint, j});
  for (int j = 0; j < n_joints; ++j)
    hw.push_back({"motor" + std::to_string(j), ComponentKind::Motor, j});
  for (int j = 0; j < n_joints; ++j)
    hw.push_back({"link" + std::to_string(j), ComponentKind::Link, std::nullopt});
  hw.push_back({"gripper", ComponentKind::Gripper, std::nullopt});
  hw.push_back({"base", ComponentKind::Base, std::nullopt});
  hw.push_back({"controller", ComponentKind::Controller, std::nullopt});
  hw.push_back({"camera", ComponentKind::Camera, std::nullopt});
  hw.push_back({"power", ComponentKind::Power, std::nullopt});
  hw.push_back({"software", ComponentKind::Software, std::nullopt});
  return hw;
}

// Deterministic synthetic pick-and-place episode. Phases run Idle, Move,
// Pick, Carry, Place, Idle; Move/Carry velocities follow the trapezoid with
// peak v_max; Pick closes the gripper to aperture 0 with a force ramp and
// Place reopens it. Identical config (including seed) gives bit-identical
// output.
inline Episode generate_episode(const ScenarioConfig& cfg) {
  cfg.validate();

  // Cumulative phase boundaries: idle_lead, move, pick, carry, place, idle_tail.
  const double phase_dur[6] = {cfg.durations.idle_lead, cfg.durations.move,
                               cfg.durations.pick,      cfg.durations.carry,
                               cfg.durations.place,     cfg.durations.idle_tail};
  const SkillLabel phase_label[6] = {SkillLabel::Idle, SkillLabel::Move,
                                     SkillLabel::Pick, SkillLabel::Carry,
                                     SkillLabel::Place, SkillLabel::Idle};
  double cum[7];
  cum[0] = 0;
  for (int i = 0; i < 6; ++i) cum[i + 1] = cum[i] + phase_dur[i];
  const double total = cum[6];

  const std::size_t n_samples =
      static_cast<std::size_t>(std::floor(total / cfg.dt - 1e-9)) + 1;
  const int nj = cfg.n_joints;

  Episode ep;
  ep.log.dt = cfg.dt;
  ep.log.hardware = canonical_hardware(nj);
  ep.log.joints.assign(nj, std::vector<JointSample>(n_samples));
  ep.log.gripper.resize(n_samples);
  ep.ground_truth.resize(n_samples);

  auto phase_of = [&](double t) {
    for (int i = 0; i < 6; ++i) {
      if (t < cum[i + 1] - 1e-12) return i;
    }
    return 5;
  };

  const std::uint64_t slots_per_sample = 3 * static_cast<std::uint64_t>(nj) + 2;
  auto noise = [&](std::size_t k, std::uint64_t slot, double sigma) {
    if (sigma == 0) return 0.0;
    return sigma * gaussian(cfg.seed, k * slots_per_sample + slot);
  };

  for (std::size_t k = 0; k < n_samples; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    const int phase = phase_of(t);
    ep.ground_truth[k] = phase_label[phase];

    // Local times inside the two motion phases (clamped outside them).
    const double tau_move = t - cum[1];
    const double tau_carry = t - cum[3];
    const bool in_move = phase == 1;
    const bool in_carry = phase == 3;

    double vel = 0, acc = 0;
    if (in_move) {
      vel = detail::trapezoid_velocity(tau_move, phase_dur[1], cfg.v_max);
      acc = detail::trapezoid_accel(tau_move, phase_dur[1], cfg.v_max);
    } else if (in_carry) {
      vel = -detail::trapezoid_velocity(tau_carry, phase_dur[3], cfg.v_max);
      acc = -detail::trapezoid_accel(tau_carry, phase_dur[3], cfg.v_max);
    }
    const double disp =
        detail::trapezoid_displacement(std::clamp(tau_move, 0.0, phase_dur[1]),
                                       phase_dur[1], cfg.v_max) -
        detail::trapezoid_displacement(std::clamp(tau_carry, 0.0, phase_dur[3]),
                                       phase_dur[3], cfg.v_max);

    for (int j = 0; j < nj; ++j) {
      const double dir = (j % 2 == 0) ? 1.0 : -1.0;
      JointSample& s = ep.log.joints[j][k];
      s.t = t;
      s.position = dir * disp + noise(k, 3 * j + 0, cfg.noise_sigma.position);
      s.velocity = dir * vel + noise(k, 3 * j + 1, cfg.noise_sigma.velocity);
      s.effort = dir * kEffortInertia * acc + (in_carry ? kCarryLoad : 0.0) +
                 noise(k, 3 * j + 2, cfg.noise_sigma.effort);
    }

    double aperture = kApertureOpen, force = 0;
    if (phase == 2) {  // Pick: close monotonically, ramp the grasp force.
      const double f = (t - cum[2]) / phase_dur[2];
      aperture = kApertureOpen * (1 - f);
      force = kHoldForce * f;
    } else if (phase == 3) {  // Carry: closed on the payload.
      aperture = 0;
      force = kHoldForce;
    } else if (phase == 4) {  // Place: reopen, release the force.
      const double f = (t - cum[4]) / phase_dur[4];
      aperture = kApertureOpen * f;
      force = kHoldForce * (1 - f);
    }
    GripperSample& g = ep.log.gripper[k];
    g.t = t;
    g.aperture = aperture + noise(k, 3 * nj + 0, cfg.noise_sigma.aperture);
    g.force = force + noise(k, 3 * nj + 1, cfg.noise_sigma.force);
  }
  return ep;
}

// Randomized variations of a base scenario for dataset generation: v_max in
// [0.2, 2.0], every phase duration scaled by [0.5, 1.5], noise scaled by
// [0.5, 1.5], per-episode derived seeds.
inline std::vector<ScenarioConfig> sample_scenarios(const ScenarioConfig& base,
                                                    std::size_t count,
                                                    std::uint64_t seed) {
  base.validate();
  std::vector<ScenarioConfig> out;
  out.reserve(count);
  Rng master(seed);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(master.fork(i));
    ScenarioConfig cfg = base;
    cfg.v_max = rng.uniform(0.2, 2.0);
    cfg.durations.move = base.durations.move * rng.uniform(0.5, 1.5);
    cfg.durations.pick = base.durations.pick * rng.uniform(0.5, 1.5);
    cfg.durations.carry = base.durations.carry * rng.uniform(0.5, 1.5);
    cfg.durations.place = base.durations.place * rng.uniform(0.5, 1.5);
    cfg.durations.idle_lead = base.durations.idle_lead * rng.uniform(0.5, 1.5);
    cfg.durations.idle_tail = base.durations.idle_tail * rng.uniform(0.5, 1.5);
    const double noise_scale = rng.uniform(0.5, 1.5);
    cfg.noise_sigma.position = base.noise_sigma.position * noise_scale;
    cfg.noise_sigma.velocity = base.noise_sigma.velocity * noise_scale;
    cfg.noise_sigma.effort = base.noise_sigma.effort * noise_scale;
    cfg.noise_sigma.aperture = base.noise_sigma.aperture * noise_scale;
    cfg.noise_sigma.force = base.noise_sigma.force * noise_scale;
    cfg.seed = rng.fork(0xE915);
    out.push_back(cfg);
  }
  return out;
}

}  // namespace riskpipe
