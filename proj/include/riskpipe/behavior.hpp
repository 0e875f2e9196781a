#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "riskpipe/detail/json_util.hpp"
#include "riskpipe/error.hpp"
#include "riskpipe/skills.hpp"
#include "riskpipe/trajectory.hpp"

namespace riskpipe {

struct SkillSegment {
  SkillLabel skill = SkillLabel::Idle;
  double t_start = 0;
  double t_end = 0;

  double duration() const { return t_end - t_start; }
  bool operator==(const SkillSegment&) const = default;
};

struct ComponentUsage {
  std::string component_id;
  double mean_velocity = 0;  // rad/s, 0 for non-kinematic components
  double peak_velocity = 0;
  double active_time = 0;  // seconds within the segment
  double mean_effort = 0;

  bool operator==(const ComponentUsage&) const = default;
};

// Rule table for the component-to-skill mapping. Base, Controller, Power and
// Software count as always-on in every non-Idle segment; Idle segments have
// no active components by construction.
struct ActivityRules {
  double v_eps = 0.01;  // rad/s, joint activity threshold
  double f_eps = 0.1;   // N, gripper force threshold
  std::vector<SkillLabel> camera_active_in = {SkillLabel::Move, SkillLabel::Carry};
};

struct BehavioralProfile {
  std::vector<SkillSegment> segments;
  // usages[i] lists the active components of segments[i]
  std::vector<std::vector<ComponentUsage>> usages;
  double duration = 0;

  bool operator==(const BehavioralProfile&) const = default;

  void validate() const {
    if (segments.size() != usages.size())
      throw ValidationError("profile: segments/usages size mismatch");
    if (segments.empty()) throw ValidationError("profile: no segments");
    double cursor = 0;
    for (std::size_t i = 0; i < segments.size(); ++i) {
      const SkillSegment& s = segments[i];
      if (!(s.t_start < s.t_end))
        throw ValidationError("profile: segment " + std::to_string(i) +
                              " has t_start >= t_end");
      if (std::abs(s.t_start - cursor) > 1e-9)
        throw ValidationError("profile: segment " + std::to_string(i) +
                              " is not contiguous with its predecessor");
      cursor = s.t_end;
      for (const ComponentUsage& u : usages[i]) {
        if (u.active_time < -1e-12 || u.active_time > s.duration() + 1e-9)
          throw ValidationError("profile: active_time out of segment bounds for " +
                                u.component_id);
        if (u.mean_velocity < 0 || u.peak_velocity < u.mean_velocity)
          throw ValidationError("profile: velocity bounds violated for " +
                                u.component_id);
      }
    }
    if (std::abs(cursor - duration) > 1e-9)
      throw ValidationError("profile: segments do not cover [0, duration]");
  }
};

// Merges equal-label windows into timed segments. Segment bounds sit at the
// midpoints between the centers of disagreeing windows; segments shorter
// than min_duration are absorbed into the longer neighbor (ties prefer the
// preceding one).
inline std::vector<SkillSegment> segment_labels(const LabeledSeries& series,
                                                double dt, std::size_t window,
                                                std::size_t stride,
                                                double min_duration) {
  if (series.labels.empty()) throw ValidationError("series: empty label series");
  if (min_duration < 0) throw ValidationError("min_duration: must be >= 0");
  if (!(dt > 0)) throw ValidationError("dt: must be > 0");
  if (window < 1 || stride < 1)
    throw ValidationError("window/stride: must be >= 1");

  // boundary between consecutive windows i and i+1 = midpoint of their centers
  auto boundary = [&](std::size_t i) {
    return dt * (static_cast<double>(i * stride) +
                 0.5 * static_cast<double>(window) + 0.5 * static_cast<double>(stride));
  };

  const std::size_t n = series.labels.size();
  const double span_end =
      dt * static_cast<double>((n - 1) * stride + window);

  std::vector<SkillSegment> segs;
  std::size_t run_start = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i < n && series.labels[i] == series.labels[run_start]) continue;
    SkillSegment s;
    s.skill = series.labels[run_start];
    s.t_start = segs.empty() ? 0.0 : segs.back().t_end;
    s.t_end = i == n ? span_end : boundary(i - 1);
    segs.push_back(s);
    run_start = i;
  }

  // Absorb short segments, shortest first.
  while (segs.size() > 1) {
    std::size_t victim = segs.size();
    for (std::size_t i = 0; i < segs.size(); ++i) {
      if (segs[i].duration() < min_duration &&
          (victim == segs.size() || segs[i].duration() < segs[victim].duration()))
        victim = i;
    }
    if (victim == segs.size()) break;

    bool into_prev;
    if (victim == 0) {
      into_prev = false;
    } else if (victim + 1 == segs.size()) {
      into_prev = true;
    } else {
      into_prev = segs[victim - 1].duration() >= segs[victim + 1].duration();
    }
    if (into_prev) {
      segs[victim - 1].t_end = segs[victim].t_end;
    } else {
      segs[victim + 1].t_start = segs[victim].t_start;
    }
    segs.erase(segs.begin() + static_cast<std::ptrdiff_t>(victim));

    // merge equal-label neighbors the absorption may have created
    for (std::size_t i = 1; i < segs.size();) {
      if (segs[i].skill == segs[i - 1].skill) {
        segs[i - 1].t_end = segs[i].t_end;
        segs.erase(segs.begin() + static_cast<std::ptrdiff_t>(i));
      } else {
        ++i;
      }
    }
  }
  return segs;
}

namespace detail {

inline bool trailing_index(const std::string& id, int& out) {
  std::size_t pos = id.size();
  while (pos > 0 && std::isdigit(static_cast<unsigned char>(id[pos - 1]))) --pos;
  if (pos == id.size()) return false;
  out = std::stoi(id.substr(pos));
  return true;
}

}  // namespace detail

// Active components of one segment with their usage properties. Idle
// segments yield no usages.
inline std::vector<ComponentUsage> map_active_components(const TrajectoryLog& log,
                                                         const SkillSegment& seg,
                                                         const ActivityRules& rules) {
  if (seg.t_start < -1e-9 || seg.t_end > log.duration() + 1e-9)
    throw ValidationError("segment: outside log time range");
  if (seg.skill == SkillLabel::Idle) return {};

  const double dt = log.dt;
  const std::size_t n = log.sample_count();
  auto clamp_index = [&](double t) {
    double k = std::ceil((t - 1e-9) / dt);
    if (k < 0) k = 0;
    if (k > static_cast<double>(n)) k = static_cast<double>(n);
    return static_cast<std::size_t>(k);
  };
  const std::size_t k0 = clamp_index(seg.t_start);
  const std::size_t k1 = clamp_index(seg.t_end);
  if (k0 >= k1) return {};
  const double count = static_cast<double>(k1 - k0);
  const double dur = seg.duration();

  struct JointStats {
    double mean_abs_v = 0, peak_abs_v = 0, mean_abs_e = 0, active_fraction = 0;
    bool active = false;
  };
  std::vector<JointStats> js(log.joint_count());
  for (std::size_t j = 0; j < log.joint_count(); ++j) {
    double sum_v = 0, sum_e = 0, peak = 0;
    std::size_t hits = 0;
    for (std::size_t k = k0; k < k1; ++k) {
      const double av = std::abs(log.joints[j][k].velocity);
      sum_v += av;
      peak = std::max(peak, av);
      sum_e += std::abs(log.joints[j][k].effort);
      if (av > rules.v_eps) ++hits;
    }
    js[j].mean_abs_v = sum_v / count;
    js[j].peak_abs_v = peak;
    js[j].mean_abs_e = sum_e / count;
    js[j].active_fraction = static_cast<double>(hits) / count;
    js[j].active = js[j].mean_abs_v > rules.v_eps;
  }

  double force_sum = 0, force_hits = 0;
  for (std::size_t k = k0; k < k1; ++k) {
    force_sum += std::abs(log.gripper[k].force);
    if (std::abs(log.gripper[k].force) > rules.f_eps) ++force_hits;
  }
  const double mean_force = force_sum / count;

  const bool camera_active =
      std::find(rules.camera_active_in.begin(), rules.camera_active_in.end(),
                seg.skill) != rules.camera_active_in.end();
  const bool grasp_skill =
      seg.skill == SkillLabel::Pick || seg.skill == SkillLabel::Place;

  std::vector<ComponentUsage> out;
  for (const HardwareComponent& c : log.hardware) {
    ComponentUsage u;
    u.component_id = c.id;
    switch (c.kind) {
      case ComponentKind::Joint:
      case ComponentKind::Motor: {
        const JointStats& s = js[static_cast<std::size_t>(*c.joint_index)];
        if (!s.active) continue;
        u.mean_velocity = s.mean_abs_v;
        u.peak_velocity = s.peak_abs_v;
        u.active_time = dur * s.active_fraction;
        u.mean_effort = s.mean_abs_e;
        break;
      }
      case ComponentKind::Link: {
        // A link follows its joint; registry convention ties them via the
        // trailing index in the id.
        int idx = -1;
        if (!detail::trailing_index(c.id, idx) ||
            static_cast<std::size_t>(idx) >= js.size()) {
          idx = -1;
          double best = -1;
          for (std::size_t j = 0; j < js.size(); ++j) {
            if (js[j].active && js[j].mean_abs_v > best) {
              best = js[j].mean_abs_v;
              idx = static_cast<int>(j);
            }
          }
          if (idx < 0) continue;
        }
        const JointStats& s = js[static_cast<std::size_t>(idx)];
        if (!s.active) continue;
        u.mean_velocity = s.mean_abs_v;
        u.peak_velocity = s.peak_abs_v;
        u.active_time = dur * s.active_fraction;
        break;
      }
      case ComponentKind::Gripper: {
        const bool force_active = mean_force > rules.f_eps;
        if (!grasp_skill && !force_active) continue;
        u.active_time =
            grasp_skill ? dur : dur * (force_hits / count);
        u.mean_effort = mean_force;
        break;
      }
      case ComponentKind::Camera: {
        if (!camera_active) continue;
        u.active_time = dur;
        break;
      }
      case ComponentKind::Base:
      case ComponentKind::Controller:
      case ComponentKind::Power:
      case ComponentKind::Software: {
        u.active_time = dur;
        break;
      }
      default:
        throw ValidationError("hardware: unknown component kind for " + c.id);
    }
    out.push_back(std::move(u));
  }
  return out;
}

struct ProfileParams {
  double min_duration = 0.25;  // seconds
  ActivityRules rules;
};

inline BehavioralProfile build_profile(const TrajectoryLog& log,
                                       const LabeledSeries& series,
                                       const ProfileParams& params = {}) {
  BehavioralProfile profile;
  profile.duration = log.duration();
  profile.segments = segment_labels(series, log.dt, series.window, series.stride,
                                    params.min_duration);
  // windows may not reach the final samples; the last segment owns the tail
  profile.segments.back().t_end = profile.duration;
  profile.usages.reserve(profile.segments.size());
  for (const SkillSegment& seg : profile.segments)
    profile.usages.push_back(map_active_components(log, seg, params.rules));
  profile.validate();
  return profile;
}

// --- JSON -------------------------------------------------------------

inline std::string serialize_profile(const BehavioralProfile& profile) {
  profile.validate();
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["duration"] = profile.duration;
  nlohmann::ordered_json segs = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < profile.segments.size(); ++i) {
    const SkillSegment& s = profile.segments[i];
    nlohmann::ordered_json jseg;
    jseg["skill"] = to_string(s.skill);
    jseg["t_start"] = s.t_start;
    jseg["t_end"] = s.t_end;
    nlohmann::ordered_json comps = nlohmann::ordered_json::array();
    for (const ComponentUsage& u : profile.usages[i]) {
      comps.push_back({{"id", u.component_id},
                       {"mean_velocity", u.mean_velocity},
                       {"peak_velocity", u.peak_velocity},
                       {"active_time", u.active_time},
                       {"mean_effort", u.mean_effort}});
    }
    jseg["components"] = std::move(comps);
    segs.push_back(std::move(jseg));
  }
  j["segments"] = std::move(segs);
  return j.dump(2) + "\n";
}

inline BehavioralProfile parse_profile(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid profile JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("version") || j["version"] != 1)
    throw FormatError("profile: unknown or missing version");
  BehavioralProfile profile;
  profile.duration = detail::require_double(j, "duration", "profile");
  const auto& segs = detail::require_field(j, "segments", "profile");
  if (!segs.is_array()) throw FormatError("profile: 'segments' must be an array");
  for (const auto& jseg : segs) {
    SkillSegment s;
    s.skill = skill_from_string(detail::require_string(jseg, "skill", "profile segment"));
    s.t_start = detail::require_double(jseg, "t_start", "profile segment");
    s.t_end = detail::require_double(jseg, "t_end", "profile segment");
    profile.segments.push_back(s);
    std::vector<ComponentUsage> usages;
    const auto& comps = detail::require_field(jseg, "components", "profile segment");
    if (!comps.is_array())
      throw FormatError("profile: 'components' must be an array");
    for (const auto& jc : comps) {
      ComponentUsage u;
      u.component_id = detail::require_string(jc, "id", "profile component");
      u.mean_velocity = detail::require_double(jc, "mean_velocity", "profile component");
      u.peak_velocity = detail::require_double(jc, "peak_velocity", "profile component");
      u.active_time = detail::require_double(jc, "active_time", "profile component");
      u.mean_effort = detail::require_double(jc, "mean_effort", "profile component");
      usages.push_back(std::move(u));
    }
    profile.usages.push_back(std::move(usages));
  }
  try {
    profile.validate();
  } catch (const ValidationError& e) {
    throw FormatError(std::string("profile: ") + e.what());
  }
  return profile;
}

}  // namespace riskpipe
