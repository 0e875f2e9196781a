#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "riskpipe/behavior.hpp"
#include "riskpipe/detail/json_util.hpp"
#include "riskpipe/error.hpp"
#include "riskpipe/risk_model.hpp"

namespace riskpipe {

// Exponential failure law with a linear velocity stress multiplier:
//   p = 1 - exp(-lambda * (1 + c_v * v / v_ref) * active_hours)
// Monotone (non-strictly) in lambda, active time and mean velocity.
inline double event_probability(const ComponentUsage& usage, const RiskEntry& entry) {
  const double stress = 1.0 + entry.c_v * usage.mean_velocity / entry.v_ref;
  const double hours = usage.active_time / 3600.0;
  return 1.0 - std::exp(-entry.lambda_per_hour * stress * hours);
}

inline std::string tree_id_for(std::size_t segment_index, SkillLabel skill) {
  return std::string(to_string(skill)) + "_" + std::to_string(segment_index);
}

// Fault tree for one non-Idle segment: OR top over per-component basic
// events; redundancy groups (and replicated units via group_size) become
// AND-gates. Idle segments produce no tree.
inline std::optional<FaultTree> build_fault_tree(const SkillSegment& seg,
                                                 const std::vector<ComponentUsage>& usages,
                                                 const RiskData& risk) {
  if (seg.skill == SkillLabel::Idle) return std::nullopt;
  risk.validate();

  FaultTree tree;
  tree.skill = seg.skill;
  Gate top;
  top.id = "top";
  top.kind = GateKind::Or;

  auto add_event = [&](const ComponentUsage& u, const RiskEntry& e,
                       const std::string& id) {
    BasicEvent ev;
    ev.id = id;
    ev.probability = event_probability(u, e);
    ev.component_id = u.component_id;
    ev.skill = seg.skill;
    tree.events.push_back(std::move(ev));
  };

  // Group members in usage order; the gate is emitted at the position of
  // the group's first member.
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < usages.size(); ++i) {
    const auto it = risk.components.find(usages[i].component_id);
    if (it == risk.components.end())
      throw ModelError("risk data: no entry for component '" + usages[i].component_id +
                       "' required by skill '" + to_string(seg.skill) + "'");
    if (it->second.redundancy_group)
      groups[*it->second.redundancy_group].push_back(i);
  }

  std::map<std::string, bool> group_emitted;
  for (std::size_t i = 0; i < usages.size(); ++i) {
    const ComponentUsage& u = usages[i];
    const RiskEntry& entry = risk.components.at(u.component_id);
    const std::vector<std::size_t>* members = nullptr;
    if (entry.redundancy_group) {
      if (group_emitted[*entry.redundancy_group]) continue;
      group_emitted[*entry.redundancy_group] = true;
      members = &groups[*entry.redundancy_group];
    }

    if (members && members->size() >= 2) {
      Gate andg;
      andg.id = "red_" + *entry.redundancy_group;
      andg.kind = GateKind::And;
      for (std::size_t m : *members) {
        add_event(usages[m], risk.components.at(usages[m].component_id),
                  usages[m].component_id);
        andg.children.push_back(usages[m].component_id);
      }
      top.children.push_back(andg.id);
      tree.gates.push_back(std::move(andg));
    } else if (entry.group_size && *entry.group_size >= 2) {
      // a single component replicated group_size times
      Gate andg;
      andg.id = "red_" + u.component_id;
      andg.kind = GateKind::And;
      for (int r = 1; r <= *entry.group_size; ++r) {
        const std::string id = u.component_id + "#" + std::to_string(r);
        add_event(u, entry, id);
        andg.children.push_back(id);
      }
      top.children.push_back(andg.id);
      tree.gates.push_back(std::move(andg));
    } else {
      add_event(u, entry, u.component_id);
      top.children.push_back(u.component_id);
    }
  }

  if (top.children.empty()) {
    // a skill with no active components cannot fail; keep the tree valid
    // with a single zero-probability event
    BasicEvent ev;
    ev.id = "no_active_components";
    ev.probability = 0.0;
    ev.skill = seg.skill;
    tree.events.push_back(std::move(ev));
    top.children.push_back("no_active_components");
  }

  tree.top = top.id;
  tree.gates.insert(tree.gates.begin(), std::move(top));
  tree.validate();
  return tree;
}

// Line-shaped chain over the profile's non-Idle segments: one transient
// state per segment, each with a tree-defined transition to its own fail
// state and a complement transition to the next transient (last one to the
// done state). All-Idle profiles collapse to the done state alone.
inline HybridRiskModel build_chain(const BehavioralProfile& profile,
                                   const std::map<std::string, FaultTree>& trees) {
  profile.validate();

  struct Row {
    std::size_t seg_index;
    SkillLabel skill;
  };
  std::vector<Row> rows;
  for (std::size_t i = 0; i < profile.segments.size(); ++i) {
    if (profile.segments[i].skill != SkillLabel::Idle)
      rows.push_back({i, profile.segments[i].skill});
  }

  HybridRiskModel model;
  if (rows.empty()) {
    model.states.push_back({"done", StateKind::AbsorbingDone, std::nullopt, std::nullopt});
    model.initial = "done";
    model.validate();
    return model;
  }

  auto state_id = [](const Row& r) {
    return "s" + std::to_string(r.seg_index) + "_" + to_string(r.skill);
  };
  auto fail_id = [](const Row& r) {
    return "fail" + std::to_string(r.seg_index) + "_" + to_string(r.skill);
  };

  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    const SkillSegment& seg = profile.segments[r.seg_index];
    const std::string tid = tree_id_for(r.seg_index, r.skill);
    auto it = trees.find(tid);
    if (it == trees.end())
      throw ModelError("chain: segment " + std::to_string(r.seg_index) +
                       " (" + to_string(r.skill) + ") has no matching fault tree '" +
                       tid + "'");
    model.fault_trees.emplace(tid, it->second);

    ChainState st;
    st.id = state_id(r);
    st.kind = StateKind::Transient;
    st.skill = r.skill;
    st.window = std::make_pair(seg.t_start, seg.t_end);
    model.states.push_back(std::move(st));
    model.states.push_back({fail_id(r), StateKind::AbsorbingFail, r.skill, std::nullopt});

    Transition to_fail;
    to_fail.from = state_id(r);
    to_fail.to = fail_id(r);
    to_fail.kind = Transition::Kind::TreeRef;
    to_fail.tree = tid;
    model.transitions.push_back(std::move(to_fail));

    Transition forward;
    forward.from = state_id(r);
    forward.to = i + 1 < rows.size() ? state_id(rows[i + 1]) : "done";
    forward.kind = Transition::Kind::Complement;
    model.transitions.push_back(std::move(forward));
  }
  model.states.push_back({"done", StateKind::AbsorbingDone, std::nullopt, std::nullopt});
  model.initial = state_id(rows.front());
  model.validate();
  return model;
}

// Full segment-by-segment transformation: fault trees for every non-Idle
// segment, then the interconnecting chain.
inline HybridRiskModel transform_profile(const BehavioralProfile& profile,
                                         const RiskData& risk) {
  profile.validate();
  risk.validate();
  std::map<std::string, FaultTree> trees;
  for (std::size_t i = 0; i < profile.segments.size(); ++i) {
    auto tree = build_fault_tree(profile.segments[i], profile.usages[i], risk);
    if (tree) trees.emplace(tree_id_for(i, profile.segments[i].skill), std::move(*tree));
  }
  return build_chain(profile, trees);
}

// --- Risk data file ----------------------------------------------------

inline RiskData parse_risk_data(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid risk data JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("components") || !j["components"].is_object())
    throw FormatError("risk data: expected top-level object with 'components'");
  RiskData data;
  for (auto it = j["components"].begin(); it != j["components"].end(); ++it) {
    const auto& je = it.value();
    if (!je.is_object())
      throw FormatError("risk data: entry for '" + it.key() + "' must be an object");
    RiskEntry e;
    e.lambda_per_hour = detail::require_double(je, "lambda_per_hour", "risk entry");
    if (je.contains("c_v")) e.c_v = detail::require_double(je, "c_v", "risk entry");
    if (je.contains("v_ref")) e.v_ref = detail::require_double(je, "v_ref", "risk entry");
    if (je.contains("redundancy_group")) {
      if (!je["redundancy_group"].is_string())
        throw FormatError("risk data: 'redundancy_group' must be a string");
      e.redundancy_group = je["redundancy_group"].get<std::string>();
    }
    if (je.contains("group_size")) {
      if (!je["group_size"].is_number_integer())
        throw FormatError("risk data: 'group_size' must be an integer");
      e.group_size = je["group_size"].get<int>();
    }
    data.components.emplace(it.key(), std::move(e));
  }
  try {
    data.validate();
  } catch (const ValidationError& e) {
    throw FormatError(e.what());
  }
  return data;
}

inline std::string serialize_risk_data(const RiskData& data) {
  data.validate();
  nlohmann::ordered_json comps = nlohmann::ordered_json::object();
  for (const auto& [id, e] : data.components) {
    nlohmann::ordered_json je;
    je["lambda_per_hour"] = e.lambda_per_hour;
    je["c_v"] = e.c_v;
    je["v_ref"] = e.v_ref;
    if (e.redundancy_group) je["redundancy_group"] = *e.redundancy_group;
    if (e.group_size) je["group_size"] = *e.group_size;
    comps[id] = std::move(je);
  }
  nlohmann::ordered_json j;
  j["components"] = std::move(comps);
  return j.dump(2) + "\n";
}

}  // namespace riskpipe
