#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "riskpipe/detail/json_util.hpp"
#include "riskpipe/error.hpp"
#include "riskpipe/risk_model.hpp"

namespace riskpipe {

inline constexpr const char* kExchangeSchema = "openpra-like/1";

inline std::string serialize_model(const HybridRiskModel& model) {
  model.validate();
  nlohmann::ordered_json j;
  j["schema"] = kExchangeSchema;
  j["initial"] = model.initial;

  nlohmann::ordered_json states = nlohmann::ordered_json::array();
  for (const ChainState& s : model.states) {
    nlohmann::ordered_json js;
    js["id"] = s.id;
    js["kind"] = to_string(s.kind);
    if (s.skill) js["skill"] = to_string(*s.skill);
    if (s.window) js["window"] = {s.window->first, s.window->second};
    states.push_back(std::move(js));
  }
  j["states"] = std::move(states);

  nlohmann::ordered_json transitions = nlohmann::ordered_json::array();
  for (const Transition& t : model.transitions) {
    nlohmann::ordered_json jt;
    jt["from"] = t.from;
    jt["to"] = t.to;
    switch (t.kind) {
      case Transition::Kind::Numeric:
        jt["p"] = t.p;
        break;
      case Transition::Kind::TreeRef:
        jt["tree"] = t.tree;
        break;
      case Transition::Kind::Complement:
        break;  // neither p nor tree: the row complement
    }
    transitions.push_back(std::move(jt));
  }
  j["transitions"] = std::move(transitions);

  nlohmann::ordered_json trees = nlohmann::ordered_json::object();
  for (const auto& [id, tree] : model.fault_trees) {
    nlohmann::ordered_json jt;
    jt["skill"] = to_string(tree.skill);
    jt["top"] = tree.top;
    nlohmann::ordered_json gates = nlohmann::ordered_json::array();
    for (const Gate& g : tree.gates) {
      nlohmann::ordered_json jg;
      jg["id"] = g.id;
      jg["kind"] = to_string(g.kind);
      if (g.kind == GateKind::KofN) jg["k"] = g.k;
      jg["children"] = g.children;
      gates.push_back(std::move(jg));
    }
    jt["gates"] = std::move(gates);
    nlohmann::ordered_json events = nlohmann::ordered_json::array();
    for (const BasicEvent& e : tree.events) {
      nlohmann::ordered_json je;
      je["id"] = e.id;
      je["p"] = e.probability;
      if (!e.component_id.empty()) je["component"] = e.component_id;
      if (e.skill) je["skill"] = to_string(*e.skill);
      events.push_back(std::move(je));
    }
    jt["events"] = std::move(events);
    trees[id] = std::move(jt);
  }
  j["fault_trees"] = std::move(trees);
  return j.dump(2) + "\n";
}

inline HybridRiskModel parse_model(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid exchange JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("exchange document: expected an object");
  detail::reject_unknown_fields(
      j, {"schema", "initial", "states", "transitions", "fault_trees"},
      "exchange document");
  const std::string schema = detail::require_string(j, "schema", "exchange document");
  if (schema != kExchangeSchema)
    throw FormatError("exchange document: unknown schema version '" + schema + "'");

  HybridRiskModel model;
  model.initial = detail::require_string(j, "initial", "exchange document");

  const auto& states = detail::require_field(j, "states", "exchange document");
  if (!states.is_array()) throw FormatError("exchange document: 'states' must be an array");
  for (const auto& js : states) {
    detail::reject_unknown_fields(js, {"id", "kind", "skill", "window"}, "state");
    ChainState s;
    s.id = detail::require_string(js, "id", "state");
    s.kind = state_kind_from_string(detail::require_string(js, "kind", "state"));
    if (js.contains("skill"))
      s.skill = skill_from_string(detail::require_string(js, "skill", "state"));
    if (js.contains("window")) {
      const auto& w = js["window"];
      if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number())
        throw FormatError("state: 'window' must be [t_start, t_end]");
      s.window = std::make_pair(w[0].get<double>(), w[1].get<double>());
    }
    model.states.push_back(std::move(s));
  }

  const auto& transitions = detail::require_field(j, "transitions", "exchange document");
  if (!transitions.is_array())
    throw FormatError("exchange document: 'transitions' must be an array");
  for (const auto& jt : transitions) {
    detail::reject_unknown_fields(jt, {"from", "to", "p", "tree"}, "transition");
    Transition t;
    t.from = detail::require_string(jt, "from", "transition");
    t.to = detail::require_string(jt, "to", "transition");
    const bool has_p = jt.contains("p");
    const bool has_tree = jt.contains("tree");
    if (has_p && has_tree)
      throw FormatError("transition: 'p' and 'tree' are mutually exclusive");
    if (has_p) {
      t.kind = Transition::Kind::Numeric;
      t.p = detail::require_double(jt, "p", "transition");
    } else if (has_tree) {
      t.kind = Transition::Kind::TreeRef;
      t.tree = detail::require_string(jt, "tree", "transition");
    } else {
      t.kind = Transition::Kind::Complement;
    }
    model.transitions.push_back(std::move(t));
  }

  const auto& trees = detail::require_field(j, "fault_trees", "exchange document");
  if (!trees.is_object())
    throw FormatError("exchange document: 'fault_trees' must be an object");
  for (auto it = trees.begin(); it != trees.end(); ++it) {
    const auto& jt = it.value();
    detail::reject_unknown_fields(jt, {"skill", "top", "gates", "events"}, "fault tree");
    FaultTree tree;
    tree.skill = skill_from_string(detail::require_string(jt, "skill", "fault tree"));
    tree.top = detail::require_string(jt, "top", "fault tree");
    const auto& gates = detail::require_field(jt, "gates", "fault tree");
    if (!gates.is_array()) throw FormatError("fault tree: 'gates' must be an array");
    for (const auto& jg : gates) {
      detail::reject_unknown_fields(jg, {"id", "kind", "k", "children"}, "gate");
      Gate g;
      g.id = detail::require_string(jg, "id", "gate");
      g.kind = gate_kind_from_string(detail::require_string(jg, "kind", "gate"));
      if (g.kind == GateKind::KofN) {
        g.k = static_cast<int>(detail::require_double(jg, "k", "gate"));
      } else if (jg.contains("k")) {
        throw FormatError("gate: 'k' is only valid for kofn gates");
      }
      const auto& ch = detail::require_field(jg, "children", "gate");
      if (!ch.is_array()) throw FormatError("gate: 'children' must be an array");
      for (const auto& c : ch) {
        if (!c.is_string()) throw FormatError("gate: children must be node ids");
        g.children.push_back(c.get<std::string>());
      }
      tree.gates.push_back(std::move(g));
    }
    const auto& events = detail::require_field(jt, "events", "fault tree");
    if (!events.is_array()) throw FormatError("fault tree: 'events' must be an array");
    for (const auto& je : events) {
      detail::reject_unknown_fields(je, {"id", "p", "component", "skill"}, "event");
      BasicEvent e;
      e.id = detail::require_string(je, "id", "event");
      e.probability = detail::require_double(je, "p", "event");
      if (je.contains("component"))
        e.component_id = detail::require_string(je, "component", "event");
      if (je.contains("skill"))
        e.skill = skill_from_string(detail::require_string(je, "skill", "event"));
      tree.events.push_back(std::move(e));
    }
    model.fault_trees.emplace(it.key(), std::move(tree));
  }

  model.validate();
  return model;
}

}  // namespace riskpipe
