#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "riskpipe/error.hpp"
#include "riskpipe/skill_label.hpp"

namespace riskpipe {

// Expert-provided reliability data for one hardware component.
struct RiskEntry {
  double lambda_per_hour = 0;  // base failure rate
  double c_v = 0;              // velocity stress coefficient
  double v_ref = 1.0;          // rad/s reference for the stress term
  std::optional<std::string> redundancy_group;
  std::optional<int> group_size;  // replicated units, >= 2

  bool operator==(const RiskEntry&) const = default;
};

struct RiskData {
  std::map<std::string, RiskEntry> components;

  bool operator==(const RiskData&) const = default;

  void validate() const {
    for (const auto& [id, e] : components) {
      if (!(e.lambda_per_hour >= 0) || !std::isfinite(e.lambda_per_hour))
        throw ValidationError("risk data: lambda_per_hour must be finite and >= 0 (" +
                              id + ")");
      if (!(e.c_v >= 0) || !std::isfinite(e.c_v))
        throw ValidationError("risk data: c_v must be finite and >= 0 (" + id + ")");
      if (!(e.v_ref > 0) || !std::isfinite(e.v_ref))
        throw ValidationError("risk data: v_ref must be finite and > 0 (" + id + ")");
      if (e.group_size && *e.group_size < 2)
        throw ValidationError("risk data: group_size must be >= 2 (" + id + ")");
    }
  }
};

enum class GateKind { And, Or, KofN };

inline const char* to_string(GateKind k) {
  switch (k) {
    case GateKind::And:
      return "and";
    case GateKind::Or:
      return "or";
    case GateKind::KofN:
      return "kofn";
  }
  throw ValidationError("unknown gate kind");
}

inline GateKind gate_kind_from_string(const std::string& s) {
  if (s == "and") return GateKind::And;
  if (s == "or") return GateKind::Or;
  if (s == "kofn") return GateKind::KofN;
  throw FormatError("unknown gate kind: " + s);
}

struct Gate {
  std::string id;
  GateKind kind = GateKind::Or;
  int k = 0;  // used by KofN only
  std::vector<std::string> children;  // gate or event ids

  bool operator==(const Gate&) const = default;
};

// Leaf of a fault tree: failure of one component during one skill.
struct BasicEvent {
  std::string id;
  double probability = 0;
  std::string component_id;  // may be empty for hand-authored trees
  std::optional<SkillLabel> skill;

  bool operator==(const BasicEvent&) const = default;
};

struct FaultTree {
  SkillLabel skill = SkillLabel::Idle;
  std::string top;  // gate or event id
  std::vector<Gate> gates;
  std::vector<BasicEvent> events;

  bool operator==(const FaultTree&) const = default;

  const Gate* find_gate(const std::string& id) const {
    for (const auto& g : gates)
      if (g.id == id) return &g;
    return nullptr;
  }
  const BasicEvent* find_event(const std::string& id) const {
    for (const auto& e : events)
      if (e.id == id) return &e;
    return nullptr;
  }

  // Rooted-DAG checks: unique ids, resolvable children, gate arity, K-of-N
  // bounds, event probabilities in [0,1], no cycles.
  void validate() const {
    std::unordered_set<std::string> ids;
    for (const auto& g : gates) {
      if (!ids.insert(g.id).second)
        throw ModelError("fault tree: duplicate node id " + g.id);
      if (g.children.empty())
        throw ModelError("fault tree: gate " + g.id + " has no children");
      if (g.kind == GateKind::KofN &&
          (g.k < 1 || static_cast<std::size_t>(g.k) > g.children.size()))
        throw ModelError("fault tree: K-of-N gate " + g.id +
                         " needs 1 <= k <= child count");
    }
    for (const auto& e : events) {
      if (!ids.insert(e.id).second)
        throw ModelError("fault tree: duplicate node id " + e.id);
      if (!(e.probability >= 0 && e.probability <= 1) ||
          !std::isfinite(e.probability))
        throw ModelError("fault tree: event " + e.id +
                         " probability outside [0,1]");
    }
    if (!ids.count(top)) throw ModelError("fault tree: top node '" + top + "' not found");
    for (const auto& g : gates) {
      for (const auto& c : g.children) {
        if (!ids.count(c))
          throw ModelError("fault tree: gate " + g.id + " references unknown node " + c);
      }
    }
    // cycle detection over the gate graph
    std::unordered_map<std::string, int> mark;  // 0 fresh, 1 on stack, 2 done
    std::vector<std::pair<const Gate*, std::size_t>> stack;
    auto push = [&](const std::string& id) {
      const Gate* g = find_gate(id);
      if (!g) return true;  // events are leaves
      int& m = mark[id];
      if (m == 1) throw ModelError("fault tree: cycle through gate " + id);
      if (m == 2) return true;
      m = 1;
      stack.emplace_back(g, 0);
      return false;
    };
    push(top);
    while (!stack.empty()) {
      auto& [g, next] = stack.back();
      if (next == g->children.size()) {
        mark[g->id] = 2;
        stack.pop_back();
        continue;
      }
      push(g->children[next++]);
    }
  }
};

enum class StateKind { Transient, AbsorbingFail, AbsorbingDone };

inline const char* to_string(StateKind k) {
  switch (k) {
    case StateKind::Transient:
      return "transient";
    case StateKind::AbsorbingFail:
      return "fail";
    case StateKind::AbsorbingDone:
      return "done";
  }
  throw ValidationError("unknown state kind");
}

inline StateKind state_kind_from_string(const std::string& s) {
  if (s == "transient") return StateKind::Transient;
  if (s == "fail") return StateKind::AbsorbingFail;
  if (s == "done") return StateKind::AbsorbingDone;
  throw FormatError("unknown state kind: " + s);
}

struct ChainState {
  std::string id;
  StateKind kind = StateKind::Transient;
  std::optional<SkillLabel> skill;
  // source time span of the segment this state was generated from
  std::optional<std::pair<double, double>> window;

  bool operator==(const ChainState&) const = default;
};

// A transition carries a fixed probability, a fault-tree reference resolved
// at solve time, or nothing at all: the complement filling the row to 1.
struct Transition {
  enum class Kind { Numeric, TreeRef, Complement };

  std::string from;
  std::string to;
  Kind kind = Kind::Numeric;
  double p = 0;      // Numeric
  std::string tree;  // TreeRef

  bool operator==(const Transition&) const = default;
};

// Markov chain whose failure transitions are defined by per-skill fault
// trees.
struct HybridRiskModel {
  std::vector<ChainState> states;
  std::vector<Transition> transitions;
  std::map<std::string, FaultTree> fault_trees;
  std::string initial;

  bool operator==(const HybridRiskModel&) const = default;

  const ChainState* find_state(const std::string& id) const {
    for (const auto& s : states)
      if (s.id == id) return &s;
    return nullptr;
  }

  void validate() const {
    std::unordered_map<std::string, const ChainState*> by_id;
    std::size_t done_count = 0;
    for (const auto& s : states) {
      if (!by_id.emplace(s.id, &s).second)
        throw ModelError("chain: duplicate state id " + s.id);
      if (s.kind == StateKind::AbsorbingDone) ++done_count;
    }
    if (done_count != 1)
      throw ModelError("chain: expected exactly one done state, found " +
                       std::to_string(done_count));
    if (!by_id.count(initial))
      throw ModelError("chain: initial state '" + initial + "' not found");

    std::unordered_map<std::string, std::size_t> complements;
    for (const auto& t : transitions) {
      auto from = by_id.find(t.from);
      if (from == by_id.end())
        throw ModelError("chain: transition from unknown state " + t.from);
      if (!by_id.count(t.to))
        throw ModelError("chain: transition to unknown state " + t.to);
      if (from->second->kind != StateKind::Transient)
        throw ModelError("chain: absorbing state " + t.from +
                         " must not have outgoing transitions");
      switch (t.kind) {
        case Transition::Kind::Numeric:
          if (!(t.p >= 0 && t.p <= 1) || !std::isfinite(t.p))
            throw ModelError("chain: transition probability outside [0,1] from " +
                             t.from);
          break;
        case Transition::Kind::TreeRef:
          if (!fault_trees.count(t.tree))
            throw ModelError("chain: transition references unknown fault tree '" +
                             t.tree + "'");
          break;
        case Transition::Kind::Complement:
          if (++complements[t.from] > 1)
            throw ModelError("chain: state " + t.from +
                             " has more than one complement transition");
          break;
      }
    }
    for (const auto& [id, tree] : fault_trees) tree.validate();
  }
};

}  // namespace riskpipe
