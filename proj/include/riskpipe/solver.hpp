#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "riskpipe/error.hpp"
#include "riskpipe/risk_model.hpp"
#include "riskpipe/rng.hpp"

namespace riskpipe {

inline constexpr double kRowSumTolerance = 1e-9;
inline constexpr double kPivotTolerance = 1e-12;
inline constexpr std::size_t kMaxSharedEvents = 20;

namespace detail {

struct TreeIndex {
  std::vector<const Gate*> topo;  // parents before children, reachable gates only
  std::unordered_map<std::string, const Gate*> gates;
  std::unordered_map<std::string, const BasicEvent*> events;
  // events reachable from top via >= 2 distinct paths, ordered by
  // descending path count, then id
  std::vector<const BasicEvent*> shared;
};

inline TreeIndex index_tree(const FaultTree& tree) {
  TreeIndex ix;
  for (const Gate& g : tree.gates) ix.gates.emplace(g.id, &g);
  for (const BasicEvent& e : tree.events) ix.events.emplace(e.id, &e);

  // reverse-postorder DFS for a topological order of reachable gates
  std::unordered_map<std::string, int> mark;
  std::vector<std::pair<const Gate*, std::size_t>> stack;
  std::vector<const Gate*> postorder;
  auto open = [&](const std::string& id) {
    auto g = ix.gates.find(id);
    if (g == ix.gates.end()) return;
    int& m = mark[id];
    if (m) return;
    m = 1;
    stack.emplace_back(g->second, 0);
  };
  open(tree.top);
  while (!stack.empty()) {
    auto& [g, next] = stack.back();
    if (next == g->children.size()) {
      postorder.push_back(g);
      stack.pop_back();
      continue;
    }
    open(g->children[next++]);
  }
  ix.topo.assign(postorder.rbegin(), postorder.rend());

  // path counts from top (saturating; only the >= 2 test matters)
  std::unordered_map<std::string, std::uint64_t> paths;
  constexpr std::uint64_t kCap = 1ULL << 62;
  paths[tree.top] = 1;
  for (const Gate* g : ix.topo) {
    const std::uint64_t mine = paths[g->id];
    for (const std::string& c : g->children) {
      std::uint64_t& pc = paths[c];
      pc = std::min(kCap, pc + std::min(kCap, mine));
    }
  }
  std::vector<std::pair<std::uint64_t, const BasicEvent*>> shared;
  for (const auto& [id, e] : ix.events) {
    auto it = paths.find(id);
    if (it != paths.end() && it->second >= 2) shared.emplace_back(it->second, e);
  }
  std::sort(shared.begin(), shared.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second->id < b.second->id;
  });
  for (const auto& [count, e] : shared) ix.shared.push_back(e);
  return ix;
}

// Evaluates the tree bottom-up treating events as independent; events bound
// by `assignment` contribute constants. Exact when every unbound event is
// reachable by a single path.
inline double eval_independent(
    const FaultTree& tree, const TreeIndex& ix,
    const std::unordered_map<std::string, int>& assignment) {
  std::unordered_map<std::string, double> value;
  value.reserve(ix.events.size() + ix.topo.size());
  for (const auto& [id, e] : ix.events) {
    auto it = assignment.find(id);
    value[id] = it == assignment.end() ? e->probability
                                       : static_cast<double>(it->second);
  }
  for (auto g = ix.topo.rbegin(); g != ix.topo.rend(); ++g) {
    const Gate& gate = **g;
    double v = 0;
    switch (gate.kind) {
      case GateKind::And: {
        v = 1;
        for (const auto& c : gate.children) v *= value.at(c);
        break;
      }
      case GateKind::Or: {
        double none = 1;
        for (const auto& c : gate.children) none *= 1.0 - value.at(c);
        v = 1.0 - none;
        break;
      }
      case GateKind::KofN: {
        // distribution of the failed-children count
        std::vector<double> dp(gate.children.size() + 1, 0.0);
        dp[0] = 1;
        std::size_t used = 0;
        for (const auto& c : gate.children) {
          const double p = value.at(c);
          ++used;
          for (std::size_t j = used; j-- > 0;) {
            dp[j + 1] += dp[j] * p;
            dp[j] *= 1.0 - p;
          }
        }
        for (std::size_t j = static_cast<std::size_t>(gate.k); j < dp.size(); ++j)
          v += dp[j];
        break;
      }
    }
    value[gate.id] = v;
  }
  return value.at(tree.top);
}

inline double shannon(const FaultTree& tree, const TreeIndex& ix,
                      std::unordered_map<std::string, int>& assignment,
                      std::size_t idx) {
  if (idx == ix.shared.size()) return eval_independent(tree, ix, assignment);
  const BasicEvent* e = ix.shared[idx];
  assignment[e->id] = 1;
  const double failed = shannon(tree, ix, assignment, idx + 1);
  assignment[e->id] = 0;
  const double ok = shannon(tree, ix, assignment, idx + 1);
  assignment.erase(e->id);
  return e->probability * failed + (1.0 - e->probability) * ok;
}

}  // namespace detail

// Exact top-event probability. Trees without multiply-referenced events are
// evaluated bottom-up; otherwise the shared events are conditioned away by
// Shannon decomposition until the residue is tree-shaped.
inline double solve_fault_tree(const FaultTree& tree) {
  tree.validate();
  detail::TreeIndex ix = detail::index_tree(tree);
  if (ix.shared.size() > kMaxSharedEvents)
    throw NumericError("fault tree: more than " + std::to_string(kMaxSharedEvents) +
                       " shared events (" + std::to_string(ix.shared.size()) + ")");
  std::unordered_map<std::string, int> assignment;
  return detail::shannon(tree, ix, assignment, 0);
}

// Phase 1 of the hybrid solve: every tree_ref transition becomes the solved
// top-event probability and each complement transition receives whatever
// its source row still needs to sum to 1. Solved tree probabilities are
// reported through `tree_probs` when given.
inline HybridRiskModel resolve_transitions(
    const HybridRiskModel& model,
    std::map<std::string, double>* tree_probs = nullptr) {
  model.validate();
  HybridRiskModel out = model;
  std::map<std::string, double> solved;
  for (Transition& t : out.transitions) {
    if (t.kind != Transition::Kind::TreeRef) continue;
    auto it = solved.find(t.tree);
    if (it == solved.end())
      it = solved.emplace(t.tree, solve_fault_tree(out.fault_trees.at(t.tree))).first;
    t.p = it->second;
    t.kind = Transition::Kind::Numeric;
  }
  for (std::size_t i = 0; i < out.transitions.size(); ++i) {
    Transition& t = out.transitions[i];
    if (t.kind != Transition::Kind::Complement) continue;
    double rest = 0;
    for (const Transition& o : out.transitions) {
      if (&o != &t && o.from == t.from) rest += o.p;
    }
    if (rest > 1.0 + kRowSumTolerance)
      throw ModelError("chain: outgoing probabilities from " + t.from +
                       " exceed 1, no room for the complement transition");
    t.p = std::clamp(1.0 - rest, 0.0, 1.0);
    t.kind = Transition::Kind::Numeric;
  }
  if (tree_probs) *tree_probs = std::move(solved);
  return out;
}

struct DtmcSolution {
  // one entry per absorbing state, in model state order
  std::vector<std::pair<std::string, double>> absorption;
  double expected_steps = 0;
};

// Standard absorbing-chain solve: factor (I - Q) by partially pivoted
// Gaussian elimination and read absorption probabilities and expected steps
// for the initial state.
inline DtmcSolution solve_dtmc(const HybridRiskModel& model) {
  model.validate();
  for (const Transition& t : model.transitions) {
    if (t.kind != Transition::Kind::Numeric)
      throw ModelError("chain: transition from " + t.from +
                       " is unresolved; resolve tree/complement transitions first");
  }

  std::unordered_map<std::string, std::size_t> t_index, a_index;
  std::vector<const ChainState*> transient, absorbing;
  for (const ChainState& s : model.states) {
    if (s.kind == StateKind::Transient) {
      t_index.emplace(s.id, transient.size());
      transient.push_back(&s);
    } else {
      a_index.emplace(s.id, absorbing.size());
      absorbing.push_back(&s);
    }
  }
  if (absorbing.empty()) throw ModelError("chain: no absorbing states");

  const std::size_t n = transient.size();
  const std::size_t a = absorbing.size();

  // row sums over outgoing transitions must hit 1
  std::vector<double> row_sum(n, 0.0);
  for (const Transition& t : model.transitions) row_sum[t_index.at(t.from)] += t.p;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(row_sum[i] - 1.0) > kRowSumTolerance)
      throw ModelError("chain: outgoing probabilities of " + transient[i]->id +
                       " sum to " + std::to_string(row_sum[i]) + ", expected 1");
  }

  // every transient state must reach an absorbing state via p > 0 edges
  {
    std::vector<std::vector<std::size_t>> rev(n);  // absorbing-adjacent handled below
    std::vector<char> reaches(n, 0);
    std::deque<std::size_t> queue;
    for (const Transition& t : model.transitions) {
      if (t.p <= 0) continue;
      const std::size_t from = t_index.at(t.from);
      if (a_index.count(t.to)) {
        if (!reaches[from]) {
          reaches[from] = 1;
          queue.push_back(from);
        }
      } else {
        rev[t_index.at(t.to)].push_back(from);
      }
    }
    while (!queue.empty()) {
      const std::size_t s = queue.front();
      queue.pop_front();
      for (std::size_t p : rev[s]) {
        if (!reaches[p]) {
          reaches[p] = 1;
          queue.push_back(p);
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!reaches[i])
        throw ModelError("chain: no absorbing state reachable from " +
                         transient[i]->id);
    }
  }

  DtmcSolution sol;
  const ChainState* init = model.find_state(model.initial);
  if (init->kind != StateKind::Transient) {
    for (const ChainState* s : absorbing)
      sol.absorption.emplace_back(s->id, s->id == init->id ? 1.0 : 0.0);
    sol.expected_steps = 0;
    return sol;
  }

  // augmented system (I - Q) X = [R | 1]
  const std::size_t cols = a + 1;
  std::vector<std::vector<double>> m(n, std::vector<double>(n + cols, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    m[i][i] = 1.0;
    m[i][n + a] = 1.0;  // ones column for expected steps
  }
  for (const Transition& t : model.transitions) {
    const std::size_t from = t_index.at(t.from);
    if (a_index.count(t.to)) {
      m[from][n + a_index.at(t.to)] += t.p;
    } else {
      m[from][t_index.at(t.to)] -= t.p;
    }
  }

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    }
    if (std::abs(m[pivot][col]) < kPivotTolerance)
      throw NumericError("chain: singular (I - Q) system, pivot below tolerance");
    if (pivot != col) std::swap(m[pivot], m[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = m[r][col] / m[col][col];
      if (f == 0) continue;
      for (std::size_t c = col; c < n + cols; ++c) m[r][c] -= f * m[col][c];
    }
  }
  // back substitution, one pass per right-hand-side column
  std::vector<std::vector<double>> x(n, std::vector<double>(cols, 0.0));
  for (std::size_t rhs = 0; rhs < cols; ++rhs) {
    for (std::size_t i = n; i-- > 0;) {
      double s = m[i][n + rhs];
      for (std::size_t c = i + 1; c < n; ++c) s -= m[i][c] * x[c][rhs];
      x[i][rhs] = s / m[i][i];
    }
  }

  const std::size_t init_row = t_index.at(init->id);
  for (std::size_t k = 0; k < a; ++k)
    sol.absorption.emplace_back(absorbing[k]->id, x[init_row][k]);
  sol.expected_steps = x[init_row][a];
  return sol;
}

// Seeded random walks over a resolved chain; returns empirical absorption
// frequencies per absorbing state.
inline std::vector<std::pair<std::string, double>> simulate_chain(
    const HybridRiskModel& model, std::size_t n_runs, std::uint64_t seed) {
  model.validate();
  if (n_runs == 0) throw ValidationError("n_runs: must be >= 1");

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < model.states.size(); ++i)
    index.emplace(model.states[i].id, i);
  struct Edge {
    std::size_t to;
    double cum;
  };
  std::vector<std::vector<Edge>> edges(model.states.size());
  for (const Transition& t : model.transitions) {
    if (t.kind != Transition::Kind::Numeric)
      throw ModelError("chain: simulate_chain needs resolved numeric transitions");
    edges[index.at(t.from)].push_back({index.at(t.to), t.p});
  }
  for (auto& out : edges) {
    double cum = 0;
    for (Edge& e : out) {
      cum += e.cum;
      e.cum = cum;
    }
  }

  std::vector<std::size_t> hits(model.states.size(), 0);
  Rng rng(seed);
  constexpr std::size_t kStepCap = 10'000'000;
  for (std::size_t run = 0; run < n_runs; ++run) {
    std::size_t state = index.at(model.initial);
    std::size_t steps = 0;
    while (model.states[state].kind == StateKind::Transient) {
      if (++steps > kStepCap)
        throw NumericError("chain: simulation exceeded the step cap");
      const double u = rng.uniform();
      const auto& out = edges[state];
      if (out.empty())
        throw ModelError("chain: transient state " + model.states[state].id +
                         " has no outgoing transitions");
      std::size_t next = out.back().to;
      for (const Edge& e : out) {
        if (u <= e.cum) {
          next = e.to;
          break;
        }
      }
      state = next;
    }
    ++hits[state];
  }

  std::vector<std::pair<std::string, double>> freq;
  for (std::size_t i = 0; i < model.states.size(); ++i) {
    if (model.states[i].kind == StateKind::Transient) continue;
    freq.emplace_back(model.states[i].id,
                      static_cast<double>(hits[i]) / static_cast<double>(n_runs));
  }
  return freq;
}

struct SkillRisk {
  std::string tree_id;
  SkillLabel skill = SkillLabel::Idle;
  std::optional<std::pair<double, double>> window;
  std::string fail_state;
  double failure_probability = 0;
};

struct RiskReport {
  std::vector<SkillRisk> skills;  // chain order
  double success_probability = 0;
  std::vector<std::pair<std::string, double>> fail_absorption;
  double expected_steps = 0;
  std::size_t n_states = 0;
  std::size_t n_transitions = 0;
};

// Two-phase quantification: solve the fault trees, inject the results into
// the chain, then solve the chain.
inline RiskReport solve_hybrid(const HybridRiskModel& model) {
  std::map<std::string, double> tree_probs;
  const HybridRiskModel resolved = resolve_transitions(model, &tree_probs);
  const DtmcSolution sol = solve_dtmc(resolved);

  RiskReport report;
  report.n_states = model.states.size();
  report.n_transitions = model.transitions.size();

  for (const Transition& t : model.transitions) {
    if (t.kind != Transition::Kind::TreeRef) continue;
    SkillRisk row;
    row.tree_id = t.tree;
    const ChainState* from = model.find_state(t.from);
    row.skill = from->skill ? *from->skill : model.fault_trees.at(t.tree).skill;
    row.window = from->window;
    row.fail_state = t.to;
    row.failure_probability = tree_probs.at(t.tree);
    report.skills.push_back(std::move(row));
  }

  double total = 0;
  for (const auto& [id, p] : sol.absorption) {
    total += p;
    const ChainState* s = model.find_state(id);
    if (s->kind == StateKind::AbsorbingDone) {
      report.success_probability = p;
    } else {
      report.fail_absorption.emplace_back(id, p);
    }
  }
  if (std::abs(total - 1.0) > kRowSumTolerance)
    throw NumericError("report: absorption probabilities sum to " +
                       std::to_string(total) + ", expected 1");
  report.expected_steps = sol.expected_steps;
  return report;
}

// --- Report output ------------------------------------------------------

namespace detail {

inline std::string format_probability(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace detail

inline std::string serialize_report(const RiskReport& report) {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["success_probability"] = report.success_probability;
  j["expected_steps"] = report.expected_steps;
  j["model"] = {{"states", report.n_states}, {"transitions", report.n_transitions}};
  nlohmann::ordered_json skills = nlohmann::ordered_json::array();
  for (const SkillRisk& r : report.skills) {
    nlohmann::ordered_json js;
    js["tree"] = r.tree_id;
    js["skill"] = to_string(r.skill);
    if (r.window) {
      js["window"] = {r.window->first, r.window->second};
    } else {
      js["window"] = nullptr;
    }
    js["fail_state"] = r.fail_state;
    js["failure_probability"] = r.failure_probability;
    skills.push_back(std::move(js));
  }
  j["skills"] = std::move(skills);
  nlohmann::ordered_json fails;
  for (const auto& [id, p] : report.fail_absorption) fails[id] = p;
  j["fail_absorption"] = std::move(fails);
  return j.dump(2) + "\n";
}

inline std::string report_to_text(const RiskReport& report) {
  std::vector<std::array<std::string, 4>> rows;
  rows.push_back({"skill", "window", "failure_probability", "cumulative_success"});
  double cumulative = 1.0;
  for (const SkillRisk& r : report.skills) {
    cumulative *= 1.0 - r.failure_probability;
    std::string window = "-";
    if (r.window) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "[%.3f, %.3f)", r.window->first,
                    r.window->second);
      window = buf;
    }
    rows.push_back({to_string(r.skill), window,
                    detail::format_probability(r.failure_probability),
                    detail::format_probability(cumulative)});
  }
  std::array<std::size_t, 4> width{};
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < 4; ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < 4; ++c) {
      out += row[c];
      if (c + 1 < 4) out += std::string(width[c] - row[c].size() + 2, ' ');
    }
    out += '\n';
  }
  out += '\n';
  out += "mission success probability:  " +
         detail::format_probability(report.success_probability) + "\n";
  out += "expected steps to absorption: " +
         detail::format_probability(report.expected_steps) + "\n";
  out += "states: " + std::to_string(report.n_states) +
         "  transitions: " + std::to_string(report.n_transitions) + "\n";
  return out;
}

}  // namespace riskpipe
