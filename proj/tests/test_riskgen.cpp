#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "riskpipe/exchange_io.hpp"
#include "riskpipe/riskgen.hpp"
#include "riskpipe/rng.hpp"
#include "riskpipe/solver.hpp"

using namespace riskpipe;

namespace {

ComponentUsage usage(const std::string& id, double mean_v, double active_s) {
  ComponentUsage u;
  u.component_id = id;
  u.mean_velocity = mean_v;
  u.peak_velocity = mean_v;
  u.active_time = active_s;
  return u;
}

RiskEntry entry(double lambda, double c_v = 0, double v_ref = 1.0) {
  RiskEntry e;
  e.lambda_per_hour = lambda;
  e.c_v = c_v;
  e.v_ref = v_ref;
  return e;
}

// lambda that makes the failure probability of a 1-hour usage exactly p
double lambda_for(double p) { return -std::log1p(-p); }

BehavioralProfile canonical_profile() {
  BehavioralProfile p;
  const SkillLabel skills[6] = {SkillLabel::Idle, SkillLabel::Move, SkillLabel::Pick,
                                SkillLabel::Carry, SkillLabel::Place, SkillLabel::Idle};
  double t = 0;
  for (SkillLabel s : skills) {
    SkillSegment seg;
    seg.skill = s;
    seg.t_start = t;
    t += 1.0;
    seg.t_end = t;
    p.segments.push_back(seg);
    if (s == SkillLabel::Idle) {
      p.usages.push_back({});
    } else {
      p.usages.push_back({usage("joint0", 0.5, 0.8), usage("controller", 0, 1.0)});
    }
  }
  p.duration = t;
  return p;
}

RiskData canonical_risk() {
  RiskData risk;
  risk.components["joint0"] = entry(1e-4, 0.5);
  risk.components["controller"] = entry(2e-5);
  return risk;
}

}  // namespace

TEST_CASE("event probability edge cases") {
  CHECK(event_probability(usage("c", 1.0, 100), entry(0)) == 0.0);
  CHECK(event_probability(usage("c", 1.0, 0), entry(1e-3)) == 0.0);

  // 36 s at lambda 1e-3/h: p = 1 - exp(-1e-5)
  const double p = event_probability(usage("c", 0.0, 36.0), entry(1e-3));
  CHECK(p == Catch::Approx(9.99995000016667e-06).epsilon(1e-12));
  CHECK(p >= 0.0);
  CHECK(p < 1.0);
}

TEST_CASE("event probability is monotone in rate, time and velocity") {
  Rng rng(55);
  for (int i = 0; i < 200; ++i) {
    const double lam = rng.uniform(0, 1e-2);
    const double cv = rng.uniform(0, 2);
    const double v = rng.uniform(0, 3);
    const double at = rng.uniform(0, 3600);
    const double base = event_probability(usage("c", v, at), entry(lam, cv));
    CHECK(event_probability(usage("c", v, at), entry(lam * 1.5, cv)) >= base);
    CHECK(event_probability(usage("c", v, at * 1.5), entry(lam, cv)) >= base);
    CHECK(event_probability(usage("c", v * 1.5, at), entry(lam, cv)) >= base);
  }
}

TEST_CASE("single active component gives OR over one event") {
  SkillSegment seg{SkillLabel::Move, 0, 1};
  RiskData risk;
  risk.components["motor"] = entry(lambda_for(0.1));
  const auto tree = build_fault_tree(seg, {usage("motor", 0, 3600)}, risk);
  REQUIRE(tree.has_value());
  CHECK(tree->skill == SkillLabel::Move);
  REQUIRE(tree->gates.size() == 1);
  CHECK(tree->gates[0].kind == GateKind::Or);
  REQUIRE(tree->events.size() == 1);
  CHECK(solve_fault_tree(*tree) == Catch::Approx(0.1).margin(1e-12));
}

TEST_CASE("redundancy group becomes an AND gate under the OR top") {
  SkillSegment seg{SkillLabel::Pick, 0, 1};
  RiskData risk;
  risk.components["gripper_a"] = entry(lambda_for(0.1));
  risk.components["gripper_a"].redundancy_group = "grip";
  risk.components["gripper_b"] = entry(lambda_for(0.1));
  risk.components["gripper_b"].redundancy_group = "grip";
  risk.components["controller"] = entry(lambda_for(0.01));
  const auto tree = build_fault_tree(
      seg,
      {usage("gripper_a", 0, 3600), usage("gripper_b", 0, 3600),
       usage("controller", 0, 3600)},
      risk);
  REQUIRE(tree.has_value());

  const Gate* top = tree->find_gate(tree->top);
  REQUIRE(top != nullptr);
  CHECK(top->kind == GateKind::Or);
  REQUIRE(top->children.size() == 2);
  const Gate* andg = tree->find_gate("red_grip");
  REQUIRE(andg != nullptr);
  CHECK(andg->kind == GateKind::And);
  CHECK(andg->children.size() == 2);

  // P(top) = 1 - (1 - 0.1*0.1) * (1 - 0.01)
  const double expected = 1.0 - (1.0 - 0.01) * (1.0 - 0.01);
  CHECK(solve_fault_tree(*tree) == Catch::Approx(expected).margin(1e-12));
}

TEST_CASE("group_size replicates a single component under an AND gate") {
  SkillSegment seg{SkillLabel::Carry, 0, 1};
  RiskData risk;
  risk.components["gripper"] = entry(lambda_for(0.2));
  risk.components["gripper"].group_size = 3;
  const auto tree = build_fault_tree(seg, {usage("gripper", 0, 3600)}, risk);
  REQUIRE(tree.has_value());
  REQUIRE(tree->events.size() == 3);
  CHECK(solve_fault_tree(*tree) == Catch::Approx(0.2 * 0.2 * 0.2).margin(1e-12));
}

TEST_CASE("two independent events compose via the OR top") {
  SkillSegment seg{SkillLabel::Move, 0, 1};
  RiskData risk;
  risk.components["a"] = entry(lambda_for(0.1));
  risk.components["b"] = entry(lambda_for(0.2));
  const auto tree =
      build_fault_tree(seg, {usage("a", 0, 3600), usage("b", 0, 3600)}, risk);
  CHECK(solve_fault_tree(*tree) == Catch::Approx(0.28).margin(1e-12));
}

TEST_CASE("idle segments produce no tree") {
  SkillSegment seg{SkillLabel::Idle, 0, 1};
  CHECK_FALSE(build_fault_tree(seg, {}, RiskData{}).has_value());
}

TEST_CASE("missing risk entry names the component and the skill") {
  SkillSegment seg{SkillLabel::Place, 0, 1};
  RiskData risk;
  try {
    build_fault_tree(seg, {usage("mystery", 0, 10)}, risk);
    FAIL("expected ModelError");
  } catch (const ModelError& e) {
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("mystery"));
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("place"));
  }
}

TEST_CASE("canonical profile yields a 9-state chain with 8 transitions") {
  const HybridRiskModel model = transform_profile(canonical_profile(), canonical_risk());
  CHECK(model.states.size() == 9);
  CHECK(model.transitions.size() == 8);
  CHECK(model.fault_trees.size() == 4);

  std::size_t transient = 0, fail = 0, done = 0;
  for (const auto& s : model.states) {
    if (s.kind == StateKind::Transient) ++transient;
    if (s.kind == StateKind::AbsorbingFail) ++fail;
    if (s.kind == StateKind::AbsorbingDone) ++done;
  }
  CHECK(transient == 4);
  CHECK(fail == 4);
  CHECK(done == 1);
  CHECK(model.find_state(model.initial)->skill == SkillLabel::Move);
}

TEST_CASE("all-idle profile collapses to the done state") {
  BehavioralProfile p;
  p.segments.push_back({SkillLabel::Idle, 0, 2});
  p.usages.push_back({});
  p.duration = 2;
  const HybridRiskModel model = transform_profile(p, RiskData{});
  REQUIRE(model.states.size() == 1);
  CHECK(model.states[0].kind == StateKind::AbsorbingDone);
  CHECK(model.initial == model.states[0].id);
  const RiskReport report = solve_hybrid(model);
  CHECK(report.success_probability == 1.0);
}

TEST_CASE("single-skill profile: success is the tree complement") {
  BehavioralProfile p;
  p.segments.push_back({SkillLabel::Move, 0, 3600});
  p.usages.push_back({usage("a", 0, 3600)});
  p.duration = 3600;
  RiskData risk;
  risk.components["a"] = entry(lambda_for(0.25));
  const HybridRiskModel model = transform_profile(p, risk);
  const RiskReport report = solve_hybrid(model);
  CHECK(report.success_probability == Catch::Approx(0.75).margin(1e-12));
  REQUIRE(report.skills.size() == 1);
  CHECK(report.skills[0].failure_probability == Catch::Approx(0.25).margin(1e-12));
}

TEST_CASE("segment without a matching tree is rejected") {
  const BehavioralProfile p = canonical_profile();
  CHECK_THROWS_AS(build_chain(p, {}), ModelError);
}

TEST_CASE("exchange document round-trips the canonical model") {
  const HybridRiskModel model = transform_profile(canonical_profile(), canonical_risk());
  const HybridRiskModel back = parse_model(serialize_model(model));
  CHECK(back == model);
}

TEST_CASE("hand-written minimal document parses to a 3-state model") {
  const char* doc = R"({
    "schema": "openpra-like/1",
    "initial": "work",
    "states": [
      {"id": "work", "kind": "transient", "skill": "move"},
      {"id": "broken", "kind": "fail"},
      {"id": "done", "kind": "done"}
    ],
    "transitions": [
      {"from": "work", "to": "broken", "tree": "t0"},
      {"from": "work", "to": "done"}
    ],
    "fault_trees": {
      "t0": {
        "skill": "move",
        "top": "g",
        "gates": [{"id": "g", "kind": "or", "children": ["e1"]}],
        "events": [{"id": "e1", "p": 0.125, "component": "motor"}]
      }
    }
  })";
  const HybridRiskModel model = parse_model(doc);
  REQUIRE(model.states.size() == 3);
  CHECK(model.initial == "work");
  CHECK(model.fault_trees.count("t0") == 1);
  const RiskReport report = solve_hybrid(model);
  CHECK(report.success_probability == Catch::Approx(0.875).margin(1e-12));
  CHECK(parse_model(serialize_model(model)) == model);
}

TEST_CASE("exchange parsing rejects broken documents") {
  const HybridRiskModel model = transform_profile(canonical_profile(), canonical_risk());
  std::string good = serialize_model(model);

  SECTION("unknown schema version") {
    std::string bad = good;
    bad.replace(bad.find("openpra-like/1"), 14, "openpra-like/9");
    CHECK_THROWS_AS(parse_model(bad), FormatError);
  }
  SECTION("dangling state reference") {
    nlohmann::json j = nlohmann::json::parse(good);
    j["transitions"][0]["to"] = "nowhere";
    CHECK_THROWS_AS(parse_model(j.dump()), ModelError);
  }
  SECTION("dangling tree reference") {
    nlohmann::json j = nlohmann::json::parse(good);
    j["transitions"][0]["tree"] = "ghost_tree";
    CHECK_THROWS_AS(parse_model(j.dump()), ModelError);
  }
  SECTION("probability outside [0,1]") {
    nlohmann::json j = nlohmann::json::parse(good);
    j["transitions"][0].erase("tree");
    j["transitions"][0]["p"] = 1.5;
    CHECK_THROWS_AS(parse_model(j.dump()), ModelError);
  }
  SECTION("unknown fields rejected") {
    nlohmann::json j = nlohmann::json::parse(good);
    j["surprise"] = 1;
    CHECK_THROWS_AS(parse_model(j.dump()), FormatError);
    j = nlohmann::json::parse(good);
    j["states"][0]["color"] = "red";
    CHECK_THROWS_AS(parse_model(j.dump()), FormatError);
  }
  SECTION("two done states rejected") {
    nlohmann::json j = nlohmann::json::parse(good);
    j["states"].push_back({{"id", "done2"}, {"kind", "done"}});
    CHECK_THROWS_AS(parse_model(j.dump()), ModelError);
  }
  SECTION("outgoing transition from an absorbing state") {
    nlohmann::json j = nlohmann::json::parse(good);
    j["transitions"].push_back({{"from", "done"}, {"to", "done"}, {"p", 1.0}});
    CHECK_THROWS_AS(parse_model(j.dump()), ModelError);
  }
  SECTION("not json at all") { CHECK_THROWS_AS(parse_model("{{{"), ParseError); }
}

TEST_CASE("redundancy never hurts: AND of a duplicated event") {
  Rng rng(99);
  for (int i = 0; i < 100; ++i) {
    const double p = rng.uniform(0, 1);
    const double q = rng.uniform(0, 1);

    FaultTree plain;
    plain.skill = SkillLabel::Move;
    plain.top = "top";
    plain.gates.push_back({"top", GateKind::Or, 0, {"a", "b"}});
    plain.events.push_back({"a", p, "a", std::nullopt});
    plain.events.push_back({"b", q, "b", std::nullopt});

    FaultTree redundant = plain;
    redundant.gates[0].children = {"red", "b"};
    redundant.gates.push_back({"red", GateKind::And, 0, {"a", "a2"}});
    redundant.events.push_back({"a2", p, "a2", std::nullopt});

    CHECK(solve_fault_tree(redundant) <= solve_fault_tree(plain) + 1e-12);
  }
}

TEST_CASE("risk data file round-trip and validation") {
  RiskData risk;
  risk.components["m"] = entry(1e-3, 0.5, 2.0);
  risk.components["g"] = entry(2e-4);
  risk.components["g"].redundancy_group = "grip";
  risk.components["g"].group_size = 2;
  CHECK(parse_risk_data(serialize_risk_data(risk)) == risk);

  CHECK_THROWS_AS(parse_risk_data("[]"), FormatError);
  CHECK_THROWS_AS(parse_risk_data("{\"components\":{\"x\":{}}}"), FormatError);
  CHECK_THROWS_AS(
      parse_risk_data(
          "{\"components\":{\"x\":{\"lambda_per_hour\":-1}}}"),
      FormatError);
  CHECK_THROWS_AS(
      parse_risk_data(
          "{\"components\":{\"x\":{\"lambda_per_hour\":1e-3,\"group_size\":1}}}"),
      FormatError);
}
