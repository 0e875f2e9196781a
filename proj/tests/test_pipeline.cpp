#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <map>
#include <string>

#include "riskpipe/pipeline.hpp"

using namespace riskpipe;
namespace fs = std::filesystem;

namespace {

// Small but non-trivial configuration so the suite stays fast.
nlohmann::json small_config_json(const fs::path& risk_path) {
  return nlohmann::json::parse(R"({
    "seed": 42,
    "scenario": {
      "n_joints": 2,
      "v_max": 1.0,
      "durations": {"move": 1.2, "pick": 0.6, "carry": 1.2, "place": 0.6,
                    "idle_lead": 0.3, "idle_tail": 0.3},
      "dt": 0.01,
      "seed": 7
    },
    "detector": {
      "window": 20, "stride": 5, "h1": 16, "h2": 8,
      "epochs": 15, "batch": 32, "learning_rate": 0.02,
      "train_episodes": 30, "eval_episodes": 8, "smoothing": 5
    },
    "segmentation": {"min_duration": 0.25},
    "risk_data": ")" + risk_path.generic_string() + R"("
  })");
}

fs::path write_risk_data(const fs::path& dir, double lambda) {
  RiskData risk;
  for (const HardwareComponent& c : canonical_hardware(2)) {
    RiskEntry e;
    e.lambda_per_hour = lambda;
    e.c_v = 0.5;
    risk.components[c.id] = e;
  }
  const fs::path p = dir / "risk.json";
  write_text_file(p, serialize_risk_data(risk));
  return p;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::path("pipeline_work") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file())
      files[fs::relative(entry.path(), dir).generic_string()] =
          read_text_file(entry.path());
  }
  return files;
}

}  // namespace

TEST_CASE("config parsing applies defaults and rejects unknown keys") {
  const PipelineConfig cfg = parse_pipeline_config(nlohmann::json::object());
  CHECK(cfg.seed == 42);
  CHECK(cfg.detector.window == 25);
  CHECK(cfg.scenario.n_joints == 7);

  CHECK_THROWS_AS(parse_pipeline_config(nlohmann::json::parse("{\"typo\": 1}")),
                  FormatError);
  CHECK_THROWS_AS(
      parse_pipeline_config(nlohmann::json::parse("{\"scenario\":{\"vmax\":1}}")),
      FormatError);
  CHECK_THROWS_AS(
      parse_pipeline_config(nlohmann::json::parse("{\"detector\":{\"smoothing\":2}}")),
      ValidationError);
}

TEST_CASE("overrides reach nested fields and win over the file") {
  nlohmann::json doc = nlohmann::json::object();
  apply_override(doc, "scenario.v_max=1.75");
  apply_override(doc, "detector.window=30");
  apply_override(doc, "risk_data=somewhere.json");
  const PipelineConfig cfg = parse_pipeline_config(doc);
  CHECK(cfg.scenario.v_max == 1.75);
  CHECK(cfg.detector.window == 30);
  CHECK(cfg.risk_data_path == "somewhere.json");
  CHECK_THROWS_AS(apply_override(doc, "missing-equals"), ValidationError);
}

TEST_CASE("labeled series round-trips through JSON") {
  LabeledSeries s;
  s.window = 10;
  s.stride = 3;
  s.starts = {0, 3, 6};
  s.labels = {SkillLabel::Idle, SkillLabel::Move, SkillLabel::Place};
  s.probabilities = {{0.6, 0.1, 0.1, 0.1, 0.1},
                     {0.05, 0.8, 0.05, 0.05, 0.05},
                     {0.25, 0.25, 0.2, 0.15, 0.15}};
  const LabeledSeries back = parse_labeled_series(serialize_labeled_series(s));
  CHECK(back.window == s.window);
  CHECK(back.stride == s.stride);
  CHECK(back.starts == s.starts);
  CHECK(back.labels == s.labels);
  CHECK(back.probabilities == s.probabilities);

  CHECK_THROWS_AS(parse_labeled_series("{\"version\":3}"), FormatError);
}

TEST_CASE("full pipeline produces a consistent report") {
  const fs::path dir = fresh_dir("run");
  const fs::path risk = write_risk_data(dir, 1e-4);
  const PipelineConfig cfg = parse_pipeline_config(small_config_json(risk));

  const RiskReport report = cmd_run(cfg, dir / "out");

  REQUIRE(report.skills.size() == 4);
  CHECK(report.skills[0].skill == SkillLabel::Move);
  CHECK(report.skills[1].skill == SkillLabel::Pick);
  CHECK(report.skills[2].skill == SkillLabel::Carry);
  CHECK(report.skills[3].skill == SkillLabel::Place);
  CHECK(report.success_probability > 0.99);
  CHECK(report.success_probability < 1.0);
  CHECK(report.n_states == 9);

  for (const char* name :
       {"config.json", "episode.jsonl", "ground_truth.json", "model.json",
        "metrics.json", "labels.json", "profile.json", "model_exchange.json",
        "report.json", "report.txt"}) {
    INFO(name);
    CHECK(fs::exists(dir / "out" / name));
  }

  // the persisted exchange document re-solves to the same number
  const HybridRiskModel model =
      parse_model(read_text_file(dir / "out" / "model_exchange.json"));
  CHECK(solve_hybrid(model).success_probability ==
        Catch::Approx(report.success_probability).margin(1e-15));
}

TEST_CASE("stage-wise execution equals cmd_run byte for byte") {
  const fs::path dir = fresh_dir("stagewise");
  const fs::path risk = write_risk_data(dir, 2e-4);
  const PipelineConfig cfg = parse_pipeline_config(small_config_json(risk));

  cmd_run(cfg, dir / "a");

  cmd_simulate(cfg, dir / "b");
  cmd_train(cfg, dir / "b");
  cmd_detect(cfg, dir / "b");
  cmd_analyze(cfg, dir / "b");
  cmd_generate(cfg, dir / "b");
  cmd_solve(cfg, dir / "b");

  CHECK(read_tree(dir / "a") == read_tree(dir / "b"));
}

TEST_CASE("identical config and seed reproduce identical bytes") {
  const fs::path dir = fresh_dir("repro");
  const fs::path risk = write_risk_data(dir, 1e-4);
  const PipelineConfig cfg = parse_pipeline_config(small_config_json(risk));

  cmd_run(cfg, dir / "a");
  cmd_run(cfg, dir / "b");
  CHECK(read_tree(dir / "a") == read_tree(dir / "b"));
}

TEST_CASE("zero failure rates report success exactly 1") {
  const fs::path dir = fresh_dir("zero");
  const fs::path risk = write_risk_data(dir, 0.0);
  const PipelineConfig cfg = parse_pipeline_config(small_config_json(risk));
  const RiskReport report = cmd_run(cfg, dir / "out");
  CHECK(report.success_probability == 1.0);
  for (const SkillRisk& r : report.skills) CHECK(r.failure_probability == 0.0);
}

TEST_CASE("stage errors carry the stage prefix") {
  const fs::path dir = fresh_dir("errors");
  const fs::path risk = write_risk_data(dir, 1e-4);
  const PipelineConfig cfg = parse_pipeline_config(small_config_json(risk));

  try {
    cmd_detect(cfg, dir / "empty");  // no episode/model present
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("detect:"));
  }

  // missing risk entry surfaces as a generate-stage model error
  cmd_simulate(cfg, dir / "out");
  cmd_train(cfg, dir / "out");
  cmd_detect(cfg, dir / "out");
  cmd_analyze(cfg, dir / "out");
  RiskData empty;
  const fs::path empty_risk = dir / "empty_risk.json";
  write_text_file(empty_risk, serialize_risk_data(empty));
  try {
    cmd_generate(cfg, dir / "out", std::nullopt, empty_risk);
    FAIL("expected ModelError");
  } catch (const ModelError& e) {
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("generate:"));
  }
}
