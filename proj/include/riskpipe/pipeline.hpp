#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "riskpipe/behavior.hpp"
#include "riskpipe/detail/json_util.hpp"
#include "riskpipe/error.hpp"
#include "riskpipe/exchange_io.hpp"
#include "riskpipe/log_io.hpp"
#include "riskpipe/mlp.hpp"
#include "riskpipe/riskgen.hpp"
#include "riskpipe/skills.hpp"
#include "riskpipe/solver.hpp"
#include "riskpipe/trajectory.hpp"

namespace riskpipe {

struct DetectorConfig {
  std::size_t window = 25;
  std::size_t stride = 5;
  std::size_t h1 = 32;
  std::size_t h2 = 16;
  std::size_t epochs = 50;
  std::size_t batch = 32;
  double learning_rate = 0.01;
  std::size_t train_episodes = 200;
  std::size_t eval_episodes = 50;
  std::size_t smoothing = 5;  // odd majority-vote width, 1 = off
};

struct PipelineConfig {
  std::uint64_t seed = 42;
  ScenarioConfig scenario;
  DetectorConfig detector;
  double min_duration = 0.25;
  ActivityRules activity;
  std::string risk_data_path = "data/sample_risk_data.json";
  LogFormat log_format = LogFormat::Jsonl;

  MlpHyper hyper() const {
    MlpHyper h;
    h.h1 = detector.h1;
    h.h2 = detector.h2;
    h.epochs = detector.epochs;
    h.batch = detector.batch;
    h.learning_rate = detector.learning_rate;
    h.seed = splitmix64(seed ^ 0x7E417);
    return h;
  }

  void validate() const {
    scenario.validate();
    if (detector.window < 1 || detector.stride < 1)
      throw ValidationError("detector: window and stride must be >= 1");
    if (detector.smoothing % 2 == 0)
      throw ValidationError("detector: smoothing must be odd");
    if (min_duration < 0) throw ValidationError("segmentation: min_duration must be >= 0");
    if (risk_data_path.empty()) throw ValidationError("risk_data: path must be set");
  }
};

namespace detail {

inline std::size_t require_size(const nlohmann::json& obj, std::string_view key,
                                std::string_view where, std::size_t fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj[std::string(key)];
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw FormatError(std::string(where) + ": field '" + std::string(key) +
                      "' must be a non-negative integer");
  return v.get<std::size_t>();
}

inline double optional_double(const nlohmann::json& obj, std::string_view key,
                              std::string_view where, double fallback) {
  if (!obj.contains(key)) return fallback;
  return require_double(obj, key, where);
}

}  // namespace detail

inline PipelineConfig parse_pipeline_config(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("config: expected a JSON object");
  detail::reject_unknown_fields(j,
                                {"seed", "scenario", "detector", "segmentation",
                                 "activity", "risk_data", "log_format"},
                                "config");
  PipelineConfig cfg;
  cfg.seed = static_cast<std::uint64_t>(
      detail::require_size(j, "seed", "config", cfg.seed));

  if (j.contains("scenario")) {
    const auto& js = j["scenario"];
    detail::reject_unknown_fields(
        js, {"n_joints", "v_max", "durations", "noise_sigma", "dt", "seed"},
        "config.scenario");
    cfg.scenario.n_joints = static_cast<int>(detail::require_size(
        js, "n_joints", "config.scenario", static_cast<std::size_t>(cfg.scenario.n_joints)));
    cfg.scenario.v_max =
        detail::optional_double(js, "v_max", "config.scenario", cfg.scenario.v_max);
    cfg.scenario.dt = detail::optional_double(js, "dt", "config.scenario", cfg.scenario.dt);
    cfg.scenario.seed = static_cast<std::uint64_t>(detail::require_size(
        js, "seed", "config.scenario", static_cast<std::size_t>(cfg.scenario.seed)));
    if (js.contains("durations")) {
      const auto& jd = js["durations"];
      detail::reject_unknown_fields(
          jd, {"move", "pick", "carry", "place", "idle_lead", "idle_tail"},
          "config.scenario.durations");
      PhaseDurations& d = cfg.scenario.durations;
      d.move = detail::optional_double(jd, "move", "durations", d.move);
      d.pick = detail::optional_double(jd, "pick", "durations", d.pick);
      d.carry = detail::optional_double(jd, "carry", "durations", d.carry);
      d.place = detail::optional_double(jd, "place", "durations", d.place);
      d.idle_lead = detail::optional_double(jd, "idle_lead", "durations", d.idle_lead);
      d.idle_tail = detail::optional_double(jd, "idle_tail", "durations", d.idle_tail);
    }
    if (js.contains("noise_sigma")) {
      const auto& jn = js["noise_sigma"];
      detail::reject_unknown_fields(
          jn, {"position", "velocity", "effort", "aperture", "force"},
          "config.scenario.noise_sigma");
      NoiseSigma& s = cfg.scenario.noise_sigma;
      s.position = detail::optional_double(jn, "position", "noise_sigma", s.position);
      s.velocity = detail::optional_double(jn, "velocity", "noise_sigma", s.velocity);
      s.effort = detail::optional_double(jn, "effort", "noise_sigma", s.effort);
      s.aperture = detail::optional_double(jn, "aperture", "noise_sigma", s.aperture);
      s.force = detail::optional_double(jn, "force", "noise_sigma", s.force);
    }
  }

  if (j.contains("detector")) {
    const auto& jd = j["detector"];
    detail::reject_unknown_fields(jd,
                                  {"window", "stride", "h1", "h2", "epochs", "batch",
                                   "learning_rate", "train_episodes", "eval_episodes",
                                   "smoothing"},
                                  "config.detector");
    DetectorConfig& d = cfg.detector;
    d.window = detail::require_size(jd, "window", "config.detector", d.window);
    d.stride = detail::require_size(jd, "stride", "config.detector", d.stride);
    d.h1 = detail::require_size(jd, "h1", "config.detector", d.h1);
    d.h2 = detail::require_size(jd, "h2", "config.detector", d.h2);
    d.epochs = detail::require_size(jd, "epochs", "config.detector", d.epochs);
    d.batch = detail::require_size(jd, "batch", "config.detector", d.batch);
    d.learning_rate =
        detail::optional_double(jd, "learning_rate", "config.detector", d.learning_rate);
    d.train_episodes =
        detail::require_size(jd, "train_episodes", "config.detector", d.train_episodes);
    d.eval_episodes =
        detail::require_size(jd, "eval_episodes", "config.detector", d.eval_episodes);
    d.smoothing = detail::require_size(jd, "smoothing", "config.detector", d.smoothing);
  }

  if (j.contains("segmentation")) {
    const auto& js = j["segmentation"];
    detail::reject_unknown_fields(js, {"min_duration"}, "config.segmentation");
    cfg.min_duration =
        detail::optional_double(js, "min_duration", "config.segmentation", cfg.min_duration);
  }

  if (j.contains("activity")) {
    const auto& ja = j["activity"];
    detail::reject_unknown_fields(ja, {"v_eps", "f_eps", "camera_active_in"},
                                  "config.activity");
    cfg.activity.v_eps = detail::optional_double(ja, "v_eps", "config.activity",
                                                 cfg.activity.v_eps);
    cfg.activity.f_eps = detail::optional_double(ja, "f_eps", "config.activity",
                                                 cfg.activity.f_eps);
    if (ja.contains("camera_active_in")) {
      if (!ja["camera_active_in"].is_array())
        throw FormatError("config.activity: 'camera_active_in' must be an array");
      cfg.activity.camera_active_in.clear();
      for (const auto& v : ja["camera_active_in"]) {
        if (!v.is_string())
          throw FormatError("config.activity: camera skills must be strings");
        cfg.activity.camera_active_in.push_back(skill_from_string(v.get<std::string>()));
      }
    }
  }

  if (j.contains("risk_data")) {
    if (!j["risk_data"].is_string())
      throw FormatError("config: 'risk_data' must be a string path");
    cfg.risk_data_path = j["risk_data"].get<std::string>();
  }
  if (j.contains("log_format"))
    cfg.log_format = log_format_from_string(
        detail::require_string(j, "log_format", "config"));

  cfg.validate();
  return cfg;
}

inline nlohmann::ordered_json pipeline_config_to_json(const PipelineConfig& cfg) {
  nlohmann::ordered_json j;
  j["seed"] = cfg.seed;
  j["scenario"] = {
      {"n_joints", cfg.scenario.n_joints},
      {"v_max", cfg.scenario.v_max},
      {"durations",
       {{"move", cfg.scenario.durations.move},
        {"pick", cfg.scenario.durations.pick},
        {"carry", cfg.scenario.durations.carry},
        {"place", cfg.scenario.durations.place},
        {"idle_lead", cfg.scenario.durations.idle_lead},
        {"idle_tail", cfg.scenario.durations.idle_tail}}},
      {"noise_sigma",
       {{"position", cfg.scenario.noise_sigma.position},
        {"velocity", cfg.scenario.noise_sigma.velocity},
        {"effort", cfg.scenario.noise_sigma.effort},
        {"aperture", cfg.scenario.noise_sigma.aperture},
        {"force", cfg.scenario.noise_sigma.force}}},
      {"dt", cfg.scenario.dt},
      {"seed", cfg.scenario.seed}};
  j["detector"] = {{"window", cfg.detector.window},
                   {"stride", cfg.detector.stride},
                   {"h1", cfg.detector.h1},
                   {"h2", cfg.detector.h2},
                   {"epochs", cfg.detector.epochs},
                   {"batch", cfg.detector.batch},
                   {"learning_rate", cfg.detector.learning_rate},
                   {"train_episodes", cfg.detector.train_episodes},
                   {"eval_episodes", cfg.detector.eval_episodes},
                   {"smoothing", cfg.detector.smoothing}};
  j["segmentation"] = {{"min_duration", cfg.min_duration}};
  nlohmann::ordered_json cam = nlohmann::ordered_json::array();
  for (SkillLabel s : cfg.activity.camera_active_in) cam.push_back(to_string(s));
  j["activity"] = {{"v_eps", cfg.activity.v_eps},
                   {"f_eps", cfg.activity.f_eps},
                   {"camera_active_in", std::move(cam)}};
  j["risk_data"] = cfg.risk_data_path;
  j["log_format"] = cfg.log_format == LogFormat::Jsonl ? "jsonl" : "csv";
  return j;
}

// Applies one "dotted.key=value" override to the raw config document. The
// value is parsed as JSON when possible, else taken as a string.
inline void apply_override(nlohmann::json& doc, const std::string& spec) {
  const std::size_t eq = spec.find('=');
  if (eq == std::string::npos)
    throw ValidationError("--set: expected key=value, got '" + spec + "'");
  const std::string key = spec.substr(0, eq);
  const std::string raw = spec.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  nlohmann::json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos
                                                   ? std::string::npos
                                                   : dot - start);
    if (part.empty()) throw ValidationError("--set: empty path segment in '" + key + "'");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path,
                                           const std::vector<std::string>& overrides = {},
                                           std::optional<std::uint64_t> seed_override =
                                               std::nullopt) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("config " + path.string() + ": " + e.what());
  }
  for (const std::string& o : overrides) apply_override(doc, o);
  if (seed_override) doc["seed"] = *seed_override;
  return parse_pipeline_config(doc);
}

// --- Labeled-series artifact -------------------------------------------

inline std::string serialize_labeled_series(const LabeledSeries& series) {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["window"] = series.window;
  j["stride"] = series.stride;
  j["starts"] = series.starts;
  nlohmann::ordered_json labels = nlohmann::ordered_json::array();
  for (SkillLabel l : series.labels) labels.push_back(to_string(l));
  j["labels"] = std::move(labels);
  nlohmann::ordered_json probs = nlohmann::ordered_json::array();
  for (const auto& p : series.probabilities)
    probs.push_back(std::vector<double>(p.begin(), p.end()));
  j["probabilities"] = std::move(probs);
  return j.dump() + "\n";
}

inline LabeledSeries parse_labeled_series(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid labels JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("version") || j["version"] != 1)
    throw FormatError("labels: unknown or missing version");
  LabeledSeries s;
  s.window = static_cast<std::size_t>(detail::require_double(j, "window", "labels"));
  s.stride = static_cast<std::size_t>(detail::require_double(j, "stride", "labels"));
  const auto& starts = detail::require_field(j, "starts", "labels");
  const auto& labels = detail::require_field(j, "labels", "labels");
  const auto& probs = detail::require_field(j, "probabilities", "labels");
  if (!starts.is_array() || !labels.is_array() || !probs.is_array())
    throw FormatError("labels: starts/labels/probabilities must be arrays");
  if (starts.size() != labels.size() || labels.size() != probs.size())
    throw FormatError("labels: starts/labels/probabilities lengths differ");
  for (const auto& v : starts) s.starts.push_back(v.get<std::size_t>());
  for (const auto& v : labels) s.labels.push_back(skill_from_string(v.get<std::string>()));
  for (const auto& row : probs) {
    if (!row.is_array() || row.size() != kNumSkills)
      throw FormatError("labels: probability rows must have 5 entries");
    std::array<double, kNumSkills> p{};
    double sum = 0;
    for (std::size_t i = 0; i < kNumSkills; ++i) {
      p[i] = row[i].get<double>();
      if (p[i] < 0) throw FormatError("labels: negative probability");
      sum += p[i];
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw FormatError("labels: probability row does not sum to 1");
    s.probabilities.push_back(p);
  }
  return s;
}

// --- Stage commands ------------------------------------------------------

namespace detail {

template <class Fn>
auto with_stage(const char* stage, Fn&& fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(stage) + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(std::string(stage) + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(std::string(stage) + ": " + e.what());
  } catch (const ModelError& e) {
    throw ModelError(std::string(stage) + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(std::string(stage) + ": " + e.what());
  } catch (const Error& e) {
    throw Error(std::string(stage) + ": " + e.what());
  }
}

}  // namespace detail

namespace paths {

inline std::filesystem::path episode(const PipelineConfig& cfg,
                                     const std::filesystem::path& out) {
  return out / (cfg.log_format == LogFormat::Jsonl ? "episode.jsonl" : "episode.csv");
}
inline std::filesystem::path ground_truth(const std::filesystem::path& out) {
  return out / "ground_truth.json";
}
inline std::filesystem::path model(const std::filesystem::path& out) {
  return out / "model.json";
}
inline std::filesystem::path metrics(const std::filesystem::path& out) {
  return out / "metrics.json";
}
inline std::filesystem::path labels(const std::filesystem::path& out) {
  return out / "labels.json";
}
inline std::filesystem::path profile(const std::filesystem::path& out) {
  return out / "profile.json";
}
inline std::filesystem::path exchange(const std::filesystem::path& out) {
  return out / "model_exchange.json";
}
inline std::filesystem::path report_json(const std::filesystem::path& out) {
  return out / "report.json";
}
inline std::filesystem::path report_text(const std::filesystem::path& out) {
  return out / "report.txt";
}

}  // namespace paths

inline void write_resolved_config(const PipelineConfig& cfg,
                                  const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  write_text_file(out / "config.json", pipeline_config_to_json(cfg).dump(2) + "\n");
}

// Synthetic episode + ground-truth labels.
inline void cmd_simulate(const PipelineConfig& cfg, const std::filesystem::path& out) {
  detail::with_stage("simulate", [&] {
    cfg.validate();
    write_resolved_config(cfg, out);
    Episode ep = generate_episode(cfg.scenario);
    save_log(ep.log, paths::episode(cfg, out), cfg.log_format);
    write_text_file(paths::ground_truth(out),
                    serialize_ground_truth(ep.ground_truth, ep.log.dt));
  });
}

// Dataset generation, training and held-out evaluation; writes the
// checkpoint and the metrics summary.
inline void cmd_train(const PipelineConfig& cfg, const std::filesystem::path& out) {
  detail::with_stage("train", [&] {
    cfg.validate();
    write_resolved_config(cfg, out);

    const auto train_scenarios = sample_scenarios(
        cfg.scenario, cfg.detector.train_episodes, splitmix64(cfg.seed ^ 0xC0FFEE));
    Dataset dataset =
        build_dataset(train_scenarios, cfg.detector.window, cfg.detector.stride);
    MlpModel model = train(dataset, cfg.hyper());
    write_text_file(paths::model(out), serialize_model_checkpoint(model));

    const double train_acc =
        evaluate(predict(model, dataset.features).labels, dataset.labels).accuracy;

    const auto eval_scenarios = sample_scenarios(
        cfg.scenario, cfg.detector.eval_episodes, splitmix64(cfg.seed ^ 0x5EED));
    Dataset eval_set =
        build_dataset(eval_scenarios, cfg.detector.window, cfg.detector.stride);
    Evaluation ev =
        evaluate(predict(model, eval_set.features).labels, eval_set.labels);

    nlohmann::ordered_json j;
    j["version"] = 1;
    j["train_windows"] = dataset.size();
    j["eval_windows"] = eval_set.size();
    j["train_accuracy"] = train_acc;
    j["eval_accuracy"] = ev.accuracy;
    nlohmann::ordered_json confusion = nlohmann::ordered_json::array();
    for (const auto& row : ev.confusion)
      confusion.push_back(std::vector<std::size_t>(row.begin(), row.end()));
    j["eval_confusion"] = std::move(confusion);
    write_text_file(paths::metrics(out), j.dump(2) + "\n");
  });
}

// Window classification of a log with a trained checkpoint.
inline void cmd_detect(const PipelineConfig& cfg, const std::filesystem::path& out,
                       std::optional<std::filesystem::path> log_path = std::nullopt,
                       std::optional<std::filesystem::path> model_path = std::nullopt) {
  detail::with_stage("detect", [&] {
    cfg.validate();
    write_resolved_config(cfg, out);
    const TrajectoryLog log =
        load_log(log_path.value_or(paths::episode(cfg, out)), cfg.log_format);
    const MlpModel model =
        parse_model_checkpoint(read_text_file(model_path.value_or(paths::model(out))));
    const auto features = extract_features(log, model.window, model.stride);
    LabeledSeries series = predict(model, features);
    if (cfg.detector.smoothing > 1)
      series = smooth_labels(series, cfg.detector.smoothing);
    write_text_file(paths::labels(out), serialize_labeled_series(series));
  });
}

// Behavioral profile from the log and its labeled series.
inline void cmd_analyze(const PipelineConfig& cfg, const std::filesystem::path& out,
                        std::optional<std::filesystem::path> log_path = std::nullopt,
                        std::optional<std::filesystem::path> labels_path = std::nullopt) {
  detail::with_stage("analyze", [&] {
    cfg.validate();
    write_resolved_config(cfg, out);
    const TrajectoryLog log =
        load_log(log_path.value_or(paths::episode(cfg, out)), cfg.log_format);
    const LabeledSeries series =
        parse_labeled_series(read_text_file(labels_path.value_or(paths::labels(out))));
    ProfileParams params;
    params.min_duration = cfg.min_duration;
    params.rules = cfg.activity;
    const BehavioralProfile profile = build_profile(log, series, params);
    write_text_file(paths::profile(out), serialize_profile(profile));
  });
}

// Hybrid risk model from the profile and the expert risk data.
inline void cmd_generate(const PipelineConfig& cfg, const std::filesystem::path& out,
                         std::optional<std::filesystem::path> profile_path = std::nullopt,
                         std::optional<std::filesystem::path> riskdata_path = std::nullopt) {
  detail::with_stage("generate", [&] {
    cfg.validate();
    write_resolved_config(cfg, out);
    const BehavioralProfile profile =
        parse_profile(read_text_file(profile_path.value_or(paths::profile(out))));
    const RiskData risk = parse_risk_data(
        read_text_file(riskdata_path.value_or(cfg.risk_data_path)));
    const HybridRiskModel model = transform_profile(profile, risk);
    write_text_file(paths::exchange(out), serialize_model(model));
  });
}

// Quantification of the exchange model; writes the report in both formats.
inline RiskReport cmd_solve(const PipelineConfig& cfg, const std::filesystem::path& out,
                            std::optional<std::filesystem::path> model_path = std::nullopt) {
  return detail::with_stage("solve", [&] {
    cfg.validate();
    write_resolved_config(cfg, out);
    const HybridRiskModel model =
        parse_model(read_text_file(model_path.value_or(paths::exchange(out))));
    const RiskReport report = solve_hybrid(model);
    write_text_file(paths::report_json(out), serialize_report(report));
    write_text_file(paths::report_text(out), report_to_text(report));
    return report;
  });
}

// The full pipeline; byte-for-byte the composition of the six stages.
inline RiskReport cmd_run(const PipelineConfig& cfg, const std::filesystem::path& out) {
  cmd_simulate(cfg, out);
  cmd_train(cfg, out);
  cmd_detect(cfg, out);
  cmd_analyze(cfg, out);
  cmd_generate(cfg, out);
  return cmd_solve(cfg, out);
}

}  // namespace riskpipe
