#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "riskpipe/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonArgs {
  std::string config;
  std::string out = "out";
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "pipeline config JSON")->required();
  cmd->add_option("--out", args.out, "output directory");
  cmd->add_option("--set", args.overrides, "config override key.path=value");
  cmd->add_option("--seed", args.seed, "override the master seed");
}

riskpipe::PipelineConfig load(const CommonArgs& args) {
  return riskpipe::load_pipeline_config(args.config, args.overrides, args.seed);
}

void print_versions() {
  std::cout << "riskpipe 1.0.0\n"
            << "  trajectory log:     1 (jsonl/csv + hardware header)\n"
            << "  ground truth:       1\n"
            << "  model checkpoint:   1\n"
            << "  labeled series:     1\n"
            << "  behavioral profile: 1\n"
            << "  exchange document:  " << riskpipe::kExchangeSchema << "\n"
            << "  risk report:        1\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dynamic risk assessment pipeline for robot manipulators"};
  app.require_subcommand(0, 1);
  bool show_version = false;
  app.add_flag("--version", show_version, "print tool and schema versions");

  CommonArgs sim, train, detect, analyze, generate, solve, run;
  std::string detect_log, detect_model;
  std::string analyze_log, analyze_labels;
  std::string generate_profile, generate_riskdata;
  std::string solve_model;
  std::string report_format = "text";

  CLI::App* c_sim = app.add_subcommand("simulate", "write a synthetic episode + ground truth");
  add_common(c_sim, sim);
  CLI::App* c_train = app.add_subcommand("train", "build the dataset, train and evaluate the detector");
  add_common(c_train, train);
  CLI::App* c_detect = app.add_subcommand("detect", "label a log with a trained checkpoint");
  add_common(c_detect, detect);
  c_detect->add_option("--log", detect_log, "episode log (default: <out>/episode.*)");
  c_detect->add_option("--model", detect_model, "checkpoint (default: <out>/model.json)");
  CLI::App* c_analyze = app.add_subcommand("analyze", "build the behavioral profile");
  add_common(c_analyze, analyze);
  c_analyze->add_option("--log", analyze_log, "episode log (default: <out>/episode.*)");
  c_analyze->add_option("--labels", analyze_labels, "labeled series (default: <out>/labels.json)");
  CLI::App* c_generate = app.add_subcommand("generate", "transform profile + risk data into the exchange model");
  add_common(c_generate, generate);
  c_generate->add_option("--profile", generate_profile, "profile (default: <out>/profile.json)");
  c_generate->add_option("--riskdata", generate_riskdata, "risk data (default: config risk_data)");
  CLI::App* c_solve = app.add_subcommand("solve", "quantify the exchange model");
  add_common(c_solve, solve);
  c_solve->add_option("--model", solve_model, "exchange document (default: <out>/model_exchange.json)");
  c_solve->add_option("--format", report_format, "report format printed to stdout")
      ->check(CLI::IsMember({"json", "text"}));
  CLI::App* c_run = app.add_subcommand("run", "full pipeline, all artifacts persisted");
  add_common(c_run, run);
  c_run->add_option("--format", report_format, "report format printed to stdout")
      ->check(CLI::IsMember({"json", "text"}));

  CLI11_PARSE(app, argc, argv);

  if (show_version) {
    print_versions();
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return 1;
  }

  auto opt_path = [](const std::string& s) {
    return s.empty() ? std::optional<fs::path>{} : std::optional<fs::path>{s};
  };

  const std::string stage = app.get_subcommands().front()->get_name();
  try {
    if (c_sim->parsed()) {
      riskpipe::cmd_simulate(load(sim), sim.out);
    } else if (c_train->parsed()) {
      riskpipe::cmd_train(load(train), train.out);
    } else if (c_detect->parsed()) {
      riskpipe::cmd_detect(load(detect), detect.out, opt_path(detect_log),
                           opt_path(detect_model));
    } else if (c_analyze->parsed()) {
      riskpipe::cmd_analyze(load(analyze), analyze.out, opt_path(analyze_log),
                            opt_path(analyze_labels));
    } else if (c_generate->parsed()) {
      riskpipe::cmd_generate(load(generate), generate.out, opt_path(generate_profile),
                             opt_path(generate_riskdata));
    } else if (c_solve->parsed()) {
      const riskpipe::RiskReport report = riskpipe::cmd_solve(load(solve), solve.out,
                                                              opt_path(solve_model));
      std::cout << (report_format == "json" ? riskpipe::serialize_report(report)
                                            : riskpipe::report_to_text(report));
    } else if (c_run->parsed()) {
      const riskpipe::RiskReport report = riskpipe::cmd_run(load(run), run.out);
      std::cout << (report_format == "json" ? riskpipe::serialize_report(report)
                                            : riskpipe::report_to_text(report));
    }
  } catch (const riskpipe::ModelError& e) {
    std::cerr << "[" << stage << "] error: " << e.what() << "\n";
    return 2;
  } catch (const riskpipe::NumericError& e) {
    std::cerr << "[" << stage << "] error: " << e.what() << "\n";
    return 2;
  } catch (const riskpipe::Error& e) {
    std::cerr << "[" << stage << "] error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "[" << stage << "] error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
