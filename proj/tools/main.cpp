#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "taskdialog/error.hpp"
#include "taskdialog/pipeline.hpp"

namespace fs = std::filesystem;
using namespace taskdialog;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitStage = 2;

struct Options {
  PipelineConfig pipeline;
  EvalConfig eval;
  std::string backend = "replay";
  fs::path cassette;
  fs::path judge_cassette;
  int max_in_flight = 4;
  int requests_per_minute = 0;
  int max_retries = 4;
  std::string log_level = "info";
};

LiveConfig live_config(const Options& o) {
  LiveConfig live = LiveConfig::from_env();
  live.max_in_flight = o.max_in_flight;
  live.requests_per_minute = o.requests_per_minute;
  live.max_retries = o.max_retries;
  return live;
}

unsigned llm_jobs(const Options& o) {
  return std::max(1u, std::min(o.pipeline.jobs, static_cast<unsigned>(std::max(1, o.max_in_flight))));
}

void report(const std::string& stage, const StageResult& r) { std::cout << stage << ": " << r.summary << "\n"; }

int run_pipeline_stages(Options& o, const std::vector<std::string>& stages) {
  static const std::set<std::string> kLlmStages{"build-instructions", "gen-dialogues"};
  bool needs_llm = !o.pipeline.dry_run &&
                   std::any_of(stages.begin(), stages.end(), [](const auto& s) { return kLlmStages.count(s) > 0; });
  o.pipeline.validate();
  BackendHandle handle;
  if (needs_llm) {
    handle = open_backend(o.backend, o.cassette, live_config(o));
    o.pipeline.jobs = llm_jobs(o);
  }
  Pipeline p(o.pipeline, handle.backend);
  static const std::map<std::string, std::function<StageResult(Pipeline&)>> kStages{
      {"ingest", [](Pipeline& p) { return p.ingest(); }},
      {"build-instructions", [](Pipeline& p) { return p.build_instructions(); }},
      {"gen-dialogues", [](Pipeline& p) { return p.gen_dialogues(); }},
      {"localize", [](Pipeline& p) { return p.localize(); }},
      {"assemble", [](Pipeline& p) { return p.assemble(); }},
      {"split", [](Pipeline& p) { return p.split(); }},
      {"stats", [](Pipeline& p) { return p.stats(); }},
  };
  try {
    for (const auto& stage : stages) {
      if (o.pipeline.dry_run && !kLlmStages.count(stage)) {
        std::cout << stage << ": no LLM calls\n";
        continue;
      }
      report(stage, kStages.at(stage)(p));
    }
  } catch (...) {
    handle.flush();
    throw;
  }
  handle.flush();
  return kExitOk;
}

int run_eval_command(Options& o) {
  auto& cfg = o.eval;
  cfg.jobs = llm_jobs(o);
  cfg.templates_dir = o.pipeline.templates_dir;
  cfg.model = o.pipeline.model;
  cfg.dry_run = o.pipeline.dry_run;
  cfg.validate();
  BackendHandle cand, judge;
  if (!cfg.dry_run) {
    if (cfg.predictions.empty()) cand = open_backend(o.backend, o.cassette, live_config(o));
    if (cfg.judge) judge = open_backend(o.backend, o.judge_cassette, live_config(o));
  }
  EvalOutcome out;
  try {
    out = run_eval(cfg, cand.backend.get(), judge.backend.get());
  } catch (...) {
    cand.flush();
    judge.flush();
    throw;
  }
  cand.flush();
  judge.flush();
  if (cfg.dry_run) {
    std::cout << "eval: planned LLM calls: " << out.planned_calls << "\n";
    return kExitOk;
  }
  std::cout << "eval: " << out.predictions << " predictions, " << out.inference_errors << " inference errors, "
            << out.judge_errors << " judge errors\n";
  for (const auto& t : out.tables) {
    const auto& row = t.overall.rows.front();
    std::printf("  %-16s corpus_bleu=%.4f rouge1=%.4f rouge2=%.4f rougeL=%.4f judge=%.3f\n",
                std::string(to_string(t.mode)).c_str(), t.corpus_bleu, row.cells.at(Metric::kRouge1).mean,
                row.cells.at(Metric::kRouge2).mean, row.cells.at(Metric::kRougeL).mean,
                row.cells.at(Metric::kJudge).mean);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  o.pipeline.jobs = std::max(1u, std::thread::hardware_concurrency());

  CLI::App app{"taskdialog: build task-guidance dialogue datasets from instructional recordings and benchmark models on them"};
  app.set_config("--config", "", "TOML-style key = value file; every key matches a long flag");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.fallthrough();

  auto& pc = o.pipeline;
  app.add_option("--manifest", pc.manifest, "Recording manifest CSV");
  app.add_option("--run-dir", pc.run_dir, "Directory for stage outputs")->capture_default_str();
  app.add_option("--stoplist", pc.stoplist, "Generic-step stoplist (one pattern per line)");
  app.add_option("--templates-dir", pc.templates_dir, "Prompt template overrides");
  app.add_option("--narrated-styles", pc.narrated_styles, "Styles for narrated recordings")->delimiter(',');
  app.add_option("--annotated-styles", pc.annotated_styles, "Styles for normal annotated recordings")->delimiter(',');
  app.add_option("--error-mode", pc.error_mode, "Generate error sessions")->capture_default_str();
  app.add_option("--clarifications", pc.clarifications, "Insert clarification turns")->capture_default_str();
  app.add_option("--annotation-path", pc.annotation_path, "merge or cluster")->capture_default_str();
  app.add_option("--correction-token", pc.correction_token, "Marker for correction steps")->capture_default_str();
  app.add_option("--model", pc.model, "Model id for generation and candidate inference")->capture_default_str();
  app.add_option("--temperature", pc.temperature, "Generation temperature")->capture_default_str();
  app.add_option("--train-ratio", pc.ratios.train)->capture_default_str();
  app.add_option("--val-ratio", pc.ratios.val)->capture_default_str();
  app.add_option("--test-ratio", pc.ratios.test)->capture_default_str();
  app.add_option("--seed", pc.seed, "Split seed")->capture_default_str();
  app.add_option("--jobs", pc.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--dry-run", pc.dry_run, "Print planned LLM call counts and exit");
  app.add_option("--backend", o.backend, "live, replay or record")
      ->check(CLI::IsMember({"live", "replay", "record"}))
      ->capture_default_str();
  app.add_option("--cassette", o.cassette, "Cassette for pipeline or candidate calls");
  app.add_option("--judge-cassette", o.judge_cassette, "Cassette for judge calls");
  app.add_option("--max-in-flight", o.max_in_flight)->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--requests-per-minute", o.requests_per_minute)->capture_default_str();
  app.add_option("--max-retries", o.max_retries)->capture_default_str();
  app.add_option("--log-level", o.log_level)->check(CLI::IsMember({"debug", "info", "warn", "error", "off"}))->capture_default_str();

  auto& ec = o.eval;
  app.add_option("--dataset", ec.dataset, "Dataset JSON Lines for eval");
  app.add_option("--out-dir", ec.out_dir, "Eval output directory")->capture_default_str();
  app.add_option("--modes", ec.modes, "hint_only, hint_plus_steps")->delimiter(',');
  app.add_option("--eval-split", ec.split, "test or all")->capture_default_str();
  app.add_option("--judge", ec.judge, "Run LLM-as-judge")->capture_default_str();
  app.add_option("--judge-model", ec.judge_model)->capture_default_str();
  app.add_option("--judge-variant", ec.judge_variant, "reference or free")->capture_default_str();
  app.add_option("--predictions", ec.predictions, "Reuse predictions instead of running inference");

  const std::vector<std::pair<std::string, std::string>> stage_cmds{
      {"ingest", "Load the manifest and validate timelines"},
      {"build-instructions", "Form instruction sets"},
      {"gen-dialogues", "Generate conversations"},
      {"localize", "Map steps to time spans"},
      {"assemble", "Attach clips and write the dataset"},
      {"split", "Stratified train/val/test split"},
      {"stats", "Corpus statistics report"},
  };
  std::map<CLI::App*, std::vector<std::string>> plans;
  for (const auto& [name, help] : stage_cmds) plans[app.add_subcommand(name, help)] = {name};
  std::vector<std::string> all_stages;
  for (const auto& [name, help] : stage_cmds) all_stages.push_back(name);
  plans[app.add_subcommand("run", "Run every dataset stage from ingest to stats")] = all_stages;
  auto* eval_cmd = app.add_subcommand("eval", "Benchmark a model on the dataset (run manifest via --config)");
  auto* report_cmd = app.add_subcommand("report", "Rebuild eval report tables from an eval output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  spdlog::set_level(spdlog::level::from_str(o.log_level));

  try {
    if (eval_cmd->parsed()) return run_eval_command(o);
    if (report_cmd->parsed()) {
      for (const auto& t : rebuild_report(o.eval.out_dir))
        std::cout << "report: " << to_string(t.mode) << " " << t.records << " records\n";
      return kExitOk;
    }
    for (const auto& [cmd, stages] : plans)
      if (cmd->parsed()) return run_pipeline_stages(o, stages);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::kConfigError ? kExitUsage : kExitStage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  }
  return kExitUsage;
}
