#pragma once

// Settings shared by the fixture recorder, unit tests and the acceptance
// binary. Keep in sync with tests/fixtures/{pipeline,eval}.toml.

#include <filesystem>
#include <memory>
#include <string_view>

#include "taskdialog/pipeline.hpp"

namespace taskdialog::fixture {

inline constexpr std::string_view kGeneratorModel = "fixture-generator";
inline constexpr std::string_view kCandidateModel = "fixture-candidate";
inline constexpr std::string_view kJudgeModel = "fixture-judge";
inline constexpr std::uint64_t kSeed = 7;

#ifdef TASKDIALOG_SOURCE_DIR
inline std::filesystem::path source_dir() { return TASKDIALOG_SOURCE_DIR; }
inline std::filesystem::path fixtures_dir() { return source_dir() / "tests" / "fixtures"; }
inline std::filesystem::path cassette(std::string_view name) {
  return fixtures_dir() / "cassettes" / (std::string(name) + ".jsonl");
}

inline std::shared_ptr<LlmBackend> replay(std::string_view name) {
  return std::make_shared<ReplayBackend>(std::make_shared<Cassette>(Cassette::load(cassette(name))));
}
#endif

inline PipelineConfig pipeline_config(const std::filesystem::path& fixtures, const std::filesystem::path& run_dir) {
  PipelineConfig cfg;
  cfg.manifest = fixtures / "manifest.csv";
  cfg.run_dir = run_dir;
  cfg.model = std::string(kGeneratorModel);
  cfg.seed = kSeed;
  cfg.jobs = 2;
  return cfg;
}

inline EvalConfig eval_config(const std::filesystem::path& dataset, const std::filesystem::path& out_dir) {
  EvalConfig cfg;
  cfg.dataset = dataset;
  cfg.out_dir = out_dir;
  cfg.split = "all";
  cfg.model = std::string(kCandidateModel);
  cfg.judge_model = std::string(kJudgeModel);
  cfg.jobs = 2;
  return cfg;
}

/// Every stage from ingest to stats, in order.
inline void run_all_stages(Pipeline& p) {
  p.ingest();
  p.build_instructions();
  p.gen_dialogues();
  p.localize();
  p.assemble();
  p.split();
  p.stats();
}

}  // namespace taskdialog::fixture
