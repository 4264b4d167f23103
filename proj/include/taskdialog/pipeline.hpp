#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "taskdialog/dataset.hpp"
#include "taskdialog/eval.hpp"
#include "taskdialog/llm_client.hpp"

namespace taskdialog {

/// Backend plus the cassette it reads or fills.
struct BackendHandle {
  std::string kind;  // live | replay | record
  std::shared_ptr<LlmBackend> backend;
  std::shared_ptr<Cassette> cassette;
  std::filesystem::path cassette_path;

  /// Persists newly recorded entries (record mode only).
  void flush() const;
};

/// replay needs an existing cassette (kStageInputMissing otherwise); record
/// extends the cassette at `cassette_path` when it exists. A null transport
/// means cpp-httplib.
BackendHandle open_backend(const std::string& kind, const std::filesystem::path& cassette_path,
                           const LiveConfig& live, std::shared_ptr<Transport> transport = nullptr);

struct PipelineConfig {
  std::filesystem::path manifest;
  std::filesystem::path run_dir = "run";
  std::filesystem::path stoplist;       // empty: built-in list
  std::filesystem::path templates_dir;  // empty: built-in templates
  std::vector<std::string> narrated_styles{"regular"};
  std::vector<std::string> annotated_styles{"concise", "regular"};
  bool error_mode = true;
  bool clarifications = true;
  std::string annotation_path = "merge";  // merge | cluster
  std::string correction_token = std::string(kDefaultCorrectionToken);
  std::string model = "default";
  double temperature = kGenerationTemperature;
  SplitRatios ratios;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  bool dry_run = false;

  /// Throws kConfigError.
  void validate() const;
};

struct StageResult {
  std::string summary;
  std::size_t planned_calls = 0;  // dry runs only
};

/// Stages read and write plain files in the run directory:
/// ingest.csv, instructions.jsonl, conversations.jsonl, spans.csv,
/// dataset.jsonl, cutlist.csv, split.csv and reports/.
class Pipeline {
 public:
  /// `backend` may be null for stages that make no LLM calls and for dry runs.
  Pipeline(PipelineConfig config, std::shared_ptr<LlmBackend> backend);

  StageResult ingest();
  StageResult build_instructions();
  StageResult gen_dialogues();
  StageResult localize();
  StageResult assemble();
  StageResult split();
  StageResult stats();

  const PipelineConfig& config() const { return config_; }

 private:
  std::filesystem::path file(const char* name) const { return config_.run_dir / name; }
  std::vector<SourceRecording> usable_recordings() const;
  LlmBackend& backend() const;

  PipelineConfig config_;
  std::shared_ptr<LlmBackend> backend_;
  TemplateRegistry templates_;
};

struct EvalConfig {
  std::filesystem::path dataset;
  std::filesystem::path out_dir = "eval";
  std::vector<std::string> modes{"hint_only", "hint_plus_steps"};
  std::string split = "test";  // test | all
  std::string model = "default";
  bool judge = true;
  std::string judge_model = "default";
  std::string judge_variant = "reference";  // reference | free
  std::filesystem::path predictions;        // reuse instead of running inference
  std::filesystem::path templates_dir;
  unsigned jobs = 1;
  bool dry_run = false;

  void validate() const;
};

struct EvalOutcome {
  std::vector<ReportTables> tables;
  std::size_t predictions = 0;
  std::size_t inference_errors = 0;
  std::size_t judge_errors = 0;
  std::size_t planned_calls = 0;
};

/// Writes run.json, predictions_<mode>.jsonl, errors_<mode>.jsonl,
/// metrics.csv and reports/<mode>/ under out_dir. Either backend may be null when the
/// corresponding calls are not needed.
EvalOutcome run_eval(const EvalConfig& config, LlmBackend* candidate, LlmBackend* judge_backend);

/// Rebuilds reports/ from the files a previous run_eval left in out_dir.
std::vector<ReportTables> rebuild_report(const std::filesystem::path& out_dir);

}  // namespace taskdialog
