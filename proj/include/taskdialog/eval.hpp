#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "taskdialog/dataset.hpp"
#include "taskdialog/llm_client.hpp"
#include "taskdialog/templates.hpp"

namespace taskdialog {

enum class PromptMode { kHintOnly, kHintPlusSteps };
std::string_view to_string(PromptMode m);  // "hint_only" | "hint_plus_steps"
std::optional<PromptMode> parse_prompt_mode(std::string_view s);

struct PredictedResponse {
  std::string session_id;
  int turn_index = 0;
  PromptMode mode = PromptMode::kHintOnly;
  std::string text;
  bool operator==(const PredictedResponse&) const = default;
};

struct InferenceError {
  std::string session_id;
  int turn_index = 0;
  PromptMode mode = PromptMode::kHintOnly;
  std::string message;
};

struct InferenceResult {
  std::vector<PredictedResponse> predictions;
  std::vector<InferenceError> errors;
};

struct EvalOptions {
  std::string model_id;
  double temperature = kEvaluationTemperature;
  int max_output_tokens = kTurnMaxTokens;
  unsigned jobs = 1;
  const TemplateRegistry* templates = nullptr;  // builtin when null
};

/// Role-tagged history of turns [1, turn_index), then the user side of
/// turn_index. Turn indices are 1-based.
std::string render_history(const Conversation& conv, int turn_index, bool include_target_user = true);

PromptRequest build_prompt(const Session& session, int turn_index, PromptMode mode, const EvalOptions& options = {});

/// Teacher-forced: every turn sees the ground-truth history. Client failures
/// are recorded per turn and the run continues.
InferenceResult run_inference(const std::vector<Session>& sessions, PromptMode mode, LlmBackend& backend,
                              const EvalOptions& options = {});

// Metrics -------------------------------------------------------------------

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Corpus BLEU with brevity penalty. Orders with no candidate n-grams in the
/// whole corpus are left out of the geometric mean. Throws kEmptyInput on an
/// empty corpus and kInvalidArgument on mismatched lengths.
double bleu(const std::vector<std::string>& candidates, const std::vector<std::string>& references, int max_n = 4);

/// Sentence BLEU with add-one smoothing on orders n >= 2.
double sentence_bleu(const std::string& candidate, const std::string& reference, int max_n = 4);

Prf rouge_n(const std::string& candidate, const std::string& reference, int n);
Prf rouge_l(const std::string& candidate, const std::string& reference);

// Judge ---------------------------------------------------------------------

enum class JudgeVariant { kReference, kReferenceFree };

struct JudgeOptions {
  std::string model_id;
  JudgeVariant variant = JudgeVariant::kReference;
  double temperature = kEvaluationTemperature;
  int max_output_tokens = kTurnMaxTokens;
  const TemplateRegistry* templates = nullptr;
};

struct JudgeVerdict {
  int score = 0;
  std::string rationale;
  int attempts = 1;
};

/// Last standalone integer in the text. Denominators such as the 5 in "4/5"
/// or "out of 5" are skipped. nullopt when none is found or it is outside 1-5.
std::optional<int> parse_judge_score(std::string_view completion);

/// One re-ask on an unusable score, then kUnparseableScore.
JudgeVerdict judge(const Session& session, int turn_index, const std::string& prediction, LlmBackend& backend,
                   const JudgeOptions& options = {});

// Records and aggregation ---------------------------------------------------

struct MetricRecord {
  std::string session_id;
  int turn_index = 0;
  PromptMode mode = PromptMode::kHintOnly;
  double bleu = 0.0;  // smoothed sentence BLEU
  Prf rouge1;
  Prf rouge2;
  Prf rougeL;
  std::optional<int> judge;
};

/// Scores each prediction against its reference turn. Throws kInvalidArgument
/// when a prediction names an unknown session or turn.
std::vector<MetricRecord> score_predictions(const std::vector<PredictedResponse>& predictions,
                                            const std::vector<Session>& sessions, unsigned jobs = 1);

enum class Metric { kBleu, kRouge1, kRouge2, kRougeL, kJudge };
inline constexpr std::array<Metric, 5> kAllMetrics{Metric::kBleu, Metric::kRouge1, Metric::kRouge2, Metric::kRougeL,
                                                   Metric::kJudge};
std::string_view to_string(Metric m);
std::optional<double> metric_value(const MetricRecord& r, Metric m);

struct MetricCell {
  double mean = 0.0;
  std::size_t count = 0;
};

struct ReportRow {
  std::string key;
  std::map<Metric, MetricCell> cells;
};

struct ReportTable {
  std::string name;  // overall | task | category | turn_index
  std::vector<ReportRow> rows;
};

struct ReportTables {
  PromptMode mode = PromptMode::kHintOnly;
  ReportTable overall;
  ReportTable by_task;
  ReportTable by_category;
  ReportTable by_turn;
  double corpus_bleu = 0.0;
  std::size_t records = 0;
};

/// Records must all share one mode. Throws kInvalidArgument on a record
/// naming an unknown session.
ReportTables aggregate(const std::vector<MetricRecord>& records, const std::vector<Session>& sessions,
                       const std::vector<PredictedResponse>& predictions = {});

/// Largest |sum(mean*count)/sum(count) - overall| over all tables and metrics.
double recomposition_error(const ReportTables& tables);

std::string table_csv(const ReportTable& table);
void write_report(const ReportTables& tables, const std::vector<MetricRecord>& records,
                  const std::filesystem::path& dir);

// Serialization -------------------------------------------------------------

std::string predictions_jsonl(const std::vector<PredictedResponse>& predictions);
std::vector<PredictedResponse> parse_predictions_jsonl(std::string_view jsonl);
std::string errors_jsonl(const std::vector<InferenceError>& errors);
std::string metrics_csv(const std::vector<MetricRecord>& records);
std::vector<MetricRecord> parse_metrics_csv(std::string_view content);

}  // namespace taskdialog
