#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "taskdialog/generation.hpp"
#include "taskdialog/ingest.hpp"
#include "taskdialog/report.hpp"

namespace taskdialog {

inline constexpr std::string_view kDefaultCorrectionToken = "[[CORRECTION]]";

enum class Provenance { kNarrationLlm, kAnnotationMerge, kAnnotationCluster };
std::string_view to_string(Provenance p);
std::optional<Provenance> parse_provenance(std::string_view s);

struct InstructionStep {
  int ordinal = 0;
  std::string text;
  std::optional<TimeSpan> span;
  bool is_correction = false;
  std::vector<int> source_refs;  // 1-based subtitle or annotation indices
  std::vector<std::string> caveats;
  bool operator==(const InstructionStep&) const = default;
};

struct InstructionSet {
  std::string task;
  std::string recording_id;
  std::vector<InstructionStep> steps;
  Provenance provenance = Provenance::kNarrationLlm;
  bool operator==(const InstructionSet&) const = default;

  bool has_corrections() const;
  bool has_caveats() const;
  const InstructionStep* step(int ordinal) const;
};

/// Checks the structural invariants: at least two steps, consecutive
/// ordinals from 1, non-empty text, and (for annotation-derived sets)
/// non-decreasing span starts.
ValidationReport validate_instruction_set(const InstructionSet& set);

struct ParsedStep {
  std::string text;
  std::vector<int> cue_refs;
  std::vector<std::string> caveats;
};

/// Parses a numbered list ("1. text [cues: 3-5]" plus indented "caveat:"
/// lines). Returns an empty vector when no enumerated line exists.
std::vector<ParsedStep> parse_enumerated_steps(std::string_view completion);

/// Number of action clauses in an imperative step: one, plus one for every
/// conjunction ("and", "then", ",", ";") directly followed by a known
/// action verb. A step is atomic when this is 1.
int count_action_clauses(std::string_view step_text);

InstructionSet extract_from_narration(const std::vector<SubtitleEntry>& subtitles, const std::string& task,
                                      const std::string& recording_id, const LlmContext& llm);

InstructionSet normalize_annotated_steps(const std::vector<StepAnnotation>& steps, const std::string& task,
                                         const std::string& recording_id, const LlmContext& llm);

InstructionSet cluster_and_filter_steps(const std::vector<StepAnnotation>& steps,
                                        const std::vector<std::string>& stoplist, const std::string& task,
                                        const std::string& recording_id, const LlmContext& llm);

std::vector<std::string> default_stoplist();
/// One case-insensitive substring pattern per line; blank lines and lines
/// starting with '#' are ignored.
std::vector<std::string> load_stoplist(const std::filesystem::path& path);

/// Renders "k. text" lines; correction steps are prefixed with the token.
/// Throws kTokenCollision when a step's own text contains the token.
std::string mark_corrections(const InstructionSet& set, std::string_view special_token = kDefaultCorrectionToken);

}  // namespace taskdialog
