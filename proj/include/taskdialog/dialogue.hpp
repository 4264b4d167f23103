#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "taskdialog/generation.hpp"
#include "taskdialog/instruction.hpp"
#include "taskdialog/report.hpp"

namespace taskdialog {

enum class SpeechStyle { kConcise, kRegular };
enum class ActionType { kFollow, kError };
enum class TurnKind { kTaskInit, kStep, kClarification, kErrorReport, kClosing };

std::string_view to_string(SpeechStyle s);
std::string_view to_string(ActionType a);
std::string_view to_string(TurnKind k);
std::optional<SpeechStyle> parse_speech_style(std::string_view s);
std::optional<ActionType> parse_action_type(std::string_view s);
std::optional<TurnKind> parse_turn_kind(std::string_view s);

struct DialogueTurn {
  int index = 0;  // 1-based
  std::string user_text;
  std::string expert_text;
  std::optional<TimeSpan> span;
  TurnKind kind = TurnKind::kStep;
  std::optional<int> step_ordinal;
  std::string clip_path;  // relative to the dataset root; empty when no span
  bool operator==(const DialogueTurn&) const = default;
};

struct Conversation {
  std::vector<DialogueTurn> turns;
  std::string task;
  SpeechStyle style = SpeechStyle::kRegular;
  ActionType action_type = ActionType::kFollow;
  std::string source_recording_id;
  bool operator==(const Conversation&) const = default;
};

/// Parses a tagged script: a marker line (#init, #step=<k>, #error=<k>,
/// #closing) followed by "USER:" and "EXPERT:" lines. An unmarked first turn
/// is task_init and an unmarked last turn is closing. Throws
/// kUnparseableCompletion.
std::vector<DialogueTurn> parse_dialogue_script(std::string_view script);

struct DialogueOptions {
  std::string correction_token = std::string(kDefaultCorrectionToken);
};

/// One LLM call (plus one retry on an unparseable script or on a coverage
/// failure) producing task_init, one step turn per instruction, error
/// reports in error mode, and closing.
Conversation generate(const InstructionSet& set, SpeechStyle style, ActionType action_type, const LlmContext& llm,
                      const DialogueOptions& options = {});

/// One clarification turn per caveat, each carrying its parent step ordinal.
/// Caveats the model does not answer fall back to a templated exchange
/// quoting the caveat.
std::vector<DialogueTurn> generate_clarifications(const InstructionSet& set, const LlmContext& llm);

/// Places each clarification right after its parent step's block (the step
/// turn and any error report for it) and renumbers turn indices.
Conversation insert_clarifications(Conversation conv, const std::vector<DialogueTurn>& clarifications);

ValidationReport validate(const Conversation& conv, const InstructionSet& set);

}  // namespace taskdialog
