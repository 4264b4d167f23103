#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "taskdialog/dialogue.hpp"
#include "taskdialog/instruction.hpp"

namespace taskdialog {

inline constexpr int kSchemaVersion = 1;

enum class Split { kTrain, kVal, kTest };
std::string_view to_string(Split s);
std::optional<Split> parse_split(std::string_view s);

struct Session {
  std::string session_id;
  std::string task;
  SpeechStyle style = SpeechStyle::kRegular;
  ActionType action_type = ActionType::kFollow;
  InstructionSet instruction_set;
  Conversation conversation;
  std::string source_recording_id;
  std::optional<Split> split;
  bool operator==(const Session&) const = default;
};

/// First 16 hex digits of SHA-256 over (recording_id, style, action_type).
std::string make_session_id(const std::string& recording_id, SpeechStyle style, ActionType action_type);

/// Throws kValidationFailure carrying the dialogue report when the
/// conversation does not validate against the instruction set.
Session assemble(const Conversation& conv, const InstructionSet& set);

struct SplitRatios {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
};

struct SplitAssignment {
  std::map<std::string, Split> by_session;
  std::uint64_t seed = 0;
  SplitRatios ratios;

  std::array<std::size_t, 3> totals() const;
};

/// Per-stratum sizes for n sessions: test = ceil(test*n), val = floor(val*n),
/// train takes the rest. Each part stays within one session of its exact
/// quota.
std::array<std::size_t, 3> stratum_sizes(std::size_t n, const SplitRatios& ratios);

/// Strata are (task, style, action_type). Each stratum is shuffled with a
/// Fisher-Yates pass driven by mt19937_64 seeded from (seed, stratum key), so
/// results are identical across standard libraries.
SplitAssignment stratified_split(const std::vector<Session>& sessions, const SplitRatios& ratios, std::uint64_t seed);

void apply_split(std::vector<Session>& sessions, const SplitAssignment& assignment);

struct Distribution {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::vector<double> values;  // sorted ascending
};

Distribution make_distribution(std::vector<double> values);

struct TaskStats {
  std::size_t sessions = 0;
  std::size_t turns = 0;
  double video_seconds = 0.0;
};

struct StatsReport {
  std::map<std::string, TaskStats> per_task;
  std::size_t total_sessions = 0;
  std::size_t total_turns = 0;
  double total_video_seconds = 0.0;
  double mean_turns_per_session = 0.0;
  std::map<std::string, Distribution> user_words_by_category;  // key "style-action"
  Distribution user_words;
  Distribution expert_words;
  Distribution clip_seconds;
};

StatsReport compute_stats(const std::vector<Session>& sessions);

/// CSV tables and SVG histograms under `dir`.
void write_stats_report(const StatsReport& report, const std::filesystem::path& dir);

std::string session_to_json_line(const Session& session);
/// Throws kSchemaViolation naming the line and field path.
Session session_from_json_line(std::string_view line, std::size_t line_no = 1);

/// Stage files reuse the session schema for their instruction and turn lists.
std::string instruction_set_to_json_line(const InstructionSet& set);
InstructionSet instruction_set_from_json_line(std::string_view line, std::size_t line_no = 1);
std::string conversation_to_json_line(const Conversation& conv);
Conversation conversation_from_json_line(std::string_view line, std::size_t line_no = 1);

std::string serialize_dataset(const std::vector<Session>& sessions);
std::vector<Session> parse_dataset(std::string_view jsonl);
void write_dataset(const std::vector<Session>& sessions, const std::filesystem::path& path);
std::vector<Session> read_dataset(const std::filesystem::path& path);

/// Absolute location of a turn's clip under a dataset root.
std::filesystem::path resolve_clip(const std::filesystem::path& dataset_root, const DialogueTurn& turn);

}  // namespace taskdialog
