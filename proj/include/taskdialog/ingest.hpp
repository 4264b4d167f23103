#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "taskdialog/report.hpp"

namespace taskdialog {

/// Half-open interval in seconds. Valid spans satisfy 0 <= start < end.
struct TimeSpan {
  double start = 0.0;
  double end = 0.0;

  double length() const { return end - start; }
  bool valid() const { return start >= 0.0 && start < end; }
  bool contains(const TimeSpan& other) const { return start <= other.start && other.end <= end; }
  bool operator==(const TimeSpan&) const = default;
};

/// Rounds to whole milliseconds, the canonical internal precision.
double round_ms(double seconds);

struct SubtitleEntry {
  std::string text;
  TimeSpan span;
  int index = 0;  // 1-based, consecutive after parsing
  bool operator==(const SubtitleEntry&) const = default;
};

enum class ErrorLabel { kNormal, kOmission, kAddition, kModification, kSlip, kCorrection };

std::string_view to_string(ErrorLabel label);
std::optional<ErrorLabel> parse_error_label(std::string_view s);

struct StepAnnotation {
  std::string description;
  TimeSpan span;
  std::optional<ErrorLabel> error_label;
  bool operator==(const StepAnnotation&) const = default;
};

enum class SourceKind { kNarrated, kAnnotated };
std::string_view to_string(SourceKind kind);

struct SourceRecording {
  std::string recording_id;
  std::string task;
  double duration = 0.0;
  SourceKind source_kind = SourceKind::kNarrated;
  std::optional<std::vector<SubtitleEntry>> subtitles;
  std::optional<std::vector<StepAnnotation>> steps;
  std::optional<std::int64_t> frame_count;
  bool egocentric = true;
};

enum class SubtitleFormat { kSrt, kVtt };

/// Parses SubRip or WebVTT text. A UTF-8 BOM is stripped, styling tags are
/// removed, multi-line cue text is joined with single spaces, cues are sorted
/// by start time and renumbered from 1.
std::vector<SubtitleEntry> parse_subtitle_file(std::string_view content, SubtitleFormat format);
std::string write_srt(const std::vector<SubtitleEntry>& entries);
std::string write_vtt(const std::vector<SubtitleEntry>& entries);

/// Parses `start_s,end_s,description[,error_label]` rows (header required).
/// An empty error_label reads as normal; a missing column leaves it unset.
std::vector<StepAnnotation> parse_step_annotation_file(std::string_view content);
std::string write_step_annotation_file(const std::vector<StepAnnotation>& steps);

/// Loads a recording manifest; referenced paths resolve relative to the
/// manifest directory. Per-recording parsing runs on `jobs` threads while the
/// result keeps manifest order.
std::vector<SourceRecording> load_manifest(const std::filesystem::path& path, unsigned jobs = 1);

ValidationReport validate_timeline(const SourceRecording& recording);

struct ErrorPartition {
  std::vector<SourceRecording> error;     // only modification/correction mistakes
  std::vector<SourceRecording> normal;    // no mistakes at all
  std::vector<SourceRecording> excluded;  // any other mistake type
};

ErrorPartition partition_by_errors(const std::vector<SourceRecording>& recordings);
std::vector<SourceRecording> select_error_recordings(const std::vector<SourceRecording>& recordings);

}  // namespace taskdialog
