#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "taskdialog/dataset.hpp"
#include "taskdialog/dialogue.hpp"
#include "taskdialog/ingest.hpp"
#include "taskdialog/instruction.hpp"

namespace taskdialog {

struct StepSpanMap {
  std::string recording_id;
  std::map<int, TimeSpan> entries;  // step ordinal -> span
  bool operator==(const StepSpanMap&) const = default;
};

/// Non-decreasing starts in ordinal order and every span inside duration.
ValidationReport validate_span_map(const StepSpanMap& map, double duration);

/// Each step's span is [min start, max end] over the annotations it refers to.
StepSpanMap localize_direct(const InstructionSet& set, const std::vector<StepAnnotation>& annotations);

/// Each step spans from its first referenced cue's start to its last
/// referenced cue's end. A step without cue references takes the gap between
/// its neighbours' spans; when that gap is empty it reuses the previous
/// neighbour's span.
StepSpanMap localize_from_subtitles(const InstructionSet& set, const std::vector<SubtitleEntry>& subtitles);

/// Step turns get their step's span, error reports and clarifications their
/// parent step's span, task_init the lead-in [0, first start] when non-empty.
/// Clip paths are set for every span-bearing turn.
Conversation attach_clips(Conversation conv, const StepSpanMap& map, const std::string& session_id = {});

std::string clip_filename(const std::string& session_id, int turn_index);

std::string cutlist_csv(const std::vector<Session>& sessions);
/// Writes `cutlist.csv` under output_dir and returns its path.
std::filesystem::path emit_cutlist(const std::vector<Session>& sessions, const std::filesystem::path& output_dir);

struct SegmentationScore {
  double mean_iou = 0.0;
  double precision = 0.0;
  double accuracy = 0.0;
  std::map<int, double> per_step_iou;
  bool precision_defined = true;  // false when nothing was predicted
};

/// Labels cells of width `resolution` by the step whose span contains the
/// cell centre (later starts win on overlap), then scores predicted against
/// truth cell by cell. mean_iou is the macro average over truth steps that
/// occupy a cell in either map; throws kEmptyTruth when there are none.
SegmentationScore score_segmentation(const StepSpanMap& predicted, const StepSpanMap& truth, double duration,
                                     double resolution = 1.0);

std::string span_maps_csv(const std::vector<StepSpanMap>& maps);
std::vector<StepSpanMap> parse_span_maps_csv(std::string_view content);

}  // namespace taskdialog
