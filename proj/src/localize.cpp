#include "taskdialog/localize.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

#include "taskdialog/csv.hpp"
#include "taskdialog/error.hpp"
#include "taskdialog/io.hpp"
#include "taskdialog/text.hpp"

namespace taskdialog {

ValidationReport validate_span_map(const StepSpanMap& map, double duration) {
  ValidationReport report;
  std::optional<double> prev_start;
  for (const auto& [ordinal, span] : map.entries) {
    const std::string name = "step " + std::to_string(ordinal);
    if (!span.valid()) report.add("invalid span", name);
    if (span.end > duration + 1e-9) report.add("span exceeds duration", name);
    if (prev_start && span.start < *prev_start) report.add("non-monotone ordering", name);
    prev_start = span.start;
  }
  return report;
}

StepSpanMap localize_direct(const InstructionSet& set, const std::vector<StepAnnotation>& annotations) {
  StepSpanMap map;
  map.recording_id = set.recording_id;
  for (const auto& step : set.steps) {
    if (step.source_refs.empty())
      throw Error(ErrorCode::kPreconditionViolation, set.recording_id + ": step " + std::to_string(step.ordinal) + " has no source refs");
    std::optional<TimeSpan> span;
    for (int ref : step.source_refs) {
      if (ref < 1 || ref > static_cast<int>(annotations.size()))
        throw Error(ErrorCode::kDanglingSourceRef, set.recording_id + ": step " + std::to_string(step.ordinal) +
                                                       " refers to annotation " + std::to_string(ref) + " of " +
                                                       std::to_string(annotations.size()));
      const TimeSpan& a = annotations[static_cast<std::size_t>(ref - 1)].span;
      span = span ? TimeSpan{std::min(span->start, a.start), std::max(span->end, a.end)} : a;
    }
    map.entries[step.ordinal] = *span;
  }
  return map;
}

StepSpanMap localize_from_subtitles(const InstructionSet& set, const std::vector<SubtitleEntry>& subtitles) {
  StepSpanMap map;
  map.recording_id = set.recording_id;
  std::vector<std::optional<TimeSpan>> spans(set.steps.size());
  for (std::size_t i = 0; i < set.steps.size(); ++i) {
    const auto& step = set.steps[i];
    std::optional<int> first, last;
    for (int ref : step.source_refs) {
      if (ref < 1 || ref > static_cast<int>(subtitles.size()))
        throw Error(ErrorCode::kDanglingSourceRef, set.recording_id + ": step " + std::to_string(step.ordinal) +
                                                       " cites cue " + std::to_string(ref));
      first = first ? std::min(*first, ref) : ref;
      last = last ? std::max(*last, ref) : ref;
    }
    if (first) {
      spans[i] = TimeSpan{subtitles[static_cast<std::size_t>(*first - 1)].span.start,
                          subtitles[static_cast<std::size_t>(*last - 1)].span.end};
    }
  }
  if (std::none_of(spans.begin(), spans.end(), [](const auto& s) { return s.has_value(); }))
    throw Error(ErrorCode::kNoLocalizableSteps, set.recording_id);

  const double transcript_end = subtitles.empty() ? 0.0 : std::max_element(subtitles.begin(), subtitles.end(), [](const auto& a, const auto& b) {
                                                            return a.span.end < b.span.end;
                                                          })->span.end;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (spans[i]) continue;
    // Nearest anchored neighbours; earlier gap fills count as anchors too.
    std::optional<TimeSpan> prev, next;
    for (std::size_t j = i; j-- > 0;)
      if (spans[j]) {
        prev = spans[j];
        break;
      }
    for (std::size_t j = i + 1; j < spans.size(); ++j)
      if (spans[j]) {
        next = spans[j];
        break;
      }
    double lo = prev ? prev->end : 0.0;
    double hi = next ? next->start : transcript_end;
    if (hi > lo) {
      spans[i] = TimeSpan{lo, hi};
    } else {
      spans[i] = prev ? *prev : *next;
    }
    spdlog::info("{}: step {} has no cue refs, gap-filled to [{}, {}]", set.recording_id, set.steps[i].ordinal,
                 text::format_seconds(spans[i]->start), text::format_seconds(spans[i]->end));
  }
  for (std::size_t i = 0; i < spans.size(); ++i) map.entries[set.steps[i].ordinal] = *spans[i];
  return map;
}

std::string clip_filename(const std::string& session_id, int turn_index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03d", turn_index);
  return session_id + "_t" + buf + ".mp4";
}

Conversation attach_clips(Conversation conv, const StepSpanMap& map, const std::string& session_id) {
  for (const auto& t : conv.turns) {
    if (t.kind == TurnKind::kStep && t.step_ordinal && !map.entries.contains(*t.step_ordinal))
      throw Error(ErrorCode::kMissingSpan, "step " + std::to_string(*t.step_ordinal));
  }
  std::optional<double> first_start;
  if (!map.entries.empty()) {
    first_start = map.entries.begin()->second.start;
    for (const auto& [k, s] : map.entries) first_start = std::min(*first_start, s.start);
  }
  for (auto& t : conv.turns) {
    t.span.reset();
    switch (t.kind) {
      case TurnKind::kTaskInit:
        if (first_start && *first_start > 0.0) t.span = TimeSpan{0.0, *first_start};
        break;
      case TurnKind::kStep:
      case TurnKind::kErrorReport:
      case TurnKind::kClarification:
        if (t.step_ordinal) {
          auto it = map.entries.find(*t.step_ordinal);
          if (it != map.entries.end()) t.span = it->second;
        }
        break;
      case TurnKind::kClosing:
        break;
    }
    t.clip_path = t.span && !session_id.empty() ? "clips/" + clip_filename(session_id, t.index) : std::string();
  }
  return conv;
}

std::string cutlist_csv(const std::vector<Session>& sessions) {
  std::string out = "recording_id,start_s,end_s,clip_filename\n";
  for (const auto& s : sessions) {
    for (const auto& t : s.conversation.turns) {
      if (!t.span) continue;
      out += csv::join({s.source_recording_id, text::format_seconds(t.span->start), text::format_seconds(t.span->end),
                        clip_filename(s.session_id, t.index)});
      out += '\n';
    }
  }
  return out;
}

std::filesystem::path emit_cutlist(const std::vector<Session>& sessions, const std::filesystem::path& output_dir) {
  auto path = output_dir / "cutlist.csv";
  io::write_file_atomic(path, cutlist_csv(sessions));
  return path;
}

namespace {

std::vector<int> label_cells(const StepSpanMap& map, std::size_t cells, double resolution) {
  std::vector<int> labels(cells, 0);
  // Later starts win where spans overlap.
  std::vector<std::pair<int, TimeSpan>> ordered(map.entries.begin(), map.entries.end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& a, const auto& b) { return a.second.start < b.second.start; });
  for (const auto& [ordinal, span] : ordered) {
    for (std::size_t c = 0; c < cells; ++c) {
      double centre = (static_cast<double>(c) + 0.5) * resolution;
      if (centre >= span.start && centre < span.end) labels[c] = ordinal;
    }
  }
  return labels;
}

}  // namespace

SegmentationScore score_segmentation(const StepSpanMap& predicted, const StepSpanMap& truth, double duration,
                                     double resolution) {
  if (!(resolution > 0.0)) throw Error(ErrorCode::kInvalidArgument, "resolution must be positive");
  if (truth.entries.empty()) throw Error(ErrorCode::kEmptyTruth, truth.recording_id);
  if (!(duration > 0.0)) throw Error(ErrorCode::kInvalidArgument, "duration must be positive");
  for (const auto& [k, s] : truth.entries)
    if (k <= 0) throw Error(ErrorCode::kInvalidArgument, "step ordinals must be positive");

  const auto cells = static_cast<std::size_t>(std::ceil(duration / resolution - 1e-9));
  auto truth_labels = label_cells(truth, cells, resolution);
  auto pred_labels = label_cells(predicted, cells, resolution);

  SegmentationScore score;
  std::size_t correct = 0, predicted_fg = 0, correct_fg = 0;
  for (std::size_t c = 0; c < cells; ++c) {
    if (truth_labels[c] == pred_labels[c]) ++correct;
    if (pred_labels[c] != 0) {
      ++predicted_fg;
      if (truth_labels[c] == pred_labels[c]) ++correct_fg;
    }
  }
  score.accuracy = cells ? static_cast<double>(correct) / static_cast<double>(cells) : 0.0;
  if (predicted_fg == 0) {
    score.precision = 0.0;
    score.precision_defined = false;
  } else {
    score.precision = static_cast<double>(correct_fg) / static_cast<double>(predicted_fg);
  }

  // Steps that cover no cell on either side at this resolution carry no
  // evidence and are left out of the macro average.
  double iou_sum = 0.0;
  for (const auto& [ordinal, span] : truth.entries) {
    std::size_t inter = 0, uni = 0;
    for (std::size_t c = 0; c < cells; ++c) {
      bool t = truth_labels[c] == ordinal;
      bool p = pred_labels[c] == ordinal;
      inter += (t && p);
      uni += (t || p);
    }
    if (uni == 0) continue;
    double iou = static_cast<double>(inter) / static_cast<double>(uni);
    score.per_step_iou[ordinal] = iou;
    iou_sum += iou;
  }
  if (score.per_step_iou.empty())
    throw Error(ErrorCode::kEmptyTruth, truth.recording_id + ": no truth step covers a cell at this resolution");
  score.mean_iou = iou_sum / static_cast<double>(score.per_step_iou.size());
  return score;
}

std::string span_maps_csv(const std::vector<StepSpanMap>& maps) {
  std::string out = "recording_id,step_ordinal,start_s,end_s\n";
  for (const auto& m : maps)
    for (const auto& [k, s] : m.entries)
      out += csv::join({m.recording_id, std::to_string(k), text::format_seconds(s.start), text::format_seconds(s.end)}) + "\n";
  return out;
}

std::vector<StepSpanMap> parse_span_maps_csv(std::string_view content) {
  auto rows = csv::parse(content);
  std::vector<StepSpanMap> maps;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r].fields;
    if (f.size() < 4) throw Error(ErrorCode::kMalformedRow, "spans row " + std::to_string(r + 1));
    try {
      if (maps.empty() || maps.back().recording_id != f[0]) maps.push_back(StepSpanMap{f[0], {}});
      maps.back().entries[std::stoi(f[1])] = TimeSpan{round_ms(std::stod(f[2])), round_ms(std::stod(f[3]))};
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kMalformedRow, "spans row " + std::to_string(r + 1));
    }
  }
  return maps;
}

}  // namespace taskdialog
