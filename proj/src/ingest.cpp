#include "taskdialog/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "taskdialog/csv.hpp"
#include "taskdialog/error.hpp"
#include "taskdialog/io.hpp"
#include "taskdialog/parallel.hpp"
#include "taskdialog/text.hpp"

namespace taskdialog {

namespace fs = std::filesystem;

double round_ms(double seconds) { return std::round(seconds * 1000.0) / 1000.0; }

std::string_view to_string(ErrorLabel label) {
  switch (label) {
    case ErrorLabel::kNormal: return "normal";
    case ErrorLabel::kOmission: return "omission";
    case ErrorLabel::kAddition: return "addition";
    case ErrorLabel::kModification: return "modification";
    case ErrorLabel::kSlip: return "slip";
    case ErrorLabel::kCorrection: return "correction";
  }
  return "normal";
}

std::optional<ErrorLabel> parse_error_label(std::string_view s) {
  static const std::map<std::string, ErrorLabel> kLabels = {
      {"normal", ErrorLabel::kNormal},
      {"omission", ErrorLabel::kOmission},
      {"addition", ErrorLabel::kAddition},
      {"modification", ErrorLabel::kModification},
      {"slip", ErrorLabel::kSlip},
      {"correction", ErrorLabel::kCorrection},
  };
  auto it = kLabels.find(text::to_lower(text::trim(s)));
  if (it == kLabels.end()) return std::nullopt;
  return it->second;
}

std::string_view to_string(SourceKind kind) {
  return kind == SourceKind::kNarrated ? "narrated" : "annotated";
}

namespace {

bool parse_int(std::string_view s, long long& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && out >= 0;
}

// Accepts [HH:]MM:SS[,.]fff with 1-3 fraction digits. Returns milliseconds.
std::optional<long long> parse_timecode(std::string_view s) {
  s = text::trim(s);
  auto sep = s.find_last_of(",.");
  std::string_view whole = s, frac;
  if (sep != std::string_view::npos) {
    whole = s.substr(0, sep);
    frac = s.substr(sep + 1);
    if (frac.empty() || frac.size() > 3) return std::nullopt;
  }
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (true) {
    auto colon = whole.find(':', pos);
    parts.push_back(whole.substr(pos, colon == std::string_view::npos ? std::string_view::npos : colon - pos));
    if (colon == std::string_view::npos) break;
    pos = colon + 1;
  }
  if (parts.size() < 2 || parts.size() > 3) return std::nullopt;
  long long h = 0, m = 0, sec = 0, ms = 0;
  std::size_t k = 0;
  if (parts.size() == 3 && !parse_int(parts[k++], h)) return std::nullopt;
  if (!parse_int(parts[k++], m) || !parse_int(parts[k++], sec)) return std::nullopt;
  if (m >= 60 || sec >= 60) return std::nullopt;
  if (!frac.empty()) {
    if (!parse_int(frac, ms)) return std::nullopt;
    for (std::size_t i = frac.size(); i < 3; ++i) ms *= 10;
  }
  return ((h * 60 + m) * 60 + sec) * 1000 + ms;
}

std::string format_timecode(double seconds, char frac_sep) {
  long long total = std::llround(seconds * 1000.0);
  long long ms = total % 1000;
  long long s = (total / 1000) % 60;
  long long m = (total / 60000) % 60;
  long long h = total / 3600000;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%02lld:%02lld:%02lld%c%03lld", h, m, s, frac_sep, ms);
  return buf;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
}

std::string strip_styling(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    char c = raw[i];
    if (c == '<') {
      auto close = raw.find('>', i);
      if (close != std::string_view::npos) {
        i = close;
        continue;
      }
    } else if (c == '{' && i + 1 < raw.size() && raw[i + 1] == '\\') {
      auto close = raw.find('}', i);
      if (close != std::string_view::npos) {
        i = close;
        continue;
      }
    }
    out += c;
  }
  replace_all(out, "&nbsp;", " ");
  replace_all(out, "&lrm;", "");
  replace_all(out, "&rlm;", "");
  replace_all(out, "&lt;", "<");
  replace_all(out, "&gt;", ">");
  replace_all(out, "&quot;", "\"");
  replace_all(out, "&#39;", "'");
  replace_all(out, "&amp;", "&");
  return out;
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

TimeSpan parse_timing_line(std::string_view line, std::size_t line_no) {
  auto arrow = line.find("-->");
  auto fail = [&] {
    return Error(ErrorCode::kMalformedTimestamp,
                 "line " + std::to_string(line_no) + ": '" + std::string(text::trim(line)) + "'");
  };
  if (arrow == std::string_view::npos) throw fail();
  auto lhs = text::trim(line.substr(0, arrow));
  auto rhs = text::trim(line.substr(arrow + 3));
  // VTT cue settings follow the end time after whitespace.
  auto ws = rhs.find_first_of(" \t");
  if (ws != std::string_view::npos) rhs = rhs.substr(0, ws);
  auto start = parse_timecode(lhs);
  auto end = parse_timecode(rhs);
  if (!start || !end || *end <= *start) throw fail();
  return {static_cast<double>(*start) / 1000.0, static_cast<double>(*end) / 1000.0};
}

std::vector<SubtitleEntry> finalize(std::vector<SubtitleEntry> entries) {
  if (entries.empty()) throw Error(ErrorCode::kEmptyTranscript, "no cues found");
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.span.start < b.span.start; });
  int idx = 1;
  for (auto& e : entries) e.index = idx++;
  return entries;
}

}  // namespace

std::vector<SubtitleEntry> parse_subtitle_file(std::string_view content, SubtitleFormat format) {
  if (content.substr(0, 3) == "\xEF\xBB\xBF") content.remove_prefix(3);
  const auto lines = text::split_lines(content);
  std::vector<SubtitleEntry> entries;
  std::size_t i = 0;

  auto skip_blank = [&] {
    while (i < lines.size() && text::trim(lines[i]).empty()) ++i;
  };

  if (format == SubtitleFormat::kVtt) {
    skip_blank();
    if (i < lines.size() && text::trim(lines[i]).substr(0, 6) == "WEBVTT") {
      // Header block runs until the first blank line.
      while (i < lines.size() && !text::trim(lines[i]).empty()) ++i;
    }
  }

  while (true) {
    skip_blank();
    if (i >= lines.size()) break;
    std::string_view first = text::trim(lines[i]);
    if (format == SubtitleFormat::kVtt &&
        (first.starts_with("NOTE") || first == "STYLE" || first == "REGION")) {
      while (i < lines.size() && !text::trim(lines[i]).empty()) ++i;
      continue;
    }
    // Optional cue number (SRT) or identifier (VTT) before the timing line.
    if (first.find("-->") == std::string_view::npos) {
      bool is_identifier = format == SubtitleFormat::kVtt || all_digits(first);
      if (!is_identifier || i + 1 >= lines.size())
        throw Error(ErrorCode::kMalformedTimestamp,
                    "line " + std::to_string(i + 1) + ": expected timing line, got '" + std::string(first) + "'");
      ++i;
    }
    TimeSpan span = parse_timing_line(lines[i], i + 1);
    ++i;
    std::string joined;
    while (i < lines.size() && !text::trim(lines[i]).empty()) {
      if (!joined.empty()) joined += ' ';
      joined += strip_styling(lines[i]);
      ++i;
    }
    std::string cue = text::collapse_spaces(joined);
    if (!cue.empty()) entries.push_back({std::move(cue), span, 0});
  }
  return finalize(std::move(entries));
}

std::string write_srt(const std::vector<SubtitleEntry>& entries) {
  std::string out;
  int idx = 1;
  for (const auto& e : entries) {
    out += std::to_string(idx++) + "\n";
    out += format_timecode(e.span.start, ',') + " --> " + format_timecode(e.span.end, ',') + "\n";
    out += e.text + "\n\n";
  }
  return out;
}

std::string write_vtt(const std::vector<SubtitleEntry>& entries) {
  std::string out = "WEBVTT\n\n";
  for (const auto& e : entries) {
    out += format_timecode(e.span.start, '.') + " --> " + format_timecode(e.span.end, '.') + "\n";
    out += e.text + "\n\n";
  }
  return out;
}

namespace {

std::optional<double> parse_seconds(std::string_view s) {
  s = text::trim(s);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return round_ms(v);
}

}  // namespace

std::vector<StepAnnotation> parse_step_annotation_file(std::string_view content) {
  if (content.substr(0, 3) == "\xEF\xBB\xBF") content.remove_prefix(3);
  auto rows = csv::parse(content);
  if (rows.empty()) return {};
  const auto& header = rows.front().fields;
  auto col = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (text::trim(header[c]) == name) return c;
    return std::nullopt;
  };
  auto c_start = col("start_s"), c_end = col("end_s"), c_desc = col("description");
  auto c_label = col("error_label");
  if (!c_start || !c_end || !c_desc)
    throw Error(ErrorCode::kMalformedRow, "row 1: header must contain start_s,end_s,description");

  std::vector<StepAnnotation> steps;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r].fields;
    const std::string where = "row " + std::to_string(r + 1) + " (line " + std::to_string(rows[r].line) + ")";
    std::size_t needed = std::max({*c_start, *c_end, *c_desc}) + 1;
    if (f.size() < needed) throw Error(ErrorCode::kMalformedRow, where + ": too few columns");
    auto start = parse_seconds(f[*c_start]);
    auto end = parse_seconds(f[*c_end]);
    if (!start || !end) throw Error(ErrorCode::kMalformedRow, where + ": unparseable time");
    if (*start < 0.0 || *end <= *start) throw Error(ErrorCode::kMalformedRow, where + ": end must follow start");
    std::string desc = text::collapse_spaces(f[*c_desc]);
    if (desc.empty()) throw Error(ErrorCode::kMalformedRow, where + ": empty description");
    StepAnnotation step{std::move(desc), {*start, *end}, std::nullopt};
    if (c_label) {
      std::string_view raw = *c_label < f.size() ? text::trim(f[*c_label]) : std::string_view{};
      if (raw.empty()) {
        step.error_label = ErrorLabel::kNormal;
      } else {
        step.error_label = parse_error_label(raw);
        if (!step.error_label)
          throw Error(ErrorCode::kUnknownErrorLabel, where + ": '" + std::string(raw) + "'");
      }
    }
    steps.push_back(std::move(step));
  }
  std::stable_sort(steps.begin(), steps.end(),
                   [](const auto& a, const auto& b) { return a.span.start < b.span.start; });
  return steps;
}

std::string write_step_annotation_file(const std::vector<StepAnnotation>& steps) {
  std::string out = "start_s,end_s,description,error_label\n";
  for (const auto& s : steps) {
    out += csv::join({text::format_seconds(s.span.start), text::format_seconds(s.span.end), s.description,
                      s.error_label ? std::string(to_string(*s.error_label)) : std::string()});
    out += '\n';
  }
  return out;
}

namespace {

bool parse_bool(std::string_view raw, bool fallback) {
  auto v = text::to_lower(text::trim(raw));
  if (v.empty()) return fallback;
  if (v == "true" || v == "1" || v == "yes" || v == "y") return true;
  if (v == "false" || v == "0" || v == "no" || v == "n") return false;
  throw Error(ErrorCode::kMalformedRow, "not a boolean: '" + std::string(raw) + "'");
}

struct ManifestRow {
  SourceRecording rec;
  fs::path subtitle_path;
  fs::path steps_path;
};

}  // namespace

std::vector<SourceRecording> load_manifest(const fs::path& path, unsigned jobs) {
  const std::string content = io::read_file(path);
  const fs::path base = path.parent_path();
  auto rows = csv::parse(content);
  if (rows.empty()) return {};
  const auto& header = rows.front().fields;
  auto col = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (text::trim(header[c]) == name) return c;
    return std::nullopt;
  };
  auto c_id = col("recording_id"), c_task = col("task"), c_dur = col("duration_s"), c_kind = col("source_kind");
  auto c_sub = col("subtitle_path"), c_steps = col("steps_path"), c_ego = col("egocentric");
  auto c_frames = col("frame_count");
  if (!c_id || !c_task || !c_dur || !c_kind)
    throw Error(ErrorCode::kMalformedRow, path.string() + ": manifest header incomplete");

  std::vector<ManifestRow> pending;
  std::set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r].fields;
    auto get = [&](std::optional<std::size_t> c) -> std::string {
      return c && *c < f.size() ? std::string(text::trim(f[*c])) : std::string();
    };
    const std::string where = path.string() + " row " + std::to_string(r + 1);
    ManifestRow row;
    row.rec.recording_id = get(c_id);
    row.rec.task = get(c_task);
    if (row.rec.recording_id.empty() || row.rec.task.empty())
      throw Error(ErrorCode::kMalformedRow, where + ": empty recording_id or task");
    if (!seen.insert(row.rec.recording_id).second)
      throw Error(ErrorCode::kDuplicateRecordingId, row.rec.recording_id);
    auto dur = parse_seconds(get(c_dur));
    if (!dur || *dur <= 0.0) throw Error(ErrorCode::kMalformedRow, where + ": bad duration_s");
    row.rec.duration = *dur;
    auto kind = text::to_lower(get(c_kind));
    if (kind == "narrated") row.rec.source_kind = SourceKind::kNarrated;
    else if (kind == "annotated") row.rec.source_kind = SourceKind::kAnnotated;
    else throw Error(ErrorCode::kMalformedRow, where + ": source_kind must be narrated|annotated");
    try {
      row.rec.egocentric = parse_bool(get(c_ego), true);
    } catch (const Error& e) {
      throw Error(ErrorCode::kMalformedRow, where + ": " + e.what());
    }
    if (auto frames = get(c_frames); !frames.empty()) {
      long long n = 0;
      if (!parse_int(frames, n)) throw Error(ErrorCode::kMalformedRow, where + ": bad frame_count");
      row.rec.frame_count = n;
    }
    if (auto p = get(c_sub); !p.empty()) row.subtitle_path = base / p;
    if (auto p = get(c_steps); !p.empty()) row.steps_path = base / p;
    if (row.rec.source_kind == SourceKind::kNarrated && row.subtitle_path.empty())
      throw Error(ErrorCode::kMalformedRow, where + ": narrated recording needs subtitle_path");
    if (row.rec.source_kind == SourceKind::kAnnotated && row.steps_path.empty())
      throw Error(ErrorCode::kMalformedRow, where + ": annotated recording needs steps_path");
    pending.push_back(std::move(row));
  }

  parallel_for(pending.size(), jobs, [&](std::size_t i) {
    auto& row = pending[i];
    auto annotate = [&](const Error& e, const fs::path& p) {
      if (e.code() == ErrorCode::kMissingFile) return Error(e.code(), p.string());
      return Error(e.code(), p.string() + ": " + e.what());
    };
    if (!row.subtitle_path.empty()) {
      try {
        auto ext = text::to_lower(row.subtitle_path.extension().string());
        auto fmt = ext == ".vtt" ? SubtitleFormat::kVtt : SubtitleFormat::kSrt;
        row.rec.subtitles = parse_subtitle_file(io::read_file(row.subtitle_path), fmt);
      } catch (const Error& e) {
        throw annotate(e, row.subtitle_path);
      }
    }
    if (!row.steps_path.empty()) {
      try {
        row.rec.steps = parse_step_annotation_file(io::read_file(row.steps_path));
      } catch (const Error& e) {
        throw annotate(e, row.steps_path);
      }
    }
  });

  std::vector<SourceRecording> out;
  out.reserve(pending.size());
  for (auto& row : pending) out.push_back(std::move(row.rec));
  return out;
}

namespace {

template <typename Item, typename SpanOf>
void check_spans(const std::vector<Item>& items, SpanOf span_of, const std::string& what, double duration,
                 ValidationReport& report) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    const TimeSpan& s = span_of(items[i]);
    const std::string name = what + " " + std::to_string(i + 1);
    if (!s.valid()) report.add("invalid span", name);
    if (s.end > duration + 1e-9)
      report.add("span exceeds duration",
                 name + " ends at " + text::format_seconds(s.end) + " > " + text::format_seconds(duration));
    if (i > 0 && s.start < span_of(items[i - 1]).start)
      report.add("non-monotone ordering", name + " starts before " + what + " " + std::to_string(i));
  }
  // Nesting: a span strictly containing another (identical spans count too).
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t j = 0; j < items.size(); ++j) {
      if (i == j) continue;
      const TimeSpan& a = span_of(items[i]);
      const TimeSpan& b = span_of(items[j]);
      if (a.contains(b) && (a != b || i < j))
        report.add("nested spans", what + " " + std::to_string(i + 1) + " contains " + what + " " +
                                       std::to_string(j + 1));
    }
  }
}

}  // namespace

ValidationReport validate_timeline(const SourceRecording& recording) {
  ValidationReport report;
  if (recording.subtitles)
    check_spans(*recording.subtitles, [](const SubtitleEntry& e) -> const TimeSpan& { return e.span; }, "subtitle",
                recording.duration, report);
  if (recording.steps)
    check_spans(*recording.steps, [](const StepAnnotation& e) -> const TimeSpan& { return e.span; }, "step",
                recording.duration, report);
  if (recording.source_kind == SourceKind::kNarrated && !recording.subtitles)
    report.add("missing subtitles", recording.recording_id);
  if (recording.source_kind == SourceKind::kAnnotated && !recording.steps)
    report.add("missing steps", recording.recording_id);
  return report;
}

ErrorPartition partition_by_errors(const std::vector<SourceRecording>& recordings) {
  ErrorPartition out;
  for (const auto& rec : recordings) {
    bool any_error = false, only_allowed = true;
    if (rec.steps) {
      for (const auto& s : *rec.steps) {
        auto label = s.error_label.value_or(ErrorLabel::kNormal);
        if (label == ErrorLabel::kNormal) continue;
        any_error = true;
        if (label != ErrorLabel::kModification && label != ErrorLabel::kCorrection) only_allowed = false;
      }
    }
    if (!any_error) out.normal.push_back(rec);
    else if (only_allowed) out.error.push_back(rec);
    else out.excluded.push_back(rec);
  }
  return out;
}

std::vector<SourceRecording> select_error_recordings(const std::vector<SourceRecording>& recordings) {
  return partition_by_errors(recordings).error;
}

}  // namespace taskdialog
