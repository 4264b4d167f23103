#include <doctest.h>

#include <functional>

#include <filesystem>

#include "taskdialog/error.hpp"
#include "taskdialog/ingest.hpp"
#include "taskdialog/io.hpp"

using namespace taskdialog;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kInvalidArgument;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("taskdialog_ingest_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("srt cue with hours parses to seconds") {
  auto cues = parse_subtitle_file("1\n00:01:02,500 --> 00:01:05,000\nhello\n", SubtitleFormat::kSrt);
  REQUIRE(cues.size() == 1);
  CHECK(cues[0].span.start == 62.5);
  CHECK(cues[0].span.end == 65.0);
  CHECK(cues[0].index == 1);
}

TEST_CASE("vtt without hours, cue settings and styling tags") {
  auto cues = parse_subtitle_file(
      "\xEF\xBB\xBFWEBVTT\n\nNOTE a comment\n\nid-1\n00:02.000 --> 00:08.000 align:start\n<v Bob>Hello <b>there</b></v> &amp; more\nsecond line\n",
      SubtitleFormat::kVtt);
  REQUIRE(cues.size() == 1);
  CHECK(cues[0].span.start == 2.0);
  CHECK(cues[0].text == "Hello there & more second line");
}

TEST_CASE("end before start is a malformed timestamp") {
  CHECK(code_of([] { parse_subtitle_file("1\n00:00:05,000 --> 00:00:04,000\nx\n", SubtitleFormat::kSrt); }) ==
        ErrorCode::kMalformedTimestamp);
  CHECK(code_of([] { parse_subtitle_file("1\n00:00:xx,000 --> 00:00:04,000\nx\n", SubtitleFormat::kSrt); }) ==
        ErrorCode::kMalformedTimestamp);
}

TEST_CASE("empty transcript") {
  CHECK(code_of([] { parse_subtitle_file("", SubtitleFormat::kSrt); }) == ErrorCode::kEmptyTranscript);
  CHECK(code_of([] { parse_subtitle_file("WEBVTT\n\n", SubtitleFormat::kVtt); }) == ErrorCode::kEmptyTranscript);
}

TEST_CASE("out of order cues are sorted and renumbered") {
  auto cues = parse_subtitle_file(
      "1\n00:00:10,000 --> 00:00:12,000\nlater\n\n2\n00:00:01,000 --> 00:00:02,000\nearlier\n", SubtitleFormat::kSrt);
  REQUIRE(cues.size() == 2);
  CHECK(cues[0].text == "earlier");
  CHECK(cues[0].index == 1);
  CHECK(cues[1].index == 2);
}

TEST_CASE("subtitle writers round-trip at millisecond precision") {
  std::vector<SubtitleEntry> cues{{"first cue", {0.001, 1.234}, 1}, {"second, with comma", {61.5, 3601.999}, 2}};
  CHECK(parse_subtitle_file(write_srt(cues), SubtitleFormat::kSrt) == cues);
  CHECK(parse_subtitle_file(write_vtt(cues), SubtitleFormat::kVtt) == cues);
}

TEST_CASE("step annotation csv") {
  auto steps = parse_step_annotation_file(
      "start_s,end_s,description,error_label\n5,9,stir,\n0,5, pour water ,correction\n");
  REQUIRE(steps.size() == 2);
  CHECK(steps[0].description == "pour water");
  CHECK(steps[0].error_label == ErrorLabel::kCorrection);
  CHECK(steps[1].error_label == ErrorLabel::kNormal);
  CHECK(parse_step_annotation_file(write_step_annotation_file(steps)) == steps);

  CHECK(code_of([] { parse_step_annotation_file("start_s,end_s,description,error_label\n0,1,x,typo\n"); }) ==
        ErrorCode::kUnknownErrorLabel);
  CHECK(code_of([] { parse_step_annotation_file("start_s,end_s,description\n0,abc,x\n"); }) ==
        ErrorCode::kMalformedRow);
  CHECK(code_of([] { parse_step_annotation_file("start,end\n0,1\n"); }) == ErrorCode::kMalformedRow);
}

TEST_CASE("annotation without label column leaves the label unset") {
  auto steps = parse_step_annotation_file("start_s,end_s,description\n0,1,x\n");
  REQUIRE(steps.size() == 1);
  CHECK_FALSE(steps[0].error_label.has_value());
}

TEST_CASE("manifest loading resolves paths and reports problems") {
  auto dir = scratch("manifest");
  io::write_file_atomic(dir / "a.srt", "1\n00:00:00,000 --> 00:00:02,000\nhi\n");
  io::write_file_atomic(dir / "b.csv", "start_s,end_s,description\n0,1,x\n1,2,y\n");
  io::write_file_atomic(dir / "m.csv",
                        "recording_id,task,duration_s,source_kind,subtitle_path,steps_path,egocentric\n"
                        "r1,tea,10,narrated,a.srt,,true\n"
                        "r2,tea,10,annotated,,b.csv,false\n");
  auto recs = load_manifest(dir / "m.csv", 2);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].subtitles->size() == 1);
  CHECK(recs[1].steps->size() == 2);
  CHECK_FALSE(recs[1].egocentric);

  io::write_file_atomic(dir / "dup.csv",
                        "recording_id,task,duration_s,source_kind,subtitle_path,steps_path,egocentric\n"
                        "r1,tea,10,narrated,a.srt,,true\nr1,tea,10,narrated,a.srt,,true\n");
  CHECK(code_of([&] { load_manifest(dir / "dup.csv"); }) == ErrorCode::kDuplicateRecordingId);

  io::write_file_atomic(dir / "missing.csv",
                        "recording_id,task,duration_s,source_kind,subtitle_path,steps_path,egocentric\n"
                        "r1,tea,10,narrated,nope.srt,,true\n");
  try {
    load_manifest(dir / "missing.csv");
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMissingFile);
    CHECK(std::string(e.what()).find("nope.srt") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("timeline validation") {
  SourceRecording rec;
  rec.recording_id = "r";
  rec.duration = 10;
  rec.source_kind = SourceKind::kAnnotated;
  rec.steps = std::vector<StepAnnotation>{{"a", {0, 4}, ErrorLabel::kNormal}, {"b", {4, 9}, ErrorLabel::kNormal}};
  CHECK(validate_timeline(rec).ok());

  rec.steps->push_back({"c", {9, 12}, ErrorLabel::kNormal});
  CHECK(validate_timeline(rec).contains("span exceeds duration"));

  rec.steps = std::vector<StepAnnotation>{{"a", {0, 8}, ErrorLabel::kNormal}, {"b", {2, 5}, ErrorLabel::kNormal}};
  CHECK(validate_timeline(rec).contains("nested spans"));
}

TEST_CASE("error partition") {
  auto make = [](std::string id, std::vector<ErrorLabel> labels) {
    SourceRecording r;
    r.recording_id = std::move(id);
    r.source_kind = SourceKind::kAnnotated;
    r.duration = 100;
    std::vector<StepAnnotation> steps;
    double t = 0;
    for (auto l : labels) {
      steps.push_back({"s", {t, t + 1}, l});
      t += 1;
    }
    r.steps = steps;
    return r;
  };
  std::vector<SourceRecording> recs{make("normal", {ErrorLabel::kNormal, ErrorLabel::kNormal}),
                                    make("fixable", {ErrorLabel::kNormal, ErrorLabel::kModification}),
                                    make("corrected", {ErrorLabel::kCorrection, ErrorLabel::kNormal}),
                                    make("omitted", {ErrorLabel::kOmission, ErrorLabel::kCorrection})};
  auto p = partition_by_errors(recs);
  REQUIRE(p.normal.size() == 1);
  REQUIRE(p.error.size() == 2);
  REQUIRE(p.excluded.size() == 1);
  CHECK(p.excluded[0].recording_id == "omitted");
  CHECK(select_error_recordings(recs).size() == 2);
}
