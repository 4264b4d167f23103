#include <doctest.h>

#include <filesystem>
#include <functional>
#include <random>

#include "fakes.hpp"
#include "fixture.hpp"
#include "taskdialog/error.hpp"
#include "taskdialog/instruction.hpp"
#include "taskdialog/io.hpp"

using namespace taskdialog;
using namespace taskdialog::testing;

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

std::vector<SubtitleEntry> cues(std::vector<std::string> texts) {
  std::vector<SubtitleEntry> out;
  for (std::size_t i = 0; i < texts.size(); ++i)
    out.push_back({texts[i], {static_cast<double>(i) * 5, static_cast<double>(i) * 5 + 5}, static_cast<int>(i) + 1});
  return out;
}

InstructionSet three_steps() {
  InstructionSet s;
  s.task = "tea";
  s.recording_id = "r";
  s.steps = {{1, "Boil water", {}, false, {}, {}}, {2, "Pour water", {}, false, {}, {}}, {3, "Add sugar", {}, true, {}, {}}};
  return s;
}

}  // namespace

TEST_CASE("enumerated list parsing") {
  auto steps = parse_enumerated_steps(
      "Sure! Here you go:\n"
      "1. **Fill** the kettle [cues: 2-4, 7]\n"
      "   caveat: do not overfill\n"
      "2) place the `tea bag` in the mug (cues: 3)\n"
      "   Tip: use a big mug\n"
      "Step 3: Stir\n");
  REQUIRE(steps.size() == 3);
  CHECK(steps[0].text == "Fill the kettle");
  CHECK(steps[0].cue_refs == std::vector<int>{2, 3, 4, 7});
  CHECK(steps[0].caveats == std::vector<std::string>{"do not overfill"});
  CHECK(steps[1].text == "Place the tea bag in the mug");
  CHECK(steps[1].cue_refs == std::vector<int>{3});
  CHECK(steps[1].caveats.size() == 1);
  CHECK(steps[2].text == "Stir");
  CHECK(parse_enumerated_steps("Just prose without any list.").empty());
}

TEST_CASE("action clause counting") {
  CHECK(count_action_clauses("Place the tea bag in the mug") == 1);
  CHECK(count_action_clauses("Boil water then pour into cup") == 2);
  CHECK(count_action_clauses("Fold the filter into a cone and place it in the dripper") == 2);
  CHECK(count_action_clauses("Add salt and pepper") == 1);
  CHECK(count_action_clauses("Chop the onion, add it to the pan, and stir") == 3);
}

TEST_CASE("extraction retries prose once, then fails") {
  FakeBackend backend([](const PromptRequest&) { return std::string("I would start by boiling some water."); });
  LlmContext ctx{backend};
  CHECK(code_of([&] { extract_from_narration(cues({"boil water", "pour it"}), "tea", "r", ctx); }) ==
        ErrorCode::kUnparseableCompletion);
  CHECK(backend.calls() == 2);
  auto reqs = backend.requests();
  CHECK(reqs[0].user_text != reqs[1].user_text);
  CHECK(reqs[1].user_text.find("could not be used") != std::string::npos);
}

TEST_CASE("extraction builds refs, caveats and provisional spans") {
  FakeBackend backend([](const PromptRequest& r) {
    CHECK(r.temperature == doctest::Approx(kGenerationTemperature));
    return std::string("1. Boil the water [cues: 1]\n   caveat: use fresh water\n2. Pour the water [cues: 2, 9]\n");
  });
  LlmContext ctx{backend};
  auto set = extract_from_narration(cues({"boil water", "pour it"}), "tea", "r", ctx);
  REQUIRE(set.steps.size() == 2);
  CHECK(set.provenance == Provenance::kNarrationLlm);
  CHECK(set.steps[0].caveats == std::vector<std::string>{"use fresh water"});
  CHECK(set.steps[1].source_refs == std::vector<int>{2});  // cue 9 does not exist
  REQUIRE(set.steps[0].span);
  CHECK(*set.steps[0].span == TimeSpan{0, 5});
  CHECK(validate_instruction_set(set).ok());
  CHECK(backend.calls() == 1);
}

TEST_CASE("single-cue compound narration yields two steps (recorded cassette)") {
  auto cassette = std::make_shared<Cassette>(Cassette::load(fixture::cassette("single_cue")));
  ReplayBackend replay(cassette);
  LlmContext ctx{replay, TemplateRegistry::builtin(), std::string(fixture::kGeneratorModel)};
  auto subs = parse_subtitle_file(io::read_file(fixture::fixtures_dir() / "recordings" / "single_cue.srt"),
                                  SubtitleFormat::kSrt);
  REQUIRE(subs.size() == 1);
  auto set = extract_from_narration(subs, "make a hot drink", "single_cue", ctx);
  CHECK(set.steps.size() >= 2);
  for (const auto& s : set.steps) CHECK(count_action_clauses(s.text) == 1);
}

TEST_CASE("normalization merges consecutive duplicates") {
  FakeBackend backend([](const PromptRequest&) { return std::string("1. Pour the water.\n2. Stir the mixture.\n"); });
  LlmContext ctx{backend};
  std::vector<StepAnnotation> ann{{"pour water", {0, 5}, ErrorLabel::kNormal},
                                  {"pour water", {5, 9}, ErrorLabel::kNormal},
                                  {"stir", {9, 12}, ErrorLabel::kNormal}};
  auto set = normalize_annotated_steps(ann, "t", "r", ctx);
  REQUIRE(set.steps.size() == 2);
  CHECK(*set.steps[0].span == TimeSpan{0, 9});
  CHECK(set.steps[0].source_refs == std::vector<int>{1, 2});
  CHECK(set.steps[0].text == "Pour the water.");
  CHECK(set.provenance == Provenance::kAnnotationMerge);
  CHECK(backend.calls() == 1);
}

TEST_CASE("normalization marks corrections and rejects bad input") {
  FakeBackend backend([](const PromptRequest&) { return std::string("1. Add honey.\n2. Scoop out the sugar.\n"); });
  LlmContext ctx{backend};
  std::vector<StepAnnotation> ann{{"add honey", {0, 5}, ErrorLabel::kNormal},
                                  {"scoop out sugar", {5, 9}, ErrorLabel::kCorrection}};
  auto set = normalize_annotated_steps(ann, "t", "r", ctx);
  CHECK_FALSE(set.steps[0].is_correction);
  CHECK(set.steps[1].is_correction);
  CHECK(code_of([&] { normalize_annotated_steps({}, "t", "r", ctx); }) == ErrorCode::kPreconditionViolation);

  FakeBackend short_reply([](const PromptRequest&) { return std::string("1. Only one line.\n"); });
  LlmContext bad{short_reply};
  CHECK(code_of([&] { normalize_annotated_steps(ann, "t", "r", bad); }) == ErrorCode::kUnparseableCompletion);
}

TEST_CASE("merged spans preserve the union of member spans") {
  FakeBackend backend([](const PromptRequest& r) {
    // Echo the numbered labels back unchanged.
    auto start = r.user_text.find("Action labels:\n") + 15;
    auto end = r.user_text.find("\n\n", start);
    return r.user_text.substr(start, end - start);
  });
  LlmContext ctx{backend};
  std::mt19937 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<StepAnnotation> ann;
    double t = 0;
    int n = 2 + static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) {
      double len = 1 + rng() % 5;
      ann.push_back({std::string(1, static_cast<char>('a' + rng() % 3)) + " step", {t, t + len}, ErrorLabel::kNormal});
      t += len;
    }
    InstructionSet set;
    try {
      set = normalize_annotated_steps(ann, "t", "r", ctx);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kEmptySteps);
      continue;
    }
    double covered = 0;
    for (const auto& s : set.steps) covered += s.span->length();
    CHECK(covered == doctest::Approx(t));
    for (std::size_t i = 1; i < set.steps.size(); ++i) CHECK(set.steps[i - 1].span->start <= set.steps[i].span->start);
    std::vector<int> refs;
    for (const auto& s : set.steps) refs.insert(refs.end(), s.source_refs.begin(), s.source_refs.end());
    CHECK(refs.size() == ann.size());
  }
}

TEST_CASE("cluster filters generic steps") {
  FakeBackend backend([](const PromptRequest&) { return std::string("1: no\n"); });
  LlmContext ctx{backend};
  std::vector<StepAnnotation> ann{{"open drawer", {0, 2}, ErrorLabel::kNormal},
                                  {"take knife", {2, 4}, ErrorLabel::kNormal},
                                  {"close drawer", {4, 5}, ErrorLabel::kNormal}};
  auto set = cluster_and_filter_steps(ann, default_stoplist(), "t", "r", ctx);
  REQUIRE(set.steps.size() == 1);
  CHECK(set.steps[0].text == "Take knife");
  CHECK(backend.calls() == 0);

  std::vector<StepAnnotation> generic{{"open drawer", {0, 2}, ErrorLabel::kNormal},
                                      {"wash hands", {2, 4}, ErrorLabel::kNormal}};
  CHECK(code_of([&] { cluster_and_filter_steps(generic, default_stoplist(), "t", "r", ctx); }) ==
        ErrorCode::kAllStepsFiltered);
}

TEST_CASE("cluster grouping follows the adjacency answers") {
  std::vector<StepAnnotation> ann{{"crack eggs", {0, 3}, ErrorLabel::kNormal},
                                  {"whisk eggs", {3, 8}, ErrorLabel::kNormal},
                                  {"heat pan", {8, 10}, ErrorLabel::kNormal},
                                  {"pour eggs", {10, 12}, ErrorLabel::kNormal}};
  FakeBackend all_no([](const PromptRequest&) { return std::string("1: no\n2: no\n3: no\n"); });
  LlmContext ctx_no{all_no};
  CHECK(cluster_and_filter_steps(ann, default_stoplist(), "t", "r", ctx_no).steps.size() == ann.size());

  FakeBackend some_yes([](const PromptRequest&) { return std::string("1: yes\n2: no\n3: no\n"); });
  LlmContext ctx{some_yes};
  auto set = cluster_and_filter_steps(ann, default_stoplist(), "t", "r", ctx);
  REQUIRE(set.steps.size() == 3);
  CHECK(set.steps[0].text == "Whisk eggs");
  CHECK(*set.steps[0].span == TimeSpan{0, 8});
  CHECK(set.steps[0].source_refs == std::vector<int>{1, 2});
  CHECK(set.provenance == Provenance::kAnnotationCluster);
  CHECK(some_yes.calls() == 1);
}

TEST_CASE("mark_corrections") {
  auto set = three_steps();
  auto text = mark_corrections(set, "[FIX]");
  CHECK(text == "1. Boil water\n2. Pour water\n[FIX] 3. Add sugar\n");
  set.steps[2].is_correction = false;
  CHECK(mark_corrections(set, "[FIX]").find("[FIX]") == std::string::npos);
  set.steps[0].text = "Boil [FIX] water";
  CHECK(code_of([&] { mark_corrections(set, "[FIX]"); }) == ErrorCode::kTokenCollision);
}

TEST_CASE("instruction set validation") {
  auto set = three_steps();
  CHECK(validate_instruction_set(set).ok());
  set.steps[1].ordinal = 5;
  CHECK(validate_instruction_set(set).contains("ordinal gap"));
  set = three_steps();
  set.steps.resize(1);
  CHECK(validate_instruction_set(set).contains("too few steps"));
  set = three_steps();
  set.steps[0].text = "  ";
  CHECK(validate_instruction_set(set).contains("empty step"));
}

TEST_CASE("stoplist file") {
  auto path = std::filesystem::temp_directory_path() / "taskdialog_stoplist.txt";
  io::write_file_atomic(path, "# generic\nopen drawer\n\n  wipe counter  \n");
  CHECK(load_stoplist(path) == std::vector<std::string>{"open drawer", "wipe counter"});
  std::filesystem::remove(path);
  CHECK(default_stoplist().size() >= 20);
}
