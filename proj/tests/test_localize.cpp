#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "taskdialog/error.hpp"
#include "taskdialog/localize.hpp"

using namespace taskdialog;

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

InstructionSet with_refs(std::vector<std::vector<int>> refs) {
  InstructionSet set;
  set.task = "t";
  set.recording_id = "r";
  for (std::size_t i = 0; i < refs.size(); ++i) {
    InstructionStep s;
    s.ordinal = static_cast<int>(i) + 1;
    s.text = "step";
    s.source_refs = refs[i];
    set.steps.push_back(s);
  }
  return set;
}

StepSpanMap span_map(std::map<int, TimeSpan> entries) { return StepSpanMap{"r", std::move(entries)}; }

// Independent per-cell oracle: each cell centre is tested against every span.
struct Oracle {
  double iou, precision, accuracy;
};

Oracle oracle_score(const StepSpanMap& pred, const StepSpanMap& truth, double duration, double res) {
  int cells = static_cast<int>(std::llround(std::ceil(duration / res - 1e-9)));
  auto label = [&](const StepSpanMap& m, double centre) {
    int best = 0;
    double best_start = -1;
    for (const auto& [k, s] : m.entries)
      if (s.start <= centre && centre < s.end && s.start >= best_start) {
        best = k;
        best_start = s.start;
      }
    return best;
  };
  int correct = 0, fg = 0, fg_ok = 0;
  std::map<int, std::pair<int, int>> iu;
  for (int c = 0; c < cells; ++c) {
    double centre = (c + 0.5) * res;
    int t = label(truth, centre), p = label(pred, centre);
    correct += t == p;
    if (p) {
      ++fg;
      fg_ok += t == p;
    }
    for (const auto& [k, s] : truth.entries) {
      iu[k].first += (t == k && p == k);
      iu[k].second += (t == k || p == k);
    }
  }
  double sum = 0;
  int counted = 0;
  for (const auto& [k, v] : iu)
    if (v.second) {
      sum += static_cast<double>(v.first) / v.second;
      ++counted;
    }
  return {counted ? sum / counted : -1.0, fg ? static_cast<double>(fg_ok) / fg : 0.0,
          static_cast<double>(correct) / cells};
}

// Consecutive non-overlapping spans with integer or fractional edges.
StepSpanMap random_map(std::mt19937& rng, int steps, double duration, bool integral) {
  std::uniform_real_distribution<double> u(0.0, duration);
  std::vector<double> cuts;
  for (int i = 0; i < 2 * steps; ++i) cuts.push_back(integral ? std::floor(u(rng)) : u(rng));
  std::sort(cuts.begin(), cuts.end());
  StepSpanMap m{"r", {}};
  for (int k = 0; k < steps; ++k) {
    double a = cuts[2 * k], b = cuts[2 * k + 1];
    if (b <= a) b = a + (integral ? 1.0 : 0.25);
    m.entries[k + 1] = {a, std::min(b, duration)};
    if (m.entries[k + 1].end <= a) m.entries.erase(k + 1);
  }
  return m;
}

}  // namespace

TEST_CASE("direct localization aggregates annotation spans") {
  std::vector<StepAnnotation> ann{{"a", {0.0, 2.0}, {}}, {"b", {2.0, 5.0}, {}}, {"c", {5.0, 9.0}, {}}};
  auto map = localize_direct(with_refs({{1}, {2, 3}}), ann);
  CHECK(map.entries.at(1) == TimeSpan{0.0, 2.0});
  CHECK(map.entries.at(2) == TimeSpan{2.0, 9.0});
  CHECK(validate_span_map(map, 9.0).ok());
  CHECK(code_of([&] { localize_direct(with_refs({{1}, {4}}), ann); }) == ErrorCode::kDanglingSourceRef);
}

TEST_CASE("property: direct localization preserves annotated time") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<StepAnnotation> ann;
    double t = 0;
    int n = 2 + static_cast<int>(rng() % 10);
    for (int i = 0; i < n; ++i) {
      double len = 0.5 + (rng() % 40) / 4.0;
      ann.push_back({"x", {t, t + len}, {}});
      t += len;
    }
    // Partition the annotations into consecutive groups.
    std::vector<std::vector<int>> refs{{1}};
    for (int i = 2; i <= n; ++i) {
      if (rng() % 2) refs.push_back({});
      refs.back().push_back(i);
    }
    auto map = localize_direct(with_refs(refs), ann);
    double covered = 0;
    for (const auto& [k, s] : map.entries) covered += s.length();
    CHECK(covered == doctest::Approx(t).epsilon(1e-12));
    CHECK(validate_span_map(map, t).ok());
  }
}

TEST_CASE("subtitle localization and gap filling") {
  std::vector<SubtitleEntry> subs;
  for (int i = 0; i < 6; ++i) subs.push_back({"cue", {i * 10.0, i * 10.0 + 8.0}, i + 1});
  auto map = localize_from_subtitles(with_refs({{1, 2}, {}, {5, 4}}), subs);
  CHECK(map.entries.at(1) == TimeSpan{0.0, 18.0});
  CHECK(map.entries.at(2) == TimeSpan{18.0, 30.0});
  CHECK(map.entries.at(3) == TimeSpan{30.0, 48.0});

  // No room between neighbours: reuse the previous span.
  auto tight = localize_from_subtitles(with_refs({{1, 3}, {}, {3}}), subs);
  CHECK(tight.entries.at(2) == tight.entries.at(1));

  // Trailing ref-less step runs to the end of the transcript.
  auto tail = localize_from_subtitles(with_refs({{1}, {2}, {}}), subs);
  CHECK(tail.entries.at(3) == TimeSpan{18.0, 58.0});

  CHECK(code_of([&] { localize_from_subtitles(with_refs({{}, {}}), subs); }) == ErrorCode::kNoLocalizableSteps);
  CHECK(code_of([&] { localize_from_subtitles(with_refs({{1}, {7}}), subs); }) == ErrorCode::kDanglingSourceRef);
}

TEST_CASE("clip attachment") {
  Conversation conv;
  conv.task = "t";
  auto add = [&](TurnKind k, std::optional<int> s) {
    DialogueTurn t;
    t.index = static_cast<int>(conv.turns.size()) + 1;
    t.kind = k;
    t.step_ordinal = s;
    t.user_text = t.expert_text = "x";
    conv.turns.push_back(t);
  };
  add(TurnKind::kTaskInit, {});
  add(TurnKind::kStep, 1);
  add(TurnKind::kClarification, 1);
  add(TurnKind::kStep, 2);
  add(TurnKind::kErrorReport, 2);
  add(TurnKind::kStep, 3);
  add(TurnKind::kClosing, {});

  auto map = span_map({{1, {4, 10}}, {2, {10, 20}}, {3, {20, 25}}});
  auto out = attach_clips(conv, map, "abc");
  CHECK(out.turns[0].span == TimeSpan{0, 4});
  CHECK(out.turns[1].span == TimeSpan{4, 10});
  CHECK(out.turns[2].span == TimeSpan{4, 10});
  CHECK(out.turns[4].span == TimeSpan{10, 20});
  CHECK_FALSE(out.turns[6].span);
  CHECK(out.turns[1].clip_path == "clips/abc_t002.mp4");
  CHECK(out.turns[6].clip_path.empty());

  map.entries[1].start = 0;
  CHECK_FALSE(attach_clips(conv, map).turns[0].span);

  map.entries.erase(2);
  CHECK(code_of([&] { attach_clips(conv, map); }) == ErrorCode::kMissingSpan);
}

TEST_CASE("cut-list") {
  CHECK(cutlist_csv({}) == "recording_id,start_s,end_s,clip_filename\n");
  Session s;
  s.session_id = "sid";
  s.source_recording_id = "rec";
  for (int i = 1; i <= 6; ++i) {
    DialogueTurn t;
    t.index = i;
    if (i < 6) {
      t.span = TimeSpan{i * 1.0, i * 1.0 + 1.0};
      t.clip_path = "clips/" + clip_filename("sid", i);
    }
    s.conversation.turns.push_back(t);
  }
  auto csv1 = cutlist_csv({s});
  CHECK(std::count(csv1.begin(), csv1.end(), '\n') == 6);
  CHECK(csv1.find("rec,1.000,2.000,sid_t001.mp4") != std::string::npos);
  CHECK(cutlist_csv({s}) == csv1);
}

TEST_CASE("segmentation scoring: constructed case") {
  auto truth = span_map({{1, {0, 10}}});
  auto pred = span_map({{1, {5, 15}}});
  auto score = score_segmentation(pred, truth, 20.0, 1.0);
  CHECK(std::abs(score.mean_iou - 1.0 / 3.0) < 1e-9);
  CHECK(std::abs(score.accuracy - 0.5) < 1e-9);
  CHECK(std::abs(score.precision - 0.5) < 1e-9);
  auto o = oracle_score(pred, truth, 20.0, 1.0);
  CHECK(std::abs(o.iou - 1.0 / 3.0) < 1e-12);
  CHECK(std::abs(o.accuracy - 0.5) < 1e-12);

  auto perfect = score_segmentation(truth, truth, 20.0, 1.0);
  CHECK(perfect.mean_iou == 1.0);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.accuracy == 1.0);

  auto none = score_segmentation(span_map({}), truth, 20.0);
  CHECK(none.mean_iou == 0.0);
  CHECK(none.precision == 0.0);
  CHECK_FALSE(none.precision_defined);

  CHECK(code_of([&] { score_segmentation(pred, span_map({}), 20.0); }) == ErrorCode::kEmptyTruth);
  // A truth step narrower than a cell never covers a cell centre.
  CHECK(code_of([&] { score_segmentation(span_map({}), span_map({{1, {0.6, 0.9}}}), 20.0); }) ==
        ErrorCode::kEmptyTruth);
  CHECK(code_of([&] { score_segmentation(pred, truth, 20.0, 0.0); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("property: segmentation scoring matches the per-cell oracle") {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    double duration = 10 + rng() % 90;
    double res = (rng() % 2) ? 1.0 : 0.5;
    auto truth = random_map(rng, 1 + static_cast<int>(rng() % 6), duration, false);
    if (truth.entries.empty()) continue;
    auto pred = random_map(rng, 1 + static_cast<int>(rng() % 6), duration, false);
    auto o = oracle_score(pred, truth, duration, res);
    if (o.iou < 0) {
      CHECK(code_of([&] { score_segmentation(pred, truth, duration, res); }) == ErrorCode::kEmptyTruth);
      continue;
    }
    auto s = score_segmentation(pred, truth, duration, res);
    CHECK(std::abs(s.mean_iou - o.iou) < 1e-12);
    CHECK(std::abs(s.precision - o.precision) < 1e-12);
    CHECK(std::abs(s.accuracy - o.accuracy) < 1e-12);
    for (double v : {s.mean_iou, s.precision, s.accuracy}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    auto self = score_segmentation(truth, truth, duration, res);
    CHECK(self.mean_iou == 1.0);
    CHECK(self.precision == 1.0);
    CHECK(self.accuracy == 1.0);
  }
}

TEST_CASE("property: translation invariance") {
  std::mt19937 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const double duration = 60;
    const double shift = 1 + rng() % 10;
    auto truth = random_map(rng, 1 + static_cast<int>(rng() % 5), duration - shift, true);
    auto pred = random_map(rng, 1 + static_cast<int>(rng() % 5), duration - shift, true);
    if (truth.entries.empty()) continue;
    auto moved = [&](StepSpanMap m) {
      for (auto& [k, s] : m.entries) s = {s.start + shift, s.end + shift};
      return m;
    };
    auto a = score_segmentation(pred, truth, duration);
    auto b = score_segmentation(moved(pred), moved(truth), duration);
    CHECK(a.mean_iou == doctest::Approx(b.mean_iou).epsilon(1e-12));
    CHECK(a.precision == doctest::Approx(b.precision).epsilon(1e-12));
    CHECK(a.accuracy == doctest::Approx(b.accuracy).epsilon(1e-12));
  }
}

TEST_CASE("property: halving the resolution moves IoU by at most the boundary cells") {
  std::mt19937 rng(29);
  for (int trial = 0; trial < 100; ++trial) {
    const double duration = 40;
    auto truth = random_map(rng, 1 + static_cast<int>(rng() % 4), duration, false);
    auto pred = random_map(rng, 1 + static_cast<int>(rng() % 4), duration, false);
    if (truth.entries.empty()) continue;
    const double res = 1.0;
    if (oracle_score(pred, truth, duration, res).iou < 0) continue;
    auto coarse = score_segmentation(pred, truth, duration, res);
    auto fine = score_segmentation(pred, truth, duration, res / 2);
    // Each of the (at most four) span edges touching a step can mislabel one
    // coarse cell; weigh that against the step's union length.
    double bound = 0;
    for (const auto& [k, t] : truth.entries) {
      double uni = t.length();
      if (auto it = pred.entries.find(k); it != pred.entries.end()) uni = std::max(uni, it->second.length());
      bound = std::max(bound, std::min(1.0, 4.0 * res / std::max(uni - 4.0 * res, res)));
    }
    CHECK(std::abs(coarse.mean_iou - fine.mean_iou) <= bound + 1e-12);
  }
}

TEST_CASE("span map csv round-trip") {
  std::vector<StepSpanMap> maps{span_map({{1, {0, 1.5}}, {2, {1.5, 3}}}), StepSpanMap{"q", {{1, {2, 4}}}}};
  CHECK(parse_span_maps_csv(span_maps_csv(maps)) == maps);
  CHECK(code_of([] { parse_span_maps_csv("recording_id,step_ordinal,start_s,end_s\nr,1,x,2\n"); }) ==
        ErrorCode::kMalformedRow);
}
