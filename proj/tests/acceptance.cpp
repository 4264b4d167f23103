// Prints one line per acceptance criterion and exits non-zero when any
// checkable criterion fails.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <string>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "corpus.hpp"
#include "fixture.hpp"
#include "oracles.hpp"
#include "taskdialog/error.hpp"
#include "taskdialog/eval.hpp"
#include "taskdialog/io.hpp"
#include "taskdialog/localize.hpp"
#include "taskdialog/pipeline.hpp"
#include "taskdialog/text.hpp"

using namespace taskdialog;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void print(int n, const std::string& name, const Outcome& o) {
  std::printf("criterion %d [%s] %s: %s\n", n, o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
  if (!o.pass) ++failures;
}

Outcome guarded(const std::function<Outcome()>& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

fs::path work_dir() {
  auto dir = fs::temp_directory_path() / ("taskdialog_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Outcome metric_oracles() {
  auto start = Clock::now();
  std::mt19937 rng(20240611);
  const int pairs = 200;
  double worst = 0;
  std::vector<std::string> cands, refs;
  std::vector<oracle::Tokens> ct, rt;
  for (int i = 0; i < pairs; ++i) {
    auto c = oracle::random_sentence(rng, 12, 3 + rng() % 6);
    auto r = oracle::random_sentence(rng, 12, 3 + rng() % 6);
    auto cw = oracle::words(c), rw = oracle::words(r);
    auto diff = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };
    diff(bleu({c}, {r}), oracle::corpus_bleu({cw}, {rw}));
    diff(sentence_bleu(c, r), oracle::sentence_bleu(cw, rw));
    for (int n : {1, 2}) {
      auto g = rouge_n(c, r, n);
      auto w = oracle::rouge_n(cw, rw, static_cast<std::size_t>(n));
      diff(g.precision, w.p);
      diff(g.recall, w.r);
      diff(g.f1, w.f);
    }
    auto g = rouge_l(c, r);
    auto w = oracle::rouge_l(cw, rw);
    diff(g.precision, w.p);
    diff(g.recall, w.r);
    diff(g.f1, w.f);
    cands.push_back(c);
    refs.push_back(r);
    ct.push_back(cw);
    rt.push_back(rw);
  }
  worst = std::max(worst, std::abs(bleu(cands, refs) - oracle::corpus_bleu(ct, rt)));
  double secs = std::chrono::duration<double>(Clock::now() - start).count();
  return {worst <= 1e-9 && secs < 5.0,
          std::to_string(pairs) + " random pairs, max |diff| " + fmt("%.3g", worst) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome identity_and_zero() {
  const std::string s = "Now pour the hot water over the tea bag";
  const std::string d = "Loosen each lug nut with a wrench";
  for (const auto& w : text::metric_tokens(d))
    for (const auto& v : text::metric_tokens(s))
      if (w == v) return {false, "zero-case pair shares the word '" + w + "'"};
  bool same = bleu({s}, {s}) == 1.0 && rouge_n(s, s, 1).f1 == 1.0 && rouge_n(s, s, 2).f1 == 1.0 && rouge_l(s, s).f1 == 1.0;
  bool zero = bleu({s}, {d}) == 0.0 && rouge_n(s, d, 1).f1 == 0.0 && rouge_n(s, d, 2).f1 == 0.0 && rouge_l(s, d).f1 == 0.0;
  return {same && zero, std::string("identical -> ") + (same ? "all 1.0" : "not all 1.0") + ", disjoint -> " +
                            (zero ? "all 0.0" : "not all 0.0")};
}

Outcome segmentation() {
  StepSpanMap truth{"r", {{1, {0, 10}}}}, pred{"r", {{1, {5, 15}}}};
  auto s = score_segmentation(pred, truth, 20.0, 1.0);
  auto p = score_segmentation(truth, truth, 20.0, 1.0);
  bool ok = std::abs(s.mean_iou - 1.0 / 3.0) <= 1e-9 && std::abs(s.accuracy - 0.5) <= 1e-9 && p.mean_iou == 1.0 &&
            p.precision == 1.0 && p.accuracy == 1.0;
  return {ok, "IoU " + fmt("%.12f", s.mean_iou) + ", accuracy " + fmt("%.12f", s.accuracy) + ", perfect (" +
                  fmt("%g", p.mean_iou) + "," + fmt("%g", p.precision) + "," + fmt("%g", p.accuracy) + ")"};
}

Outcome split_reproduction() {
  auto sessions = fixture::sessions_for(fixture::full_scale_strata());
  auto t = stratified_split(sessions, {0.7, 0.1, 0.2}, fixture::kSeed).totals();
  bool ok = sessions.size() == 507 && t[0] == 355 && t[1] == 44 && t[2] == 108;
  return {ok, std::to_string(sessions.size()) + " sessions -> " + std::to_string(t[0]) + "/" + std::to_string(t[1]) +
                  "/" + std::to_string(t[2])};
}

struct FixtureRun {
  fs::path dataset;
  std::vector<Session> sessions;
};

FixtureRun run_fixture(const fs::path& dir) {
  Pipeline p(fixture::pipeline_config(fixture::fixtures_dir(), dir), fixture::replay("pipeline"));
  fixture::run_all_stages(p);
  return {dir / "dataset.jsonl", read_dataset(dir / "dataset.jsonl")};
}

Outcome replay_determinism(const fs::path& work, FixtureRun& kept) {
  auto start = Clock::now();
  auto a = run_fixture(work / "run_a");
  auto b = run_fixture(work / "run_b");
  double secs = std::chrono::duration<double>(Clock::now() - start).count();
  bool identical = io::read_file(a.dataset) == io::read_file(b.dataset);
  std::size_t invalid = 0, bijection_broken = 0;
  for (const auto& s : a.sessions) {
    if (!validate(s.conversation, s.instruction_set).ok()) ++invalid;
    std::multiset<int> covered;
    for (const auto& t : s.conversation.turns)
      if (t.kind == TurnKind::kStep && t.step_ordinal) covered.insert(*t.step_ordinal);
    bool bij = covered.size() == s.instruction_set.steps.size();
    for (const auto& step : s.instruction_set.steps) bij = bij && covered.count(step.ordinal) == 1;
    if (!bij) ++bijection_broken;
  }
  kept = a;
  bool ok = identical && invalid == 0 && bijection_broken == 0 && !a.sessions.empty() && secs < 30.0;
  return {ok, std::to_string(a.sessions.size()) + " sessions, datasets " + (identical ? "byte-identical" : "DIFFER") +
                  ", " + std::to_string(invalid) + " invalid, " + std::to_string(bijection_broken) +
                  " bijection failures, " + fmt("%.2f", secs) + " s"};
}

Outcome error_structure(const FixtureRun& run) {
  int error_sessions = 0, error_ok = 0, follow_sessions = 0, follow_ok = 0;
  for (const auto& s : run.sessions) {
    int reports = 0;
    bool texts = true;
    for (const auto& t : s.conversation.turns)
      if (t.kind == TurnKind::kErrorReport) {
        ++reports;
        texts = texts && !text::trim(t.expert_text).empty();
      }
    if (s.action_type == ActionType::kError) {
      ++error_sessions;
      if (reports >= 1 && texts) ++error_ok;
    } else {
      ++follow_sessions;
      if (reports == 0) ++follow_ok;
    }
  }
  bool ok = error_sessions > 0 && error_ok == error_sessions && follow_ok == follow_sessions;
  return {ok, std::to_string(error_ok) + "/" + std::to_string(error_sessions) + " error sessions with reports, " +
                  std::to_string(follow_ok) + "/" + std::to_string(follow_sessions) + " follow sessions without"};
}

Outcome style_separation(const FixtureRun& run) {
  double cw = 0, rw = 0;
  int cn = 0, rn = 0;
  for (const auto& s : run.sessions)
    for (const auto& t : s.conversation.turns) {
      auto w = static_cast<double>(text::word_count(t.user_text));
      if (s.style == SpeechStyle::kConcise) {
        cw += w;
        ++cn;
      } else {
        rw += w;
        ++rn;
      }
    }
  if (!cn || !rn) return {false, "fixture lacks one of the styles"};
  return {cw / cn < rw / rn, "mean user words concise " + fmt("%.2f", cw / cn) + " vs regular " + fmt("%.2f", rw / rn)};
}

Outcome recomposition(const FixtureRun& run, const fs::path& work) {
  auto cfg = fixture::eval_config(run.dataset, work / "eval");
  auto cand = fixture::replay("eval_candidate");
  auto jud = fixture::replay("eval_judge");
  auto outcome = run_eval(cfg, cand.get(), jud.get());
  double worst = 0;
  std::size_t records = 0;
  for (const auto& t : outcome.tables) {
    worst = std::max(worst, recomposition_error(t));
    records += t.records;
  }
  bool ok = !outcome.tables.empty() && records > 0 && worst <= 1e-9;
  return {ok, std::to_string(outcome.tables.size()) + " modes, " + std::to_string(records) +
                  " records, max recomposition error " + fmt("%.3g", worst)};
}

// Stub endpoint standing in for a live model: exercises the live-run path
// (HTTP adapter, retries, report tables) without network access.
class StubEndpoint : public Transport {
 public:
  HttpResponse post_json(const std::string&, const std::string& body, const std::map<std::string, std::string>&) override {
    auto req = nlohmann::json::parse(body);
    std::string sys = req["messages"][0]["content"];
    std::string reply = sys.find("evaluator") != std::string::npos ? "Reasonable. Score: 3" : "Okay, next step.";
    nlohmann::json out = {{"choices", {{{"message", {{"role", "assistant"}, {"content", reply}}}, {"finish_reason", "stop"}}}}};
    return {200, out.dump(), ""};
  }
};

std::string live_run_check(const FixtureRun& run, const fs::path& work) {
  LiveConfig live;
  live.endpoint = "http://stub.invalid/v1/chat/completions";
  auto transport = std::make_shared<StubEndpoint>();
  auto cand = open_backend("live", {}, live, transport);
  auto jud = open_backend("live", {}, live, transport);
  auto cfg = fixture::eval_config(run.dataset, work / "live_eval");
  auto outcome = run_eval(cfg, cand.backend.get(), jud.backend.get());
  bool files = fs::exists(work / "live_eval" / "reports" / "hint_only" / "overall.csv") &&
               fs::exists(work / "live_eval" / "reports" / "hint_plus_steps" / "by_turn.csv");
  return files && outcome.inference_errors == 0 ? "live-run path produced the same report tables against a stub endpoint"
                                                : "live-run path check FAILED";
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  auto work = work_dir();

  print(1, "metric oracle equivalence", guarded(metric_oracles));
  print(2, "identity and zero cases", guarded(identity_and_zero));
  print(3, "segmentation scoring", guarded(segmentation));
  print(4, "split reproduction", guarded(split_reproduction));

  FixtureRun run;
  print(5, "end-to-end replay determinism", guarded([&] { return replay_determinism(work, run); }));
  print(6, "error-mode structure", guarded([&] { return error_structure(run); }));
  print(7, "style separation", guarded([&] { return style_separation(run); }));
  print(8, "aggregation recomposition", guarded([&] { return recomposition(run, work); }));

  std::string live;
  try {
    live = live_run_check(run, work);
  } catch (const std::exception& e) {
    live = std::string("live-run path check FAILED: ") + e.what();
  }
  std::printf(
      "criterion 9 [NOT REPRODUCIBLE] published benchmark values: need the original corpus and model weights; "
      "run `taskdialog --backend live --dataset <dataset.jsonl> eval` against any endpoint to produce the tables (%s)\n",
      live.c_str());
  if (live.find("FAILED") != std::string::npos) ++failures;

  fs::remove_all(work);
  return failures == 0 ? 0 : 1;
}
