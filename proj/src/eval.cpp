#include "taskdialog/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "taskdialog/csv.hpp"
#include "taskdialog/error.hpp"
#include "taskdialog/io.hpp"
#include "taskdialog/parallel.hpp"
#include "taskdialog/svg.hpp"
#include "taskdialog/text.hpp"

namespace taskdialog {

using json = nlohmann::json;

std::string_view to_string(PromptMode m) { return m == PromptMode::kHintOnly ? "hint_only" : "hint_plus_steps"; }

std::optional<PromptMode> parse_prompt_mode(std::string_view s) {
  if (s == "hint_only") return PromptMode::kHintOnly;
  if (s == "hint_plus_steps") return PromptMode::kHintPlusSteps;
  return std::nullopt;
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::kBleu: return "bleu";
    case Metric::kRouge1: return "rouge1";
    case Metric::kRouge2: return "rouge2";
    case Metric::kRougeL: return "rougeL";
    case Metric::kJudge: return "judge";
  }
  return "bleu";
}

namespace {

const TemplateRegistry& registry(const TemplateRegistry* t) { return t ? *t : TemplateRegistry::builtin(); }

const DialogueTurn& turn_at(const Session& s, int turn_index) {
  if (turn_index < 1 || static_cast<std::size_t>(turn_index) > s.conversation.turns.size())
    throw Error(ErrorCode::kInvalidArgument,
                s.session_id + ": turn " + std::to_string(turn_index) + " out of range");
  return s.conversation.turns[static_cast<std::size_t>(turn_index) - 1];
}

std::string step_lines(const InstructionSet& set) {
  std::string out;
  for (const auto& st : set.steps) out += std::to_string(st.ordinal) + ". " + st.text + "\n";
  if (!out.empty()) out.pop_back();
  return out;
}

}  // namespace

std::string render_history(const Conversation& conv, int turn_index, bool include_target_user) {
  std::string out;
  for (int i = 1; i < turn_index; ++i) {
    const auto& t = conv.turns[static_cast<std::size_t>(i) - 1];
    out += "USER: " + t.user_text + "\nEXPERT: " + t.expert_text + "\n";
  }
  if (include_target_user) out += "USER: " + conv.turns[static_cast<std::size_t>(turn_index) - 1].user_text + "\n";
  if (!out.empty()) out.pop_back();
  return out;
}

PromptRequest build_prompt(const Session& session, int turn_index, PromptMode mode, const EvalOptions& options) {
  turn_at(session, turn_index);
  const auto& tpl = registry(options.templates);
  PromptRequest r;
  if (mode == PromptMode::kHintPlusSteps)
    r.system_text = tpl.render("eval/hint_steps", {{"task", session.task}, {"steps", step_lines(session.instruction_set)}});
  else
    r.system_text = tpl.render("eval/hint", {{"task", session.task}});
  r.user_text = render_history(session.conversation, turn_index);
  r.temperature = options.temperature;
  r.max_output_tokens = options.max_output_tokens;
  r.model_id = options.model_id;
  r.tag = "eval:" + session.session_id + ":" + std::to_string(turn_index) + ":" + std::string(to_string(mode));
  return r;
}

InferenceResult run_inference(const std::vector<Session>& sessions, PromptMode mode, LlmBackend& backend,
                              const EvalOptions& options) {
  struct Job {
    const Session* session;
    int turn;
  };
  std::vector<Job> jobs;
  for (const auto& s : sessions)
    for (std::size_t i = 0; i < s.conversation.turns.size(); ++i) jobs.push_back({&s, static_cast<int>(i) + 1});

  std::vector<std::optional<std::string>> texts(jobs.size());
  std::vector<std::string> failures(jobs.size());
  parallel_for(jobs.size(), options.jobs, [&](std::size_t i) {
    const auto& job = jobs[i];
    try {
      texts[i] = complete(build_prompt(*job.session, job.turn, mode, options), backend).text;
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  });

  InferenceResult out;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (texts[i]) {
      out.predictions.push_back({jobs[i].session->session_id, jobs[i].turn, mode, *texts[i]});
    } else {
      spdlog::warn("inference failed for {} turn {}: {}", jobs[i].session->session_id, jobs[i].turn, failures[i]);
      out.errors.push_back({jobs[i].session->session_id, jobs[i].turn, mode, failures[i]});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

namespace {

using Tokens = std::vector<std::string>;
using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const Tokens& toks, int n) {
  NgramCounts out;
  const auto un = static_cast<std::size_t>(n);
  if (toks.size() < un) return out;
  for (std::size_t i = 0; i + un <= toks.size(); ++i) ++out[Tokens(toks.begin() + static_cast<long>(i), toks.begin() + static_cast<long>(i + un))];
  return out;
}

std::size_t clipped_matches(const NgramCounts& cand, const NgramCounts& ref) {
  std::size_t m = 0;
  for (const auto& [g, c] : cand) {
    auto it = ref.find(g);
    if (it != ref.end()) m += std::min(c, it->second);
  }
  return m;
}

Prf make_prf(double matches, double cand_total, double ref_total) {
  Prf p;
  p.precision = cand_total > 0 ? matches / cand_total : 0.0;
  p.recall = ref_total > 0 ? matches / ref_total : 0.0;
  p.f1 = p.precision + p.recall > 0 ? 2 * p.precision * p.recall / (p.precision + p.recall) : 0.0;
  return p;
}

double brevity_penalty(double c, double r) { return c < r ? std::exp(1.0 - r / c) : 1.0; }

}  // namespace

double bleu(const std::vector<std::string>& candidates, const std::vector<std::string>& references, int max_n) {
  if (candidates.empty()) throw Error(ErrorCode::kEmptyInput, "bleu needs at least one pair");
  if (candidates.size() != references.size())
    throw Error(ErrorCode::kInvalidArgument, "bleu candidate/reference counts differ");
  if (max_n < 1) throw Error(ErrorCode::kInvalidArgument, "bleu max_n must be >= 1");

  std::vector<double> matches(static_cast<std::size_t>(max_n), 0.0), totals(static_cast<std::size_t>(max_n), 0.0);
  double c = 0, r = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    auto ct = text::metric_tokens(candidates[i]);
    auto rt = text::metric_tokens(references[i]);
    c += static_cast<double>(ct.size());
    r += static_cast<double>(rt.size());
    for (int n = 1; n <= max_n; ++n) {
      auto cg = ngrams(ct, n);
      auto rg = ngrams(rt, n);
      matches[static_cast<std::size_t>(n - 1)] += static_cast<double>(clipped_matches(cg, rg));
      totals[static_cast<std::size_t>(n - 1)] += static_cast<double>(ct.size() >= static_cast<std::size_t>(n) ? ct.size() - static_cast<std::size_t>(n) + 1 : 0);
    }
  }
  if (c == 0) return 0.0;
  double log_sum = 0;
  int orders = 0;
  for (std::size_t k = 0; k < matches.size(); ++k) {
    if (totals[k] == 0) continue;
    if (matches[k] == 0) return 0.0;
    log_sum += std::log(matches[k] / totals[k]);
    ++orders;
  }
  double precision = orders ? std::exp(log_sum / orders) : 0.0;
  return std::min(1.0, precision * brevity_penalty(c, r));
}

double sentence_bleu(const std::string& candidate, const std::string& reference, int max_n) {
  if (max_n < 1) throw Error(ErrorCode::kInvalidArgument, "bleu max_n must be >= 1");
  auto ct = text::metric_tokens(candidate);
  auto rt = text::metric_tokens(reference);
  if (ct.empty()) return 0.0;
  double log_sum = 0;
  for (int n = 1; n <= max_n; ++n) {
    double m = static_cast<double>(clipped_matches(ngrams(ct, n), ngrams(rt, n)));
    double t = ct.size() >= static_cast<std::size_t>(n) ? static_cast<double>(ct.size() - static_cast<std::size_t>(n) + 1) : 0.0;
    if (n >= 2) {
      m += 1;
      t += 1;
    }
    if (m == 0) return 0.0;
    log_sum += std::log(m / t);
  }
  double value = std::exp(log_sum / max_n) *
                 brevity_penalty(static_cast<double>(ct.size()), static_cast<double>(rt.size()));
  return std::min(1.0, value);
}

Prf rouge_n(const std::string& candidate, const std::string& reference, int n) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "rouge n must be >= 1");
  auto cg = ngrams(text::metric_tokens(candidate), n);
  auto rg = ngrams(text::metric_tokens(reference), n);
  double ctot = 0, rtot = 0;
  for (const auto& [g, c] : cg) ctot += static_cast<double>(c);
  for (const auto& [g, c] : rg) rtot += static_cast<double>(c);
  return make_prf(static_cast<double>(clipped_matches(cg, rg)), ctot, rtot);
}

Prf rouge_l(const std::string& candidate, const std::string& reference) {
  auto a = text::metric_tokens(candidate);
  auto b = text::metric_tokens(reference);
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return make_prf(static_cast<double>(prev[b.size()]), static_cast<double>(a.size()), static_cast<double>(b.size()));
}

// ---------------------------------------------------------------------------
// Judge

std::optional<int> parse_judge_score(std::string_view s) {
  std::optional<long> last;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
    auto before = i > 0 ? s[i - 1] : ' ';
    auto after = j < s.size() ? s[j] : ' ';
    auto after2 = j + 1 < s.size() ? s[j + 1] : ' ';
    bool glued = std::isalpha(static_cast<unsigned char>(before)) || std::isalpha(static_cast<unsigned char>(after)) ||
                 before == '.' || (after == '.' && std::isdigit(static_cast<unsigned char>(after2))) || before == '-';
    bool denominator = before == '/';
    std::string_view head = s.substr(0, i);
    while (!head.empty() && head.back() == ' ') head.remove_suffix(1);
    if (head.size() >= 6 && text::iequals(head.substr(head.size() - 6), "out of")) denominator = true;
    if (!glued && !denominator && j - i <= 3) last = std::stol(std::string(s.substr(i, j - i)));
    i = j;
  }
  if (!last || *last < 1 || *last > 5) return std::nullopt;
  return static_cast<int>(*last);
}

JudgeVerdict judge(const Session& session, int turn_index, const std::string& prediction, LlmBackend& backend,
                   const JudgeOptions& options) {
  const auto& turn = turn_at(session, turn_index);
  const auto& tpl = registry(options.templates);
  TemplateVars vars{{"task", session.task},
                    {"history", render_history(session.conversation, turn_index)},
                    {"candidate", prediction}};
  std::string user_tpl = "judge/user_free";
  if (options.variant == JudgeVariant::kReference) {
    vars["reference"] = turn.expert_text;
    user_tpl = "judge/user_reference";
  }
  PromptRequest r;
  r.system_text = tpl.render("judge/system", {});
  r.user_text = tpl.render(user_tpl, vars);
  r.temperature = options.temperature;
  r.max_output_tokens = options.max_output_tokens;
  r.model_id = options.model_id;
  r.tag = "judge:" + session.session_id + ":" + std::to_string(turn_index);

  auto first = complete(r, backend);
  if (auto score = parse_judge_score(first.text)) return {*score, first.text, 1};

  PromptRequest again = r;
  again.user_text = tpl.render("judge/reask", {{"original", r.user_text}});
  again.tag += ":reask";
  auto second = complete(again, backend);
  if (auto score = parse_judge_score(second.text)) return {*score, second.text, 2};
  throw Error(ErrorCode::kUnparseableScore, session.session_id + " turn " + std::to_string(turn_index) +
                                                ": no score in 1-5 after re-ask");
}

// ---------------------------------------------------------------------------
// Records and aggregation

namespace {

std::map<std::string, const Session*> index_sessions(const std::vector<Session>& sessions) {
  std::map<std::string, const Session*> out;
  for (const auto& s : sessions) out[s.session_id] = &s;
  return out;
}

const Session& lookup(const std::map<std::string, const Session*>& idx, const std::string& id) {
  auto it = idx.find(id);
  if (it == idx.end()) throw Error(ErrorCode::kInvalidArgument, "unknown session " + id);
  return *it->second;
}

std::string category_key(const Session& s) {
  return std::string(to_string(s.style)) + "-" + std::string(to_string(s.action_type));
}

struct Accum {
  std::map<Metric, std::pair<double, std::size_t>> sums;
  void add(const MetricRecord& r) {
    for (auto m : kAllMetrics)
      if (auto v = metric_value(r, m)) {
        sums[m].first += *v;
        ++sums[m].second;
      }
  }
  ReportRow row(std::string key) const {
    ReportRow out{std::move(key), {}};
    for (auto m : kAllMetrics) {
      auto it = sums.find(m);
      MetricCell c;
      if (it != sums.end() && it->second.second) {
        c.count = it->second.second;
        c.mean = it->second.first / static_cast<double>(c.count);
      }
      out.cells[m] = c;
    }
    return out;
  }
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::optional<double> metric_value(const MetricRecord& r, Metric m) {
  switch (m) {
    case Metric::kBleu: return r.bleu;
    case Metric::kRouge1: return r.rouge1.f1;
    case Metric::kRouge2: return r.rouge2.f1;
    case Metric::kRougeL: return r.rougeL.f1;
    case Metric::kJudge:
      if (r.judge) return static_cast<double>(*r.judge);
      return std::nullopt;
  }
  return std::nullopt;
}

std::vector<MetricRecord> score_predictions(const std::vector<PredictedResponse>& predictions,
                                            const std::vector<Session>& sessions, unsigned jobs) {
  auto idx = index_sessions(sessions);
  std::vector<MetricRecord> out(predictions.size());
  for (const auto& p : predictions) turn_at(lookup(idx, p.session_id), p.turn_index);
  parallel_for(predictions.size(), jobs, [&](std::size_t i) {
    const auto& p = predictions[i];
    const auto& ref = turn_at(lookup(idx, p.session_id), p.turn_index).expert_text;
    auto& r = out[i];
    r.session_id = p.session_id;
    r.turn_index = p.turn_index;
    r.mode = p.mode;
    r.bleu = sentence_bleu(p.text, ref);
    r.rouge1 = rouge_n(p.text, ref, 1);
    r.rouge2 = rouge_n(p.text, ref, 2);
    r.rougeL = rouge_l(p.text, ref);
  });
  return out;
}

ReportTables aggregate(const std::vector<MetricRecord>& records, const std::vector<Session>& sessions,
                       const std::vector<PredictedResponse>& predictions) {
  auto idx = index_sessions(sessions);
  ReportTables t;
  if (!records.empty()) t.mode = records.front().mode;
  for (const auto& r : records)
    if (r.mode != t.mode) throw Error(ErrorCode::kInvalidArgument, "aggregate expects records of a single mode");
  t.records = records.size();

  Accum overall;
  std::map<std::string, Accum> by_task, by_cat;
  std::map<int, Accum> by_turn;
  for (const auto& r : records) {
    const auto& s = lookup(idx, r.session_id);
    overall.add(r);
    by_task[s.task].add(r);
    by_cat[category_key(s)].add(r);
    by_turn[r.turn_index].add(r);
  }
  t.overall = {"overall", {overall.row("all")}};
  t.by_task.name = "task";
  for (const auto& [k, a] : by_task) t.by_task.rows.push_back(a.row(k));
  t.by_category.name = "category";
  for (const auto& [k, a] : by_cat) t.by_category.rows.push_back(a.row(k));
  t.by_turn.name = "turn_index";
  if (!by_turn.empty()) {
    // Every index from 1 to the maximum gets a row, empty ones with zero counts.
    for (int k = 1; k <= by_turn.rbegin()->first; ++k) {
      auto it = by_turn.find(k);
      t.by_turn.rows.push_back(it != by_turn.end() ? it->second.row(std::to_string(k)) : Accum{}.row(std::to_string(k)));
    }
  }

  std::vector<std::string> cands, refs;
  for (const auto& p : predictions) {
    if (p.mode != t.mode) continue;
    cands.push_back(p.text);
    refs.push_back(turn_at(lookup(idx, p.session_id), p.turn_index).expert_text);
  }
  if (!cands.empty()) t.corpus_bleu = bleu(cands, refs);
  return t;
}

double recomposition_error(const ReportTables& tables) {
  double worst = 0;
  if (tables.overall.rows.empty()) return 0;
  const auto& all = tables.overall.rows.front();
  for (const auto* table : {&tables.by_task, &tables.by_category, &tables.by_turn}) {
    for (auto m : kAllMetrics) {
      double sum = 0;
      std::size_t count = 0;
      for (const auto& row : table->rows) {
        const auto& c = row.cells.at(m);
        sum += c.mean * static_cast<double>(c.count);
        count += c.count;
      }
      const auto& o = all.cells.at(m);
      if (count != o.count) return std::numeric_limits<double>::infinity();
      if (count) worst = std::max(worst, std::abs(sum / static_cast<double>(count) - o.mean));
    }
  }
  return worst;
}

std::string table_csv(const ReportTable& table) {
  std::vector<std::string> header{table.name};
  for (auto m : kAllMetrics) {
    header.push_back(std::string(to_string(m)) + "_mean");
    header.push_back(std::string(to_string(m)) + "_count");
  }
  std::string out = csv::join(header) + "\n";
  for (const auto& row : table.rows) {
    std::vector<std::string> f{row.key};
    for (auto m : kAllMetrics) {
      const auto& c = row.cells.at(m);
      f.push_back(num(c.mean));
      f.push_back(std::to_string(c.count));
    }
    out += csv::join(f) + "\n";
  }
  return out;
}

void write_report(const ReportTables& tables, const std::vector<MetricRecord>& records,
                  const std::filesystem::path& dir) {
  io::write_file_atomic(dir / "overall.csv", table_csv(tables.overall));
  io::write_file_atomic(dir / "by_task.csv", table_csv(tables.by_task));
  io::write_file_atomic(dir / "by_category.csv", table_csv(tables.by_category));
  io::write_file_atomic(dir / "by_turn.csv", table_csv(tables.by_turn));

  double sentence_mean = tables.overall.rows.empty() ? 0.0 : tables.overall.rows.front().cells.at(Metric::kBleu).mean;
  std::string summary = "mode,records,corpus_bleu,mean_sentence_bleu\n";
  summary += csv::join({std::string(to_string(tables.mode)), std::to_string(tables.records), num(tables.corpus_bleu),
                        num(sentence_mean)}) + "\n";
  io::write_file_atomic(dir / "summary.csv", summary);

  for (auto m : {Metric::kBleu, Metric::kRougeL, Metric::kJudge}) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& row : tables.by_turn.rows) {
      const auto& c = row.cells.at(m);
      if (c.count) pts.emplace_back(std::stod(row.key), c.mean);
    }
    if (pts.empty()) continue;
    std::string name(to_string(m));
    io::write_file_atomic(dir / ("turn_" + name + ".svg"),
                          svg::line_chart(pts, name + " by turn index", "turn index", name));
  }
  std::vector<svg::Bar> bars;
  for (const auto& row : tables.by_category.rows) bars.push_back({row.key, row.cells.at(Metric::kRougeL).mean});
  io::write_file_atomic(dir / "category_rougeL.svg", svg::bar_chart(bars, "ROUGE-L by category", "rougeL"));
  std::vector<double> scores;
  for (const auto& r : records)
    if (r.judge) scores.push_back(static_cast<double>(*r.judge));
  if (!scores.empty())
    io::write_file_atomic(dir / "judge_scores.svg", svg::histogram(scores, 0.5, 5.5, 5, "Judge scores", "score"));
}

// ---------------------------------------------------------------------------
// Serialization

std::string predictions_jsonl(const std::vector<PredictedResponse>& predictions) {
  std::string out;
  for (const auto& p : predictions) {
    json j{{"session_id", p.session_id}, {"turn_index", p.turn_index}, {"mode", std::string(to_string(p.mode))},
           {"text", p.text}};
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<PredictedResponse> parse_predictions_jsonl(std::string_view jsonl) {
  std::vector<PredictedResponse> out;
  std::size_t line_no = 0;
  for (const auto& line : text::split_lines(jsonl)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto fail = [&](const std::string& what) -> PredictedResponse {
      throw Error(ErrorCode::kSchemaViolation, "predictions line " + std::to_string(line_no) + ": " + what);
    };
    try {
      auto j = json::parse(line);
      auto mode = parse_prompt_mode(j.at("mode").get<std::string>());
      if (!mode) fail("/mode is unknown");
      out.push_back({j.at("session_id").get<std::string>(), j.at("turn_index").get<int>(), *mode,
                     j.at("text").get<std::string>()});
    } catch (const json::exception& e) {
      fail(e.what());
    }
  }
  return out;
}

std::string errors_jsonl(const std::vector<InferenceError>& errors) {
  std::string out;
  for (const auto& e : errors) {
    json j{{"session_id", e.session_id}, {"turn_index", e.turn_index}, {"mode", std::string(to_string(e.mode))},
           {"error", e.message}};
    out += j.dump() + "\n";
  }
  return out;
}

namespace {
const std::vector<std::string> kMetricsHeader{
    "session_id", "turn_index", "mode",     "bleu",     "rouge1_p", "rouge1_r", "rouge1_f", "rouge2_p",
    "rouge2_r",   "rouge2_f",   "rougeL_p", "rougeL_r", "rougeL_f", "judge"};
}

std::string metrics_csv(const std::vector<MetricRecord>& records) {
  std::string out = csv::join(kMetricsHeader) + "\n";
  for (const auto& r : records) {
    out += csv::join({r.session_id, std::to_string(r.turn_index), std::string(to_string(r.mode)), num(r.bleu),
                      num(r.rouge1.precision), num(r.rouge1.recall), num(r.rouge1.f1), num(r.rouge2.precision),
                      num(r.rouge2.recall), num(r.rouge2.f1), num(r.rougeL.precision), num(r.rougeL.recall),
                      num(r.rougeL.f1), r.judge ? std::to_string(*r.judge) : std::string()}) +
           "\n";
  }
  return out;
}

std::vector<MetricRecord> parse_metrics_csv(std::string_view content) {
  auto rows = csv::parse(content);
  if (rows.empty() || rows.front().fields != kMetricsHeader)
    throw Error(ErrorCode::kSchemaViolation, "metrics csv header mismatch");
  std::vector<MetricRecord> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i].fields;
    auto bad = [&](const std::string& what) {
      return Error(ErrorCode::kMalformedRow, "metrics csv line " + std::to_string(rows[i].line) + ": " + what);
    };
    if (f.size() != kMetricsHeader.size()) throw bad("expected " + std::to_string(kMetricsHeader.size()) + " fields");
    MetricRecord r;
    try {
      r.session_id = f[0];
      r.turn_index = std::stoi(f[1]);
      auto mode = parse_prompt_mode(f[2]);
      if (!mode) throw bad("unknown mode " + f[2]);
      r.mode = *mode;
      r.bleu = std::stod(f[3]);
      r.rouge1 = {std::stod(f[4]), std::stod(f[5]), std::stod(f[6])};
      r.rouge2 = {std::stod(f[7]), std::stod(f[8]), std::stod(f[9])};
      r.rougeL = {std::stod(f[10]), std::stod(f[11]), std::stod(f[12])};
      if (!f[13].empty()) r.judge = std::stoi(f[13]);
    } catch (const std::logic_error& e) {
      throw bad(e.what());
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace taskdialog
