#include "taskdialog/pipeline.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "taskdialog/csv.hpp"
#include "taskdialog/error.hpp"
#include "taskdialog/generation.hpp"
#include "taskdialog/io.hpp"
#include "taskdialog/localize.hpp"
#include "taskdialog/parallel.hpp"
#include "taskdialog/text.hpp"

namespace taskdialog {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Backends

void BackendHandle::flush() const {
  if (kind == "record" && cassette) cassette->save(cassette_path);
}

BackendHandle open_backend(const std::string& kind, const fs::path& cassette_path, const LiveConfig& live,
                           std::shared_ptr<Transport> transport) {
  BackendHandle h;
  h.kind = kind;
  h.cassette_path = cassette_path;
  auto make_live = [&] {
    if (live.endpoint.empty())
      throw Error(ErrorCode::kConfigError, "live backend needs an endpoint (TASKDIALOG_ENDPOINT)");
    if (!transport) transport = std::make_shared<HttplibTransport>();
    return std::make_shared<LiveBackend>(live, transport);
  };
  if (kind == "replay") {
    if (cassette_path.empty() || !fs::exists(cassette_path))
      throw Error(ErrorCode::kStageInputMissing, "replay needs a cassette; not found: '" + cassette_path.string() + "'");
    h.cassette = std::make_shared<Cassette>(Cassette::load(cassette_path));
    h.backend = std::make_shared<ReplayBackend>(h.cassette);
  } else if (kind == "record") {
    if (cassette_path.empty()) throw Error(ErrorCode::kConfigError, "record needs --cassette");
    h.cassette = std::make_shared<Cassette>(fs::exists(cassette_path) ? Cassette::load(cassette_path)
                                                                      : Cassette(cassette_path.filename().string()));
    h.backend = std::make_shared<RecordBackend>(make_live(), h.cassette);
  } else if (kind == "live") {
    h.backend = make_live();
  } else {
    throw Error(ErrorCode::kConfigError, "unknown backend '" + kind + "' (live|replay|record)");
  }
  return h;
}

// ---------------------------------------------------------------------------
// Config

namespace {

std::vector<SpeechStyle> parse_styles(const std::vector<std::string>& names, const char* key) {
  std::vector<SpeechStyle> out;
  for (const auto& n : names) {
    auto s = parse_speech_style(n);
    if (!s) throw Error(ErrorCode::kConfigError, std::string(key) + ": unknown style '" + n + "'");
    out.push_back(*s);
  }
  return out;
}

void check_ratios(const SplitRatios& r) {
  if (r.train < 0 || r.val < 0 || r.test < 0 || std::abs(r.train + r.val + r.test - 1.0) > 1e-9)
    throw Error(ErrorCode::kConfigError, "split ratios must be non-negative and sum to 1");
}

}  // namespace

void PipelineConfig::validate() const {
  if (manifest.empty()) throw Error(ErrorCode::kConfigError, "manifest is not set");
  if (!fs::exists(manifest)) throw Error(ErrorCode::kConfigError, "manifest not found: " + manifest.string());
  if (!stoplist.empty() && !fs::exists(stoplist))
    throw Error(ErrorCode::kConfigError, "stoplist not found: " + stoplist.string());
  if (!templates_dir.empty() && !fs::is_directory(templates_dir))
    throw Error(ErrorCode::kConfigError, "templates_dir not found: " + templates_dir.string());
  parse_styles(narrated_styles, "narrated_styles");
  parse_styles(annotated_styles, "annotated_styles");
  if (annotation_path != "merge" && annotation_path != "cluster")
    throw Error(ErrorCode::kConfigError, "annotation_path must be merge or cluster");
  if (correction_token.empty()) throw Error(ErrorCode::kConfigError, "correction_token is empty");
  check_ratios(ratios);
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

std::string read_stage_input(const fs::path& path, const char* stage) {
  if (!fs::exists(path))
    throw Error(ErrorCode::kStageInputMissing,
                std::string(stage) + " needs " + path.string() + "; run the earlier stage first");
  return io::read_file(path);
}

template <typename T, typename Parse>
std::vector<T> read_jsonl(const fs::path& path, const char* stage, Parse parse) {
  std::vector<T> out;
  std::size_t line_no = 0;
  for (const auto& line : text::split_lines(read_stage_input(path, stage))) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(parse(line, line_no));
    } catch (const Error& e) {
      throw e.with_context(path.string());
    }
  }
  return out;
}

std::string partition_of(const SourceRecording& rec) {
  if (!rec.steps) return "-";
  auto p = partition_by_errors({rec});
  if (!p.error.empty()) return "error";
  if (!p.excluded.empty()) return "excluded";
  return "normal";
}

struct SessionPlan {
  const InstructionSet* set;
  SpeechStyle style;
  ActionType action;
};

}  // namespace

Pipeline::Pipeline(PipelineConfig config, std::shared_ptr<LlmBackend> backend)
    : config_(std::move(config)), backend_(std::move(backend)), templates_(TemplateRegistry::builtin()) {
  config_.validate();
  if (!config_.templates_dir.empty()) templates_.load_overrides(config_.templates_dir);
  fs::create_directories(config_.run_dir);
}

LlmBackend& Pipeline::backend() const {
  if (!backend_) throw Error(ErrorCode::kConfigError, "this stage needs an LLM backend");
  return *backend_;
}

std::vector<SourceRecording> Pipeline::usable_recordings() const {
  auto rows = csv::parse(read_stage_input(file("ingest.csv"), "this stage"));
  std::set<std::string> ok;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].fields.size() >= 5 && rows[i].fields[4] == "ok") ok.insert(rows[i].fields[0]);
  std::vector<SourceRecording> out;
  for (auto& rec : load_manifest(config_.manifest, config_.jobs))
    if (ok.count(rec.recording_id)) out.push_back(std::move(rec));
  return out;
}

StageResult Pipeline::ingest() {
  auto recordings = load_manifest(config_.manifest, config_.jobs);
  std::string out = "recording_id,task,source_kind,duration_s,status,partition,violations\n";
  std::map<std::string, std::size_t> counts;
  for (const auto& rec : recordings) {
    std::string status = "ok";
    std::string detail;
    if (!rec.egocentric) {
      status = "skipped_non_egocentric";
    } else if (auto report = validate_timeline(rec); !report.ok()) {
      status = "invalid";
      detail = report.to_string();
      spdlog::warn("{}: {}", rec.recording_id, detail);
    }
    const std::string part = partition_of(rec);
    ++counts[status];
    if (status == "ok" && part != "-") ++counts["partition:" + part];
    out += csv::join({rec.recording_id, rec.task, std::string(to_string(rec.source_kind)), text::format_seconds(rec.duration),
                      status, part, detail}) +
           "\n";
  }
  io::write_file_atomic(file("ingest.csv"), out);
  std::string summary = std::to_string(recordings.size()) + " recordings:";
  for (const auto& [k, v] : counts) summary += " " + k + "=" + std::to_string(v);
  return {summary, 0};
}

StageResult Pipeline::build_instructions() {
  auto recordings = usable_recordings();
  if (config_.dry_run) {
    std::size_t narrated = 0, annotated = 0;
    for (const auto& r : recordings) (r.subtitles ? narrated : annotated)++;
    std::size_t calls = narrated + annotated;
    return {"planned LLM calls: " + std::to_string(calls) + " (up to " + std::to_string(2 * narrated + annotated) +
                " with retries)",
            calls};
  }
  std::vector<std::string> stoplist = config_.stoplist.empty() ? default_stoplist() : load_stoplist(config_.stoplist);
  LlmContext ctx{backend(), templates_, config_.model, config_.temperature, kDialogueMaxTokens};

  std::vector<std::optional<InstructionSet>> sets(recordings.size());
  std::vector<std::string> skipped(recordings.size());
  parallel_for(recordings.size(), config_.jobs, [&](std::size_t i) {
    const auto& rec = recordings[i];
    try {
      InstructionSet set;
      if (rec.subtitles)
        set = extract_from_narration(*rec.subtitles, rec.task, rec.recording_id, ctx);
      else if (config_.annotation_path == "cluster")
        set = cluster_and_filter_steps(*rec.steps, stoplist, rec.task, rec.recording_id, ctx);
      else
        set = normalize_annotated_steps(*rec.steps, rec.task, rec.recording_id, ctx);
      if (auto report = validate_instruction_set(set); !report.ok()) {
        skipped[i] = report.to_string();
        return;
      }
      sets[i] = std::move(set);
    } catch (const Error& e) {
      throw e.with_context("build-instructions: " + rec.recording_id);
    }
  });

  std::string out;
  std::size_t written = 0;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (!sets[i]) {
      spdlog::warn("{}: instruction set dropped: {}", recordings[i].recording_id, skipped[i]);
      continue;
    }
    out += instruction_set_to_json_line(*sets[i]) + "\n";
    ++written;
  }
  io::write_file_atomic(file("instructions.jsonl"), out);
  return {std::to_string(written) + " instruction sets (" + std::to_string(recordings.size() - written) + " dropped)",
          0};
}

StageResult Pipeline::gen_dialogues() {
  auto sets = read_jsonl<InstructionSet>(file("instructions.jsonl"), "gen-dialogues",
                                         [](std::string_view l, std::size_t n) { return instruction_set_from_json_line(l, n); });
  std::map<std::string, std::string> partition;
  for (const auto& rec : usable_recordings()) partition[rec.recording_id] = partition_of(rec);

  const auto narrated = parse_styles(config_.narrated_styles, "narrated_styles");
  const auto annotated = parse_styles(config_.annotated_styles, "annotated_styles");
  std::vector<SessionPlan> plans;
  for (const auto& set : sets) {
    auto it = partition.find(set.recording_id);
    if (it == partition.end()) continue;
    const std::string& part = it->second;
    if (part == "-") {
      for (auto s : narrated) plans.push_back({&set, s, ActionType::kFollow});
    } else if (part == "normal") {
      for (auto s : annotated) plans.push_back({&set, s, ActionType::kFollow});
    } else if (part == "error" && config_.error_mode) {
      if (set.has_corrections())
        plans.push_back({&set, SpeechStyle::kRegular, ActionType::kError});
      else
        spdlog::warn("{}: error recording without correction steps, skipped", set.recording_id);
    }
  }

  if (config_.dry_run) {
    std::size_t clar = 0;
    if (config_.clarifications)
      for (const auto& p : plans) clar += p.set->has_caveats() ? 1 : 0;
    return {"planned LLM calls: " + std::to_string(plans.size() + clar) + " (up to " +
                std::to_string(2 * plans.size() + clar) + " with retries)",
            plans.size() + clar};
  }

  LlmContext ctx{backend(), templates_, config_.model, config_.temperature, kDialogueMaxTokens};
  DialogueOptions options{config_.correction_token};
  std::vector<Conversation> convs(plans.size());
  parallel_for(plans.size(), config_.jobs, [&](std::size_t i) {
    const auto& p = plans[i];
    try {
      auto conv = generate(*p.set, p.style, p.action, ctx, options);
      if (config_.clarifications && p.set->has_caveats())
        conv = insert_clarifications(std::move(conv), generate_clarifications(*p.set, ctx));
      convs[i] = std::move(conv);
    } catch (const Error& e) {
      throw e.with_context("gen-dialogues: " + p.set->recording_id + " " + std::string(to_string(p.style)) + "-" +
                           std::string(to_string(p.action)));
    }
  });

  std::string out;
  for (const auto& c : convs) out += conversation_to_json_line(c) + "\n";
  io::write_file_atomic(file("conversations.jsonl"), out);
  return {std::to_string(convs.size()) + " conversations", 0};
}

StageResult Pipeline::localize() {
  auto sets = read_jsonl<InstructionSet>(file("instructions.jsonl"), "localize",
                                         [](std::string_view l, std::size_t n) { return instruction_set_from_json_line(l, n); });
  std::map<std::string, SourceRecording> recs;
  for (auto& rec : usable_recordings()) recs.emplace(rec.recording_id, std::move(rec));

  std::vector<StepSpanMap> maps;
  std::size_t warnings = 0;
  for (const auto& set : sets) {
    auto it = recs.find(set.recording_id);
    if (it == recs.end())
      throw Error(ErrorCode::kStageInputMissing, "localize: recording " + set.recording_id + " not in manifest");
    const auto& rec = it->second;
    try {
      StepSpanMap map = rec.subtitles ? localize_from_subtitles(set, *rec.subtitles) : localize_direct(set, *rec.steps);
      if (auto report = validate_span_map(map, rec.duration); !report.ok()) {
        ++warnings;
        spdlog::warn("{}: {}", set.recording_id, report.to_string());
      }
      maps.push_back(std::move(map));
    } catch (const Error& e) {
      throw e.with_context("localize: " + set.recording_id);
    }
  }
  io::write_file_atomic(file("spans.csv"), span_maps_csv(maps));
  return {std::to_string(maps.size()) + " span maps (" + std::to_string(warnings) + " with warnings)", 0};
}

StageResult Pipeline::assemble() {
  auto sets = read_jsonl<InstructionSet>(file("instructions.jsonl"), "assemble",
                                         [](std::string_view l, std::size_t n) { return instruction_set_from_json_line(l, n); });
  auto convs = read_jsonl<Conversation>(file("conversations.jsonl"), "assemble",
                                        [](std::string_view l, std::size_t n) { return conversation_from_json_line(l, n); });
  std::map<std::string, StepSpanMap> maps;
  for (auto& m : parse_span_maps_csv(read_stage_input(file("spans.csv"), "assemble")))
    maps.emplace(m.recording_id, std::move(m));
  std::map<std::string, const InstructionSet*> by_rec;
  for (const auto& s : sets) by_rec[s.recording_id] = &s;

  std::vector<Session> sessions;
  for (const auto& conv : convs) {
    const std::string& rec = conv.source_recording_id;
    try {
      auto set_it = by_rec.find(rec);
      if (set_it == by_rec.end()) throw Error(ErrorCode::kStageInputMissing, "no instruction set");
      auto map_it = maps.find(rec);
      if (map_it == maps.end()) throw Error(ErrorCode::kStageInputMissing, "no span map");
      const std::string sid = make_session_id(rec, conv.style, conv.action_type);
      sessions.push_back(taskdialog::assemble(attach_clips(conv, map_it->second, sid), *set_it->second));
    } catch (const Error& e) {
      throw e.with_context("assemble: " + rec);
    }
  }
  std::set<std::string> ids;
  for (const auto& s : sessions)
    if (!ids.insert(s.session_id).second)
      throw Error(ErrorCode::kSchemaViolation, "assemble: duplicate session " + s.session_id);
  write_dataset(sessions, file("dataset.jsonl"));
  emit_cutlist(sessions, config_.run_dir);
  return {std::to_string(sessions.size()) + " sessions", 0};
}

StageResult Pipeline::split() {
  read_stage_input(file("dataset.jsonl"), "split");
  auto sessions = read_dataset(file("dataset.jsonl"));
  auto assignment = stratified_split(sessions, config_.ratios, config_.seed);
  apply_split(sessions, assignment);
  std::string out = "session_id,split\n";
  for (const auto& [id, split] : assignment.by_session) out += csv::join({id, std::string(to_string(split))}) + "\n";
  io::write_file_atomic(file("split.csv"), out);
  write_dataset(sessions, file("dataset.jsonl"));
  auto t = assignment.totals();
  return {"train=" + std::to_string(t[0]) + " val=" + std::to_string(t[1]) + " test=" + std::to_string(t[2]), 0};
}

StageResult Pipeline::stats() {
  read_stage_input(file("dataset.jsonl"), "stats");
  auto sessions = read_dataset(file("dataset.jsonl"));
  auto report = compute_stats(sessions);
  const fs::path dir = config_.run_dir / "reports" / "stats";
  fs::create_directories(dir);
  write_stats_report(report, dir);
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%zu sessions, %zu turns, %.2f turns/session, %.1f s of clips",
                report.total_sessions, report.total_turns, report.mean_turns_per_session, report.total_video_seconds);
  return {buf, 0};
}

// ---------------------------------------------------------------------------
// Evaluation

void EvalConfig::validate() const {
  if (dataset.empty()) throw Error(ErrorCode::kConfigError, "dataset is not set");
  if (modes.empty()) throw Error(ErrorCode::kConfigError, "no eval modes");
  for (const auto& m : modes)
    if (!parse_prompt_mode(m)) throw Error(ErrorCode::kConfigError, "unknown mode '" + m + "'");
  if (split != "test" && split != "all") throw Error(ErrorCode::kConfigError, "split must be test or all");
  if (judge_variant != "reference" && judge_variant != "free")
    throw Error(ErrorCode::kConfigError, "judge_variant must be reference or free");
  if (!templates_dir.empty() && !fs::is_directory(templates_dir))
    throw Error(ErrorCode::kConfigError, "templates_dir not found: " + templates_dir.string());
}

namespace {

std::vector<Session> eval_sessions(const fs::path& dataset, const std::string& split) {
  if (!fs::exists(dataset)) throw Error(ErrorCode::kStageInputMissing, "dataset not found: " + dataset.string());
  auto all = read_dataset(dataset);
  if (split == "all") return all;
  std::vector<Session> out;
  for (auto& s : all)
    if (s.split == Split::kTest) out.push_back(std::move(s));
  if (out.empty()) throw Error(ErrorCode::kEmptyCorpus, "no test sessions in " + dataset.string() + "; run split first");
  return out;
}

void write_mode_report(const fs::path& out_dir, const std::vector<MetricRecord>& records,
                       const std::vector<Session>& sessions, const std::vector<PredictedResponse>& predictions,
                       PromptMode mode, std::vector<ReportTables>& tables) {
  std::vector<MetricRecord> mine;
  for (const auto& r : records)
    if (r.mode == mode) mine.push_back(r);
  auto t = aggregate(mine, sessions, predictions);
  t.mode = mode;
  const fs::path dir = out_dir / "reports" / std::string(to_string(mode));
  fs::create_directories(dir);
  write_report(t, mine, dir);
  tables.push_back(std::move(t));
}

}  // namespace

EvalOutcome run_eval(const EvalConfig& config, LlmBackend* candidate, LlmBackend* judge_backend) {
  config.validate();
  auto sessions = eval_sessions(config.dataset, config.split);
  TemplateRegistry templates = TemplateRegistry::builtin();
  if (!config.templates_dir.empty()) templates.load_overrides(config.templates_dir);

  std::vector<PromptMode> modes;
  for (const auto& m : config.modes) modes.push_back(*parse_prompt_mode(m));
  std::size_t turns = 0;
  for (const auto& s : sessions) turns += s.conversation.turns.size();

  EvalOutcome outcome;
  if (config.dry_run) {
    std::size_t inference = config.predictions.empty() ? turns * modes.size() : 0;
    outcome.planned_calls = inference + (config.judge ? turns * modes.size() : 0);
    return outcome;
  }

  std::vector<PredictedResponse> reused;
  if (!config.predictions.empty()) {
    if (!fs::exists(config.predictions))
      throw Error(ErrorCode::kStageInputMissing, "predictions not found: " + config.predictions.string());
    reused = parse_predictions_jsonl(io::read_file(config.predictions));
  } else if (!candidate) {
    throw Error(ErrorCode::kStageInputMissing, "eval needs a predictions file or a candidate backend/cassette");
  }
  if (config.judge && !judge_backend)
    throw Error(ErrorCode::kStageInputMissing, "judging is enabled but no judge backend/cassette is available");

  fs::create_directories(config.out_dir);
  json run = {{"dataset", fs::absolute(config.dataset).lexically_normal().string()},
              {"split", config.split},
              {"modes", config.modes},
              {"model", config.model},
              {"judge", config.judge},
              {"judge_model", config.judge_model},
              {"judge_variant", config.judge_variant}};
  io::write_file_atomic(config.out_dir / "run.json", run.dump(2) + "\n");

  EvalOptions eopts;
  eopts.model_id = config.model;
  eopts.jobs = config.jobs;
  eopts.templates = &templates;
  JudgeOptions jopts;
  jopts.model_id = config.judge_model;
  jopts.variant = config.judge_variant == "free" ? JudgeVariant::kReferenceFree : JudgeVariant::kReference;
  jopts.templates = &templates;

  std::map<std::string, const Session*> by_id;
  for (const auto& s : sessions) by_id[s.session_id] = &s;

  std::vector<MetricRecord> all_records;
  std::vector<PredictedResponse> all_predictions;
  for (auto mode : modes) {
    InferenceResult inf;
    if (reused.empty()) {
      inf = run_inference(sessions, mode, *candidate, eopts);
    } else {
      for (const auto& p : reused)
        if (p.mode == mode && by_id.count(p.session_id)) inf.predictions.push_back(p);
    }
    outcome.inference_errors += inf.errors.size();
    auto records = score_predictions(inf.predictions, sessions, config.jobs);
    if (config.judge) {
      std::vector<std::string> failures(records.size());
      parallel_for(records.size(), config.jobs, [&](std::size_t i) {
        const auto& p = inf.predictions[i];
        try {
          records[i].judge = judge(*by_id.at(p.session_id), p.turn_index, p.text, *judge_backend, jopts).score;
        } catch (const std::exception& e) {
          failures[i] = e.what();
        }
      });
      for (std::size_t i = 0; i < records.size(); ++i) {
        if (failures[i].empty()) continue;
        ++outcome.judge_errors;
        inf.errors.push_back({records[i].session_id, records[i].turn_index, mode, "judge: " + failures[i]});
      }
    }
    const std::string m(to_string(mode));
    io::write_file_atomic(config.out_dir / ("predictions_" + m + ".jsonl"), predictions_jsonl(inf.predictions));
    io::write_file_atomic(config.out_dir / ("errors_" + m + ".jsonl"), errors_jsonl(inf.errors));
    outcome.predictions += inf.predictions.size();
    all_records.insert(all_records.end(), records.begin(), records.end());
    all_predictions.insert(all_predictions.end(), inf.predictions.begin(), inf.predictions.end());
  }
  io::write_file_atomic(config.out_dir / "metrics.csv", metrics_csv(all_records));
  for (auto mode : modes) write_mode_report(config.out_dir, all_records, sessions, all_predictions, mode, outcome.tables);
  return outcome;
}

std::vector<ReportTables> rebuild_report(const fs::path& out_dir) {
  const fs::path run_path = out_dir / "run.json";
  if (!fs::exists(run_path)) throw Error(ErrorCode::kStageInputMissing, "no eval run in " + out_dir.string());
  json run;
  try {
    run = json::parse(io::read_file(run_path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, run_path.string() + ": " + e.what());
  }
  auto sessions = eval_sessions(run.at("dataset").get<std::string>(), run.value("split", std::string("test")));
  const fs::path metrics_path = out_dir / "metrics.csv";
  if (!fs::exists(metrics_path)) throw Error(ErrorCode::kStageInputMissing, "missing " + metrics_path.string());
  auto records = parse_metrics_csv(io::read_file(metrics_path));

  std::vector<ReportTables> tables;
  for (const auto& m : run.at("modes")) {
    auto mode = parse_prompt_mode(m.get<std::string>());
    if (!mode) throw Error(ErrorCode::kSchemaViolation, run_path.string() + ": unknown mode");
    std::vector<PredictedResponse> predictions;
    const fs::path p = out_dir / ("predictions_" + std::string(to_string(*mode)) + ".jsonl");
    if (fs::exists(p)) predictions = parse_predictions_jsonl(io::read_file(p));
    write_mode_report(out_dir, records, sessions, predictions, *mode, tables);
  }
  return tables;
}

}  // namespace taskdialog
