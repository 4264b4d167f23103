#include "taskdialog/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <json.hpp>

#include "taskdialog/csv.hpp"
#include "taskdialog/error.hpp"
#include "taskdialog/io.hpp"
#include "taskdialog/svg.hpp"
#include "taskdialog/text.hpp"

namespace taskdialog {

using json = nlohmann::json;

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  return std::nullopt;
}

std::string make_session_id(const std::string& recording_id, SpeechStyle style, ActionType action_type) {
  std::string key = recording_id + '\x1f' + std::string(to_string(style)) + '\x1f' + std::string(to_string(action_type));
  return io::sha256_hex(key).substr(0, 16);
}

Session assemble(const Conversation& conv, const InstructionSet& set) {
  auto report = validate(conv, set);
  if (!report.ok()) throw Error(ErrorCode::kValidationFailure, set.recording_id + ": " + report.to_string());
  Session s;
  s.session_id = make_session_id(set.recording_id, conv.style, conv.action_type);
  s.task = set.task;
  s.style = conv.style;
  s.action_type = conv.action_type;
  s.instruction_set = set;
  s.conversation = conv;
  s.source_recording_id = set.recording_id;
  return s;
}

// ---------------------------------------------------------------------------
// Split

std::array<std::size_t, 3> SplitAssignment::totals() const {
  std::array<std::size_t, 3> t{0, 0, 0};
  for (const auto& [id, split] : by_session) ++t[static_cast<std::size_t>(split)];
  return t;
}

std::array<std::size_t, 3> stratum_sizes(std::size_t n, const SplitRatios& ratios) {
  const double dn = static_cast<double>(n);
  auto test = static_cast<std::size_t>(std::ceil(ratios.test * dn - 1e-9));
  auto val = static_cast<std::size_t>(std::floor(ratios.val * dn + 1e-9));
  test = std::min(test, n);
  val = std::min(val, n - test);
  return {n - test - val, val, test};
}

namespace {

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Uniform integer in [0, bound] by rejection; mt19937_64 output is fixed by
// the standard, unlike std::uniform_int_distribution.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t range = bound + 1;
  if (range == 0) return rng();
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % range;
}

}  // namespace

SplitAssignment stratified_split(const std::vector<Session>& sessions, const SplitRatios& ratios, std::uint64_t seed) {
  if (sessions.empty()) throw Error(ErrorCode::kEmptyCorpus, "no sessions to split");
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9)
    throw Error(ErrorCode::kInvalidArgument, "split ratios must be non-negative and sum to 1");

  std::map<std::string, std::vector<std::string>> strata;
  for (const auto& s : sessions) {
    std::string key = s.task + '\x1f' + std::string(to_string(s.style)) + '\x1f' + std::string(to_string(s.action_type));
    strata[key].push_back(s.session_id);
  }

  SplitAssignment out;
  out.seed = seed;
  out.ratios = ratios;
  for (auto& [key, ids] : strata) {
    std::sort(ids.begin(), ids.end());
    std::mt19937_64 rng(seed ^ (fnv1a64(key) * 0x9E3779B97F4A7C15ULL));
    for (std::size_t i = ids.size(); i-- > 1;) std::swap(ids[i], ids[bounded(rng, i)]);
    auto sizes = stratum_sizes(ids.size(), ratios);
    std::size_t pos = 0;
    for (std::size_t part = 0; part < 3; ++part)
      for (std::size_t k = 0; k < sizes[part]; ++k) out.by_session[ids[pos++]] = static_cast<Split>(part);
  }
  return out;
}

void apply_split(std::vector<Session>& sessions, const SplitAssignment& assignment) {
  for (auto& s : sessions) {
    auto it = assignment.by_session.find(s.session_id);
    if (it != assignment.by_session.end()) s.split = it->second;
  }
}

// ---------------------------------------------------------------------------
// Statistics

Distribution make_distribution(std::vector<double> values) {
  Distribution d;
  std::sort(values.begin(), values.end());
  d.count = values.size();
  if (!values.empty()) {
    double sum = 0;
    for (double v : values) sum += v;
    d.mean = sum / static_cast<double>(values.size());
    d.min = values.front();
    d.max = values.back();
    std::size_t mid = values.size() / 2;
    d.median = values.size() % 2 ? values[mid] : (values[mid - 1] + values[mid]) / 2.0;
  }
  d.values = std::move(values);
  return d;
}

StatsReport compute_stats(const std::vector<Session>& sessions) {
  StatsReport r;
  std::map<std::string, std::vector<double>> user_by_cat;
  std::vector<double> user_all, expert_all, clips;
  for (const auto& s : sessions) {
    auto& task = r.per_task[s.task];
    ++task.sessions;
    task.turns += s.conversation.turns.size();
    const std::string cat = std::string(to_string(s.style)) + "-" + std::string(to_string(s.action_type));
    for (const auto& t : s.conversation.turns) {
      auto uw = static_cast<double>(text::word_count(t.user_text));
      user_by_cat[cat].push_back(uw);
      user_all.push_back(uw);
      expert_all.push_back(static_cast<double>(text::word_count(t.expert_text)));
      if (t.span) {
        task.video_seconds += t.span->length();
        clips.push_back(t.span->length());
      }
    }
  }
  for (const auto& [name, t] : r.per_task) {
    r.total_sessions += t.sessions;
    r.total_turns += t.turns;
  }
  // Sum clip lengths in sorted order so the total does not depend on session order.
  r.clip_seconds = make_distribution(std::move(clips));
  for (double v : r.clip_seconds.values) r.total_video_seconds += v;
  r.mean_turns_per_session = r.total_sessions ? static_cast<double>(r.total_turns) / static_cast<double>(r.total_sessions) : 0.0;
  for (auto& [cat, values] : user_by_cat) r.user_words_by_category[cat] = make_distribution(std::move(values));
  r.user_words = make_distribution(std::move(user_all));
  r.expert_words = make_distribution(std::move(expert_all));
  return r;
}

void write_stats_report(const StatsReport& report, const std::filesystem::path& dir) {
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return std::string(buf);
  };
  std::string per_task = "task,sessions,turns,mean_turns,video_seconds\n";
  std::vector<svg::Bar> bars;
  for (const auto& [name, t] : report.per_task) {
    double mean = t.sessions ? static_cast<double>(t.turns) / static_cast<double>(t.sessions) : 0.0;
    per_task += csv::join({name, std::to_string(t.sessions), std::to_string(t.turns), fmt(mean), fmt(t.video_seconds)}) + "\n";
    bars.push_back({name, mean});
  }
  per_task += csv::join({"TOTAL", std::to_string(report.total_sessions), std::to_string(report.total_turns),
                         fmt(report.mean_turns_per_session), fmt(report.total_video_seconds)}) + "\n";
  io::write_file_atomic(dir / "per_task.csv", per_task);
  io::write_file_atomic(dir / "per_task_turns.svg", svg::bar_chart(bars, "Average turns per session by task", "turns"));

  std::string dists = "distribution,count,mean,median,min,max\n";
  auto row = [&](const std::string& name, const Distribution& d) {
    dists += csv::join({name, std::to_string(d.count), fmt(d.mean), fmt(d.median), fmt(d.min), fmt(d.max)}) + "\n";
  };
  for (const auto& [cat, d] : report.user_words_by_category) {
    row("user_words/" + cat, d);
    io::write_file_atomic(dir / ("user_words_" + cat + ".svg"),
                          svg::histogram(d.values, 0, 30, 15, "User turn length (" + cat + ")", "words"));
  }
  row("user_words/all", report.user_words);
  row("expert_words/all", report.expert_words);
  row("clip_seconds/all", report.clip_seconds);
  io::write_file_atomic(dir / "distributions.csv", dists);
  io::write_file_atomic(dir / "expert_words.svg",
                        svg::histogram(report.expert_words.values, 0, 60, 20, "Expert turn length", "words"));
  io::write_file_atomic(dir / "clip_seconds.svg",
                        svg::histogram(report.clip_seconds.values, 0, 120, 24, "User-turn clip length", "seconds"));
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json span_json(const std::optional<TimeSpan>& span) {
  if (!span) return nullptr;
  return json{{"start_s", span->start}, {"end_s", span->end}};
}

class Reader {
 public:
  Reader(std::size_t line) : line_(line) {}

  [[noreturn]] void fail(const std::string& path, const std::string& what) const {
    throw Error(ErrorCode::kSchemaViolation, "line " + std::to_string(line_) + ": " + path + " " + what);
  }

  const json& field(const json& obj, const std::string& key, const std::string& path) const {
    if (!obj.is_object()) fail(path, "is not an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(path + "/" + key, "is missing");
    return *it;
  }

  std::string str(const json& obj, const std::string& key, const std::string& path) const {
    const auto& v = field(obj, key, path);
    if (!v.is_string()) fail(path + "/" + key, "must be a string");
    return v.get<std::string>();
  }

  int integer(const json& obj, const std::string& key, const std::string& path) const {
    const auto& v = field(obj, key, path);
    if (!v.is_number_integer()) fail(path + "/" + key, "must be an integer");
    return v.get<int>();
  }

  bool boolean(const json& obj, const std::string& key, const std::string& path) const {
    const auto& v = field(obj, key, path);
    if (!v.is_boolean()) fail(path + "/" + key, "must be a boolean");
    return v.get<bool>();
  }

  const json& array(const json& obj, const std::string& key, const std::string& path) const {
    const auto& v = field(obj, key, path);
    if (!v.is_array()) fail(path + "/" + key, "must be an array");
    return v;
  }

  std::optional<TimeSpan> span(const json& obj, const std::string& key, const std::string& path) const {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    const std::string p = path + "/" + key;
    if (!it->is_object()) fail(p, "must be an object or null");
    auto num = [&](const char* k) {
      const auto& v = field(*it, k, p);
      if (!v.is_number()) fail(p + "/" + k, "must be a number");
      return v.get<double>();
    };
    TimeSpan s{num("start_s"), num("end_s")};
    if (!s.valid()) fail(p, "must satisfy 0 <= start_s < end_s");
    return s;
  }

 private:
  std::size_t line_;
};

}  // namespace

namespace {

json steps_json(const InstructionSet& set) {
  json out = json::array();
  for (const auto& st : set.steps) {
    out.push_back({
        {"ordinal", st.ordinal},
        {"text", st.text},
        {"is_correction", st.is_correction},
        {"span", span_json(st.span)},
        {"source_refs", st.source_refs},
        {"caveats", st.caveats},
    });
  }
  return out;
}

json turns_json(const Conversation& conv) {
  json out = json::array();
  for (const auto& t : conv.turns) {
    out.push_back({
        {"index", t.index},
        {"kind", std::string(to_string(t.kind))},
        {"step_ordinal", t.step_ordinal ? json(*t.step_ordinal) : json(nullptr)},
        {"user_text", t.user_text},
        {"expert_text", t.expert_text},
        {"span", span_json(t.span)},
        {"clip_path", t.clip_path},
    });
  }
  return out;
}

json parse_object(const Reader& rd, std::string_view line) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::exception& e) {
    rd.fail("/", std::string("is not valid JSON: ") + e.what());
  }
  if (!obj.is_object()) rd.fail("/", "must be an object");
  if (auto it = obj.find("schema_version"); it != obj.end() && (!it->is_number_integer() || it->get<int>() > kSchemaVersion))
    rd.fail("/schema_version", "is unsupported");
  return obj;
}

void read_steps(const Reader& rd, const json& obj, InstructionSet& set) {
  auto prov = parse_provenance(obj.value("provenance", std::string("narration_llm")));
  if (!prov) rd.fail("/provenance", "is unknown");
  set.provenance = *prov;
  const auto& instructions = rd.array(obj, "instructions", "");
  for (std::size_t i = 0; i < instructions.size(); ++i) {
    const std::string p = "/instructions/" + std::to_string(i);
    const auto& ji = instructions[i];
    InstructionStep st;
    st.ordinal = rd.integer(ji, "ordinal", p);
    st.text = rd.str(ji, "text", p);
    st.is_correction = rd.boolean(ji, "is_correction", p);
    st.span = rd.span(ji, "span", p);
    if (ji.contains("source_refs")) {
      for (const auto& r : rd.array(ji, "source_refs", p)) {
        if (!r.is_number_integer()) rd.fail(p + "/source_refs", "must hold integers");
        st.source_refs.push_back(r.get<int>());
      }
    }
    if (ji.contains("caveats")) {
      for (const auto& c : rd.array(ji, "caveats", p)) {
        if (!c.is_string()) rd.fail(p + "/caveats", "must hold strings");
        st.caveats.push_back(c.get<std::string>());
      }
    }
    set.steps.push_back(std::move(st));
  }
}

void read_turns(const Reader& rd, const json& obj, Conversation& conv) {
  const auto& turns = rd.array(obj, "turns", "");
  for (std::size_t i = 0; i < turns.size(); ++i) {
    const std::string p = "/turns/" + std::to_string(i);
    const auto& jt = turns[i];
    DialogueTurn t;
    t.index = rd.integer(jt, "index", p);
    auto kind = parse_turn_kind(rd.str(jt, "kind", p));
    if (!kind) rd.fail(p + "/kind", "is unknown");
    t.kind = *kind;
    if (auto it = jt.find("step_ordinal"); it != jt.end() && !it->is_null()) {
      if (!it->is_number_integer()) rd.fail(p + "/step_ordinal", "must be an integer or null");
      t.step_ordinal = it->get<int>();
    }
    t.user_text = rd.str(jt, "user_text", p);
    t.expert_text = rd.str(jt, "expert_text", p);
    t.span = rd.span(jt, "span", p);
    if (jt.contains("clip_path")) t.clip_path = rd.str(jt, "clip_path", p);
    conv.turns.push_back(std::move(t));
  }
}

void read_style_action(const Reader& rd, const json& obj, SpeechStyle& style, ActionType& action) {
  auto s = parse_speech_style(rd.str(obj, "style", ""));
  if (!s) rd.fail("/style", "must be concise|regular");
  style = *s;
  auto a = parse_action_type(rd.str(obj, "action_type", ""));
  if (!a) rd.fail("/action_type", "must be follow|error");
  action = *a;
}

}  // namespace

std::string session_to_json_line(const Session& s) {
  json obj = {
      {"schema_version", kSchemaVersion},
      {"session_id", s.session_id},
      {"task", s.task},
      {"style", std::string(to_string(s.style))},
      {"action_type", std::string(to_string(s.action_type))},
      {"split", s.split ? json(std::string(to_string(*s.split))) : json(nullptr)},
      {"source_recording_id", s.source_recording_id},
      {"provenance", std::string(to_string(s.instruction_set.provenance))},
      {"instructions", steps_json(s.instruction_set)},
      {"turns", turns_json(s.conversation)},
  };
  return obj.dump();
}

Session session_from_json_line(std::string_view line, std::size_t line_no) {
  Reader rd(line_no);
  json obj = parse_object(rd, line);
  Session s;
  s.session_id = rd.str(obj, "session_id", "");
  s.task = rd.str(obj, "task", "");
  read_style_action(rd, obj, s.style, s.action_type);
  if (auto it = obj.find("split"); it != obj.end() && !it->is_null()) {
    if (!it->is_string() || !parse_split(it->get<std::string>())) rd.fail("/split", "must be train|val|test|null");
    s.split = parse_split(it->get<std::string>());
  }
  s.source_recording_id = rd.str(obj, "source_recording_id", "");

  s.instruction_set.task = s.task;
  s.instruction_set.recording_id = s.source_recording_id;
  read_steps(rd, obj, s.instruction_set);

  s.conversation.task = s.task;
  s.conversation.style = s.style;
  s.conversation.action_type = s.action_type;
  s.conversation.source_recording_id = s.source_recording_id;
  read_turns(rd, obj, s.conversation);
  return s;
}

std::string instruction_set_to_json_line(const InstructionSet& set) {
  json obj = {
      {"schema_version", kSchemaVersion},
      {"recording_id", set.recording_id},
      {"task", set.task},
      {"provenance", std::string(to_string(set.provenance))},
      {"instructions", steps_json(set)},
  };
  return obj.dump();
}

InstructionSet instruction_set_from_json_line(std::string_view line, std::size_t line_no) {
  Reader rd(line_no);
  json obj = parse_object(rd, line);
  InstructionSet set;
  set.recording_id = rd.str(obj, "recording_id", "");
  set.task = rd.str(obj, "task", "");
  read_steps(rd, obj, set);
  return set;
}

std::string conversation_to_json_line(const Conversation& conv) {
  json obj = {
      {"schema_version", kSchemaVersion},
      {"source_recording_id", conv.source_recording_id},
      {"task", conv.task},
      {"style", std::string(to_string(conv.style))},
      {"action_type", std::string(to_string(conv.action_type))},
      {"turns", turns_json(conv)},
  };
  return obj.dump();
}

Conversation conversation_from_json_line(std::string_view line, std::size_t line_no) {
  Reader rd(line_no);
  json obj = parse_object(rd, line);
  Conversation conv;
  conv.source_recording_id = rd.str(obj, "source_recording_id", "");
  conv.task = rd.str(obj, "task", "");
  read_style_action(rd, obj, conv.style, conv.action_type);
  read_turns(rd, obj, conv);
  return conv;
}

std::string serialize_dataset(const std::vector<Session>& sessions) {
  std::string out;
  for (const auto& s : sessions) out += session_to_json_line(s) + "\n";
  return out;
}

std::vector<Session> parse_dataset(std::string_view jsonl) {
  std::vector<Session> out;
  std::size_t line_no = 0;
  for (const auto& line : text::split_lines(jsonl)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    out.push_back(session_from_json_line(line, line_no));
  }
  return out;
}

void write_dataset(const std::vector<Session>& sessions, const std::filesystem::path& path) {
  io::write_file_atomic(path, serialize_dataset(sessions));
}

std::vector<Session> read_dataset(const std::filesystem::path& path) {
  std::string content;
  try {
    content = io::read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::kIOFailure, e.what());
  }
  return parse_dataset(content);
}

std::filesystem::path resolve_clip(const std::filesystem::path& dataset_root, const DialogueTurn& turn) {
  if (turn.clip_path.empty()) return {};
  return dataset_root / turn.clip_path;
}

}  // namespace taskdialog
