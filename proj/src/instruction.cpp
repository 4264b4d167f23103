#include "taskdialog/instruction.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <regex>
#include <set>

#include "taskdialog/error.hpp"
#include "taskdialog/io.hpp"
#include "taskdialog/localize.hpp"
#include "taskdialog/text.hpp"

namespace taskdialog {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kNarrationLlm: return "narration_llm";
    case Provenance::kAnnotationMerge: return "annotation_merge";
    case Provenance::kAnnotationCluster: return "annotation_cluster";
  }
  return "narration_llm";
}

std::optional<Provenance> parse_provenance(std::string_view s) {
  if (s == "narration_llm") return Provenance::kNarrationLlm;
  if (s == "annotation_merge") return Provenance::kAnnotationMerge;
  if (s == "annotation_cluster") return Provenance::kAnnotationCluster;
  return std::nullopt;
}

bool InstructionSet::has_corrections() const {
  return std::any_of(steps.begin(), steps.end(), [](const auto& s) { return s.is_correction; });
}

bool InstructionSet::has_caveats() const {
  return std::any_of(steps.begin(), steps.end(), [](const auto& s) { return !s.caveats.empty(); });
}

const InstructionStep* InstructionSet::step(int ordinal) const {
  if (ordinal < 1 || ordinal > static_cast<int>(steps.size())) return nullptr;
  return &steps[static_cast<std::size_t>(ordinal - 1)];
}

ValidationReport validate_instruction_set(const InstructionSet& set) {
  ValidationReport report;
  if (set.steps.size() < 2) report.add("too few steps", std::to_string(set.steps.size()) + " step(s)");
  for (std::size_t i = 0; i < set.steps.size(); ++i) {
    const auto& s = set.steps[i];
    if (s.ordinal != static_cast<int>(i) + 1)
      report.add("ordinal gap", "position " + std::to_string(i + 1) + " has ordinal " + std::to_string(s.ordinal));
    if (text::trim(s.text).empty()) report.add("empty step", std::to_string(s.ordinal));
    if (s.span && !s.span->valid()) report.add("invalid span", std::to_string(s.ordinal));
  }
  if (set.provenance != Provenance::kNarrationLlm) {
    for (std::size_t i = 1; i < set.steps.size(); ++i) {
      const auto& a = set.steps[i - 1].span;
      const auto& b = set.steps[i].span;
      if (a && b && b->start < a->start)
        report.add("non-monotone spans", "step " + std::to_string(i + 1) + " starts before step " + std::to_string(i));
    }
  }
  return report;
}

namespace {

std::vector<int> parse_ref_list(std::string_view s) {
  std::vector<int> out;
  std::string cleaned(s);
  // En dash to hyphen.
  for (auto pos = cleaned.find("\xE2\x80\x93"); pos != std::string::npos; pos = cleaned.find("\xE2\x80\x93"))
    cleaned.replace(pos, 3, "-");
  static const std::regex kItem(R"((\d+)\s*(?:-\s*(\d+))?)");
  for (std::sregex_iterator it(cleaned.begin(), cleaned.end(), kItem), end; it != end; ++it) {
    int a = std::stoi((*it)[1]);
    int b = (*it)[2].matched ? std::stoi((*it)[2]) : a;
    if (b < a) std::swap(a, b);
    if (b - a > 10000) continue;
    for (int k = a; k <= b; ++k) out.push_back(k);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string strip_markdown(std::string_view s) {
  std::string out;
  for (char c : s)
    if (c != '*' && c != '`') out += c;
  return out;
}

}  // namespace

std::vector<ParsedStep> parse_enumerated_steps(std::string_view completion) {
  static const std::regex kItem(R"(^\s*(?:step\s*)?(\d+)\s*[.):]\s+(.+)$)", std::regex::icase);
  static const std::regex kRefs(R"([\[(]\s*(?:cues?|refs?)\s*:?\s*([0-9,\s\-\xE2\x80\x93]*)[\])])", std::regex::icase);
  static const std::regex kCaveat(R"(^\s*(?:[-*]\s*)?(?:caveat|note|tip|warning)\s*:\s*(.+)$)", std::regex::icase);

  std::vector<ParsedStep> steps;
  for (const auto& raw_line : text::split_lines(completion)) {
    std::string line = strip_markdown(raw_line);
    std::smatch m;
    if (std::regex_match(line, m, kCaveat)) {
      std::string caveat = text::collapse_spaces(m[1].str());
      if (!caveat.empty() && !steps.empty()) steps.back().caveats.push_back(std::move(caveat));
      continue;
    }
    if (!std::regex_match(line, m, kItem)) continue;
    std::string body = m[2].str();
    ParsedStep step;
    std::smatch rm;
    if (std::regex_search(body, rm, kRefs)) {
      step.cue_refs = parse_ref_list(rm[1].str());
      body = rm.prefix().str() + rm.suffix().str();
    }
    step.text = text::capitalize_first(text::collapse_spaces(body));
    if (!step.text.empty()) steps.push_back(std::move(step));
  }
  return steps;
}

namespace {

const std::set<std::string>& action_verbs() {
  static const std::set<std::string> kVerbs = {
      "add",     "adjust",  "align",   "apply",   "arrange",  "attach",  "bake",    "beat",     "blend",
      "boil",    "break",   "bring",   "brew",    "brush",    "check",   "chill",   "chop",     "clamp",
      "clean",   "close",   "combine", "connect", "cook",     "cool",    "crack",   "cut",      "dice",
      "dig",     "dip",     "discard", "disconnect", "drain", "drizzle", "drop",    "dry",      "empty",
      "fasten",  "fill",    "flip",    "fold",    "fry",      "gather",  "get",     "grab",     "grate",
      "grind",   "grill",   "heat",    "hold",    "insert",   "install", "jack",    "knead",    "lay",
      "lift",    "loosen",  "lower",   "measure", "melt",     "microwave", "mix",   "move",     "open",
      "pack",    "peel",    "pick",    "place",   "plug",     "position", "pour",   "prepare",  "press",
      "pull",    "push",    "put",     "raise",   "remove",   "repeat",  "replace", "rinse",    "roll",
      "rotate",  "scoop",   "scrape",  "screw",   "season",   "secure",  "serve",   "shake",    "simmer",
      "slice",   "soak",    "spread",  "sprinkle", "squeeze", "start",   "steep",   "stir",     "store",
      "strain",  "take",    "tap",     "tighten", "toast",    "transfer", "trim",   "turn",     "twist",
      "unplug",  "unscrew", "unwrap",  "wait",    "wash",     "whisk",   "wipe",    "wrap",
  };
  return kVerbs;
}

}  // namespace

int count_action_clauses(std::string_view step_text) {
  std::string normalized;
  for (char c : step_text) {
    if (c == ',' || c == ';') {
      normalized += " , ";
    } else {
      normalized += c;
    }
  }
  std::vector<std::string> raw = text::split_whitespace(text::to_lower(normalized));
  int clauses = 1;
  for (std::size_t i = 0; i + 1 < raw.size(); ++i) {
    const std::string& t = raw[i];
    bool boundary = t == "and" || t == "then" || t == "," || t == ";";
    if (!boundary) continue;
    std::size_t j = i + 1;
    while (j < raw.size() && (raw[j] == "then" || raw[j] == "and" || raw[j] == ",")) ++j;
    if (j >= raw.size()) break;
    std::string next = raw[j];
    while (!next.empty() && std::ispunct(static_cast<unsigned char>(next.back()))) next.pop_back();
    if (action_verbs().contains(next)) {
      ++clauses;
      i = j;
    }
  }
  return clauses;
}

namespace {

std::string render_transcript(const std::vector<SubtitleEntry>& subtitles) {
  std::string out;
  for (const auto& s : subtitles) {
    out += "[" + std::to_string(s.index) + "] (" + text::format_seconds(s.span.start) + "-" +
           text::format_seconds(s.span.end) + ") " + s.text + "\n";
  }
  return out;
}

// Empty string when usable; otherwise a description fed back to the model.
std::string check_extraction(const std::vector<ParsedStep>& steps) {
  if (steps.empty()) return "no numbered list was found";
  if (steps.size() < 2) return "only one step was listed; the task needs at least two atomic steps";
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (count_action_clauses(steps[i].text) > 1)
      return "step " + std::to_string(i + 1) + " (\"" + steps[i].text + "\") contains more than one action";
  }
  return {};
}

}  // namespace

InstructionSet extract_from_narration(const std::vector<SubtitleEntry>& subtitles, const std::string& task,
                                      const std::string& recording_id, const LlmContext& llm) {
  if (subtitles.empty()) throw Error(ErrorCode::kPreconditionViolation, recording_id + ": no subtitle entries");
  const std::string transcript = render_transcript(subtitles);
  auto first = llm.call(llm.request("extract_steps/system", "extract_steps/user",
                                    {{"task", task}, {"transcript", transcript}}, "extract:" + recording_id));
  auto parsed = parse_enumerated_steps(first.text);
  std::string problem = check_extraction(parsed);
  if (!problem.empty()) {
    spdlog::info("{}: extraction retry ({})", recording_id, problem);
    auto second = llm.call(llm.request("extract_steps/system", "extract_steps/retry",
                                       {{"task", task}, {"transcript", transcript}, {"problem", problem}},
                                       "extract-retry:" + recording_id));
    auto reparsed = parse_enumerated_steps(second.text);
    if (reparsed.empty())
      throw Error(ErrorCode::kUnparseableCompletion, recording_id + ": no enumerated steps after retry");
    if (reparsed.size() < 2) throw Error(ErrorCode::kEmptySteps, recording_id + ": fewer than two steps after retry");
    auto still = check_extraction(reparsed);
    if (!still.empty()) spdlog::warn("{}: accepting non-atomic output after retry ({})", recording_id, still);
    parsed = std::move(reparsed);
  }

  InstructionSet set;
  set.task = task;
  set.recording_id = recording_id;
  set.provenance = Provenance::kNarrationLlm;
  const int max_index = static_cast<int>(subtitles.size());
  for (auto& p : parsed) {
    InstructionStep step;
    step.ordinal = static_cast<int>(set.steps.size()) + 1;
    step.text = std::move(p.text);
    for (int ref : p.cue_refs) {
      if (ref >= 1 && ref <= max_index) step.source_refs.push_back(ref);
      else spdlog::warn("{}: step {} cites unknown cue {}", recording_id, step.ordinal, ref);
    }
    step.caveats = std::move(p.caveats);
    set.steps.push_back(std::move(step));
  }
  try {
    auto spans = localize_from_subtitles(set, subtitles);
    for (auto& step : set.steps) {
      auto it = spans.entries.find(step.ordinal);
      if (it != spans.entries.end()) step.span = it->second;
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoLocalizableSteps) throw;
    spdlog::warn("{}: no step cites a cue; spans left empty", recording_id);
  }
  return set;
}

namespace {

bool marks_correction(const StepAnnotation& a) {
  auto label = a.error_label.value_or(ErrorLabel::kNormal);
  return label == ErrorLabel::kModification || label == ErrorLabel::kCorrection;
}

}  // namespace

InstructionSet normalize_annotated_steps(const std::vector<StepAnnotation>& steps, const std::string& task,
                                         const std::string& recording_id, const LlmContext& llm) {
  if (steps.empty()) throw Error(ErrorCode::kPreconditionViolation, recording_id + ": no step annotations");

  InstructionSet set;
  set.task = task;
  set.recording_id = recording_id;
  set.provenance = Provenance::kAnnotationMerge;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& a = steps[i];
    const std::string key = text::to_lower(text::collapse_spaces(a.description));
    bool merge = !labels.empty() && text::to_lower(text::collapse_spaces(labels.back())) == key;
    if (merge) {
      auto& step = set.steps.back();
      step.span = TimeSpan{std::min(step.span->start, a.span.start), std::max(step.span->end, a.span.end)};
      step.source_refs.push_back(static_cast<int>(i) + 1);
      step.is_correction = step.is_correction || marks_correction(a);
      continue;
    }
    InstructionStep step;
    step.ordinal = static_cast<int>(set.steps.size()) + 1;
    step.text = a.description;
    step.span = a.span;
    step.is_correction = marks_correction(a);
    step.source_refs.push_back(static_cast<int>(i) + 1);
    set.steps.push_back(std::move(step));
    labels.push_back(a.description);
  }

  std::string numbered;
  for (std::size_t i = 0; i < labels.size(); ++i) numbered += std::to_string(i + 1) + ". " + labels[i] + "\n";
  auto completion = llm.call(llm.request("normalize_steps/system", "normalize_steps/user",
                                         {{"task", task}, {"labels", numbered}}, "normalize:" + recording_id));
  auto rewritten = parse_enumerated_steps(completion.text);
  if (rewritten.size() != set.steps.size())
    throw Error(ErrorCode::kUnparseableCompletion, recording_id + ": expected " + std::to_string(set.steps.size()) +
                                                       " rewritten steps, got " + std::to_string(rewritten.size()));
  for (std::size_t i = 0; i < rewritten.size(); ++i) set.steps[i].text = std::move(rewritten[i].text);
  if (set.steps.size() < 2) throw Error(ErrorCode::kEmptySteps, recording_id + ": fewer than two steps after merging");
  return set;
}

InstructionSet cluster_and_filter_steps(const std::vector<StepAnnotation>& steps,
                                        const std::vector<std::string>& stoplist, const std::string& task,
                                        const std::string& recording_id, const LlmContext& llm) {
  if (steps.empty()) throw Error(ErrorCode::kPreconditionViolation, recording_id + ": no step annotations");

  std::vector<std::size_t> kept;  // indices into steps
  for (std::size_t i = 0; i < steps.size(); ++i) {
    bool generic = std::any_of(stoplist.begin(), stoplist.end(), [&](const std::string& pattern) {
      return !text::trim(pattern).empty() && text::icontains(steps[i].description, text::trim(pattern));
    });
    if (!generic) kept.push_back(i);
  }
  if (kept.empty()) throw Error(ErrorCode::kAllStepsFiltered, recording_id);

  std::vector<bool> same(kept.size(), false);  // same[k]: kept[k] joins kept[k-1]
  if (kept.size() >= 2) {
    std::string pairs;
    for (std::size_t k = 1; k < kept.size(); ++k) {
      pairs += std::to_string(k) + ". " + steps[kept[k - 1]].description + " || " + steps[kept[k]].description + "\n";
    }
    auto completion = llm.call(llm.request("cluster_steps/system", "cluster_steps/user",
                                           {{"task", task}, {"pairs", pairs}}, "cluster:" + recording_id));
    static const std::regex kAnswer(R"(^\s*(?:pair\s*)?(\d+)\s*[:.)\-]\s*(yes|no)\b)", std::regex::icase);
    std::size_t answered = 0;
    for (const auto& line : text::split_lines(completion.text)) {
      std::smatch m;
      if (!std::regex_search(line, m, kAnswer)) continue;
      std::size_t k = std::stoul(m[1].str());
      if (k < 1 || k >= kept.size()) continue;
      same[k] = text::iequals(m[2].str(), "yes");
      ++answered;
    }
    if (answered == 0)
      throw Error(ErrorCode::kUnparseableCompletion, recording_id + ": no yes/no answers in clustering reply");
  }

  InstructionSet set;
  set.task = task;
  set.recording_id = recording_id;
  set.provenance = Provenance::kAnnotationCluster;
  std::vector<std::size_t> members;
  auto flush = [&] {
    if (members.empty()) return;
    InstructionStep step;
    step.ordinal = static_cast<int>(set.steps.size()) + 1;
    // The longest member action names the cluster.
    std::size_t rep = members.front();
    TimeSpan span = steps[rep].span;
    for (std::size_t idx : members) {
      if (steps[idx].span.length() > steps[rep].span.length()) rep = idx;
      span.start = std::min(span.start, steps[idx].span.start);
      span.end = std::max(span.end, steps[idx].span.end);
      step.source_refs.push_back(static_cast<int>(idx) + 1);
      step.is_correction = step.is_correction || marks_correction(steps[idx]);
    }
    step.text = text::capitalize_first(text::collapse_spaces(steps[rep].description));
    step.span = span;
    set.steps.push_back(std::move(step));
    members.clear();
  };
  for (std::size_t k = 0; k < kept.size(); ++k) {
    if (k > 0 && !same[k]) flush();
    members.push_back(kept[k]);
  }
  flush();
  return set;
}

std::vector<std::string> default_stoplist() {
  return {
      "open drawer",      "close drawer",      "open the drawer",   "close the drawer",   "open container",
      "close container",  "open the container", "close the container", "open lid",       "close lid",
      "open cabinet",     "close cabinet",     "open fridge",       "close fridge",       "open refrigerator",
      "close refrigerator", "move container",  "put away container", "wash hands",      "wash hand",
      "dry hands",        "turn on faucet",    "turn off faucet",
  };
}

std::vector<std::string> load_stoplist(const std::filesystem::path& path) {
  std::vector<std::string> out;
  for (const auto& line : text::split_lines(io::read_file(path))) {
    auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    out.emplace_back(t);
  }
  return out;
}

std::string mark_corrections(const InstructionSet& set, std::string_view special_token) {
  std::string out;
  for (const auto& step : set.steps) {
    if (!special_token.empty() && step.text.find(special_token) != std::string::npos)
      throw Error(ErrorCode::kTokenCollision, "step " + std::to_string(step.ordinal) + " contains '" +
                                                  std::string(special_token) + "'");
    if (step.is_correction) {
      out += std::string(special_token) + " ";
    }
    out += std::to_string(step.ordinal) + ". " + step.text + "\n";
  }
  return out;
}

}  // namespace taskdialog
