#include "taskdialog/dialogue.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <map>
#include <regex>
#include <set>

#include "taskdialog/error.hpp"
#include "taskdialog/text.hpp"

namespace taskdialog {

std::string_view to_string(SpeechStyle s) { return s == SpeechStyle::kConcise ? "concise" : "regular"; }
std::string_view to_string(ActionType a) { return a == ActionType::kFollow ? "follow" : "error"; }

std::string_view to_string(TurnKind k) {
  switch (k) {
    case TurnKind::kTaskInit: return "task_init";
    case TurnKind::kStep: return "step";
    case TurnKind::kClarification: return "clarification";
    case TurnKind::kErrorReport: return "error_report";
    case TurnKind::kClosing: return "closing";
  }
  return "step";
}

std::optional<SpeechStyle> parse_speech_style(std::string_view s) {
  if (s == "concise") return SpeechStyle::kConcise;
  if (s == "regular") return SpeechStyle::kRegular;
  return std::nullopt;
}

std::optional<ActionType> parse_action_type(std::string_view s) {
  if (s == "follow") return ActionType::kFollow;
  if (s == "error") return ActionType::kError;
  return std::nullopt;
}

std::optional<TurnKind> parse_turn_kind(std::string_view s) {
  for (auto k : {TurnKind::kTaskInit, TurnKind::kStep, TurnKind::kClarification, TurnKind::kErrorReport,
                 TurnKind::kClosing})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

namespace {

struct Marker {
  TurnKind kind;
  std::optional<int> ordinal;
};

std::optional<Marker> parse_marker(const std::string& line) {
  static const std::regex kMarker(
      R"(^\s*#\s*(init|closing|step\s*=\s*(\d+)|error\s*=\s*(\d+)|clarification\s*=\s*(\d+))\s*$)",
      std::regex::icase);
  std::smatch m;
  if (!std::regex_match(line, m, kMarker)) return std::nullopt;
  std::string head = text::to_lower(m[1].str());
  if (head == "init") return Marker{TurnKind::kTaskInit, std::nullopt};
  if (head == "closing") return Marker{TurnKind::kClosing, std::nullopt};
  if (m[2].matched) return Marker{TurnKind::kStep, std::stoi(m[2].str())};
  if (m[3].matched) return Marker{TurnKind::kErrorReport, std::stoi(m[3].str())};
  return Marker{TurnKind::kClarification, std::stoi(m[4].str())};
}

// Returns the speaker tag ("user"/"expert") and the remainder of the line.
std::optional<std::pair<std::string, std::string>> parse_speaker(const std::string& raw) {
  static const std::regex kSpeaker(R"(^\s*\**\s*(user|expert)\s*\**\s*:\s*\**\s*(.*)$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(raw, m, kSpeaker)) return std::nullopt;
  return std::make_pair(text::to_lower(m[1].str()), m[2].str());
}

}  // namespace

std::vector<DialogueTurn> parse_dialogue_script(std::string_view script) {
  struct Pending {
    std::optional<Marker> marker;
    std::string user, expert;
    bool has_user = false, has_expert = false;
  };
  std::vector<Pending> blocks;
  Pending cur;
  std::string* last_field = nullptr;
  auto started = [&] { return cur.marker || cur.has_user || cur.has_expert; };
  auto flush = [&] {
    if (started()) blocks.push_back(cur);
    cur = Pending{};
    last_field = nullptr;
  };

  for (const auto& line : text::split_lines(script)) {
    if (auto marker = parse_marker(line)) {
      flush();
      cur.marker = marker;
      continue;
    }
    if (auto speaker = parse_speaker(line)) {
      if (speaker->first == "user") {
        if (cur.has_user || cur.has_expert) flush();
        cur.has_user = true;
        cur.user = speaker->second;
        last_field = &cur.user;
      } else {
        if (cur.has_expert) flush();
        cur.has_expert = true;
        cur.expert = speaker->second;
        last_field = &cur.expert;
      }
      continue;
    }
    if (last_field && !text::trim(line).empty()) *last_field += " " + line;
  }
  flush();

  if (blocks.empty()) throw Error(ErrorCode::kUnparseableCompletion, "no dialogue turns found");
  std::vector<DialogueTurn> turns;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    auto& b = blocks[i];
    const std::string where = "turn " + std::to_string(i + 1);
    if (!b.has_user || !b.has_expert)
      throw Error(ErrorCode::kUnparseableCompletion, where + ": needs both USER and EXPERT lines");
    DialogueTurn t;
    t.index = static_cast<int>(i) + 1;
    t.user_text = text::collapse_spaces(b.user);
    t.expert_text = text::collapse_spaces(b.expert);
    if (b.marker) {
      t.kind = b.marker->kind;
      t.step_ordinal = b.marker->ordinal;
    } else if (i == 0) {
      t.kind = TurnKind::kTaskInit;
    } else if (i + 1 == blocks.size()) {
      t.kind = TurnKind::kClosing;
    } else {
      throw Error(ErrorCode::kUnparseableCompletion, where + ": missing turn marker");
    }
    turns.push_back(std::move(t));
  }
  return turns;
}

namespace {

std::string render_plain(const InstructionSet& set) {
  std::string out;
  for (const auto& s : set.steps) out += std::to_string(s.ordinal) + ". " + s.text + "\n";
  return out;
}

}  // namespace

Conversation generate(const InstructionSet& set, SpeechStyle style, ActionType action_type, const LlmContext& llm,
                      const DialogueOptions& options) {
  if (auto report = validate_instruction_set(set); !report.ok())
    throw Error(ErrorCode::kPreconditionViolation, set.recording_id + ": " + report.to_string());
  if (action_type == ActionType::kError && !set.has_corrections())
    throw Error(ErrorCode::kPreconditionViolation, set.recording_id + ": error mode needs a correction step");

  const auto& tpl = llm.templates;
  const bool error_mode = action_type == ActionType::kError;
  TemplateVars vars = {
      {"task", set.task},
      {"steps", error_mode ? mark_corrections(set, options.correction_token) : render_plain(set)},
      {"style_hint", tpl.render(style == SpeechStyle::kConcise ? "dialogue/style_concise" : "dialogue/style_regular", {})},
      {"action_hint", error_mode ? tpl.render("dialogue/action_error", {{"token", options.correction_token}})
                                 : tpl.render("dialogue/action_follow", {})},
      {"attempt_note", ""},
  };
  const std::string tag = "dialogue:" + set.recording_id + ":" + std::string(to_string(style)) + "-" +
                          std::string(to_string(action_type));

  Conversation conv;
  conv.task = set.task;
  conv.style = style;
  conv.action_type = action_type;
  conv.source_recording_id = set.recording_id;

  std::string problem;
  bool parse_failed = false;
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (attempt == 1) {
      vars["attempt_note"] = "\nA previous attempt was rejected: " + problem +
                             ". Follow the marker rules exactly and cover every step.\n";
      spdlog::info("{}: regenerating ({})", tag, problem);
    }
    auto completion = llm.call(llm.request("dialogue/system", "dialogue/user", vars, tag + (attempt ? ":retry" : "")));
    try {
      conv.turns = parse_dialogue_script(completion.text);
      parse_failed = false;
    } catch (const Error& e) {
      parse_failed = true;
      problem = e.what();
      continue;
    }
    auto report = validate(conv, set);
    if (report.ok()) return conv;
    problem = report.to_string();
  }
  if (parse_failed) throw Error(ErrorCode::kUnparseableCompletion, tag + ": " + problem);
  throw Error(ErrorCode::kCoverageFailure, tag + ": " + problem);
}

std::vector<DialogueTurn> generate_clarifications(const InstructionSet& set, const LlmContext& llm) {
  struct Item {
    std::string id;
    int ordinal;
    std::string caveat;
  };
  std::vector<Item> items;
  for (const auto& step : set.steps)
    for (std::size_t k = 0; k < step.caveats.size(); ++k)
      items.push_back({std::to_string(step.ordinal) + "." + std::to_string(k + 1), step.ordinal, step.caveats[k]});
  if (items.empty()) return {};

  std::string listing;
  for (const auto& item : items) {
    const auto* step = set.step(item.ordinal);
    listing += item.id + " (step \"" + step->text + "\"): " + item.caveat + "\n";
  }
  auto completion = llm.call(llm.request("clarify/system", "clarify/user", {{"task", set.task}, {"caveats", listing}},
                                         "clarify:" + set.recording_id));

  static const std::regex kCaveatMarker(R"(^\s*#\s*caveat\s*=\s*(\d+\.\d+)\s*$)", std::regex::icase);
  std::map<std::string, std::pair<std::string, std::string>> answered;
  std::string current;
  for (const auto& line : text::split_lines(completion.text)) {
    std::smatch m;
    if (std::regex_match(line, m, kCaveatMarker)) {
      current = m[1].str();
      continue;
    }
    if (current.empty()) continue;
    if (auto speaker = parse_speaker(line)) {
      auto& slot = answered[current];
      (speaker->first == "user" ? slot.first : slot.second) = text::collapse_spaces(speaker->second);
    }
  }

  std::vector<DialogueTurn> turns;
  for (const auto& item : items) {
    DialogueTurn t;
    t.kind = TurnKind::kClarification;
    t.step_ordinal = item.ordinal;
    auto it = answered.find(item.id);
    if (it != answered.end() && !it->second.first.empty() && !it->second.second.empty()) {
      t.user_text = it->second.first;
      t.expert_text = it->second.second;
    } else {
      spdlog::info("{}: caveat {} unanswered by model, using fallback exchange", set.recording_id, item.id);
      t.user_text = "Is there anything I should watch out for here?";
      t.expert_text = text::capitalize_first(item.caveat);
    }
    turns.push_back(std::move(t));
  }
  return turns;
}

Conversation insert_clarifications(Conversation conv, const std::vector<DialogueTurn>& clarifications) {
  for (const auto& clar : clarifications) {
    if (!clar.step_ordinal) continue;
    const int s = *clar.step_ordinal;
    auto step_it = std::find_if(conv.turns.begin(), conv.turns.end(), [&](const DialogueTurn& t) {
      return t.kind == TurnKind::kStep && t.step_ordinal == s;
    });
    if (step_it == conv.turns.end()) continue;
    auto pos = std::next(step_it);
    while (pos != conv.turns.end() &&
           (pos->kind == TurnKind::kErrorReport || pos->kind == TurnKind::kClarification) && pos->step_ordinal == s)
      ++pos;
    DialogueTurn turn = clar;
    turn.kind = TurnKind::kClarification;
    conv.turns.insert(pos, std::move(turn));
  }
  for (std::size_t i = 0; i < conv.turns.size(); ++i) conv.turns[i].index = static_cast<int>(i) + 1;
  return conv;
}

ValidationReport validate(const Conversation& conv, const InstructionSet& set) {
  ValidationReport report;
  const int n = static_cast<int>(set.steps.size());
  if (conv.task != set.task) report.add("task mismatch", "'" + conv.task + "' vs '" + set.task + "'");
  if (conv.turns.empty()) {
    report.add("empty conversation", "no turns");
    return report;
  }
  if (conv.turns.front().kind != TurnKind::kTaskInit) report.add("ordering violation", "first turn is not task_init");
  if (conv.turns.back().kind != TurnKind::kClosing) report.add("ordering violation", "last turn is not closing");
  if (conv.action_type == ActionType::kError && !set.has_corrections())
    report.add("error mode without corrections", set.recording_id);

  std::map<int, int> step_hits;
  std::map<int, int> error_hits;
  int last_step = 0;
  for (std::size_t i = 0; i < conv.turns.size(); ++i) {
    const auto& t = conv.turns[i];
    const std::string where = "turn " + std::to_string(i + 1);
    if (t.index != static_cast<int>(i) + 1) report.add("index gap", where + " has index " + std::to_string(t.index));
    if (text::trim(t.user_text).empty()) report.add("empty text", where + " user");
    if (text::trim(t.expert_text).empty()) report.add("empty text", where + " expert");
    if ((t.kind == TurnKind::kTaskInit && i != 0) || (t.kind == TurnKind::kClosing && i + 1 != conv.turns.size()))
      report.add("ordering violation", where + " " + std::string(to_string(t.kind)) + " out of place");
    switch (t.kind) {
      case TurnKind::kStep: {
        if (!t.step_ordinal || *t.step_ordinal < 1 || *t.step_ordinal > n) {
          report.add("invalid step ordinal", where);
          break;
        }
        int k = *t.step_ordinal;
        if (++step_hits[k] > 1) report.add("duplicated step", "step " + std::to_string(k) + " duplicated");
        if (k <= last_step) report.add("ordering violation", where + " step " + std::to_string(k) + " after step " + std::to_string(last_step));
        last_step = std::max(last_step, k);
        break;
      }
      case TurnKind::kErrorReport: {
        if (conv.action_type == ActionType::kFollow) {
          report.add("error turn in follow mode", where);
          break;
        }
        if (!t.step_ordinal || !set.step(*t.step_ordinal)) {
          report.add("invalid step ordinal", where + " error report");
          break;
        }
        int k = *t.step_ordinal;
        if (!set.step(k)->is_correction) report.add("error report on normal step", where + " step " + std::to_string(k));
        if (k != last_step) report.add("ordering violation", where + " error report for step " + std::to_string(k) + " not after its step turn");
        ++error_hits[k];
        break;
      }
      case TurnKind::kClarification:
        if (!t.step_ordinal || *t.step_ordinal != last_step)
          report.add("ordering violation", where + " clarification not after its step turn");
        break;
      default:
        break;
    }
  }
  for (int k = 1; k <= n; ++k)
    if (!step_hits.contains(k)) report.add("uncovered step", "step " + std::to_string(k) + " uncovered");
  if (conv.action_type == ActionType::kError) {
    if (error_hits.empty()) report.add("missing error report", "error mode has no error_report turn");
    for (const auto& s : set.steps) {
      if (!s.is_correction) continue;
      int hits = error_hits.contains(s.ordinal) ? error_hits.at(s.ordinal) : 0;
      if (hits != 1)
        report.add("missing error report", "step " + std::to_string(s.ordinal) + " has " + std::to_string(hits) + " error report(s)");
    }
  }
  return report;
}

}  // namespace taskdialog
