#include "taskdialog/templates.hpp"

#include <cctype>
#include <set>

#include "taskdialog/error.hpp"
#include "taskdialog/io.hpp"

namespace taskdialog {

namespace {

// Prompt texts are editable assets; they document intent rather than
// reproducing any particular published prompt.
const std::map<std::string, std::string, std::less<>>& builtin_templates() {
  static const std::map<std::string, std::string, std::less<>> kTemplates = {
      {"extract_steps/system",
       "You are an expert instructor. You turn the transcript of a narrated how-to video into a "
       "complete, itemized list of atomic instruction steps. Every step holds exactly one action "
       "(one main verb phrase) written as a short imperative sentence. Use your own knowledge of "
       "the task to add steps the narrator implies but does not say."},
      {"extract_steps/user",
       "Task: {task}\n"
       "\n"
       "Transcript cues (index, start-end seconds, text):\n"
       "{transcript}\n"
       "\n"
       "Return a numbered list with one step per line in the form\n"
       "<number>. <imperative step> [cues: <cue indices or ranges, e.g. 3-5,7>]\n"
       "List the cues in which the narrator performs or describes the step. If the narrator warns "
       "about something or gives a tip for a step, add an indented line below it starting with "
       "\"caveat:\". Output nothing else."},
      {"extract_steps/retry",
       "Task: {task}\n"
       "\n"
       "Transcript cues (index, start-end seconds, text):\n"
       "{transcript}\n"
       "\n"
       "Your previous answer could not be used: {problem}\n"
       "Answer again. Output ONLY a numbered list, one atomic step per line, exactly in the form\n"
       "<number>. <imperative step with a single action> [cues: <cue indices>]\n"
       "optionally followed by indented \"caveat:\" lines. Split any step that has two actions."},
      {"normalize_steps/system",
       "You rewrite terse action labels from an annotated cooking or repair video into clear, "
       "fluent imperative instructions. Keep the meaning; do not add or drop steps."},
      {"normalize_steps/user",
       "Task: {task}\n"
       "\n"
       "Action labels:\n"
       "{labels}\n"
       "\n"
       "Rewrite each label as one imperative instruction. Keep the same numbering and the same "
       "number of lines. Output only the numbered list."},
      {"cluster_steps/system",
       "You group consecutive actions from a task recording into sub-tasks."},
      {"cluster_steps/user",
       "Task: {task}\n"
       "\n"
       "Each numbered line below is a pair of consecutive actions (A || B). For every pair decide "
       "whether both actions belong to the same sub-task.\n"
       "{pairs}\n"
       "\n"
       "Reply with one line per pair in the form \"<number>: yes\" or \"<number>: no\"."},
      {"dialogue/system",
       "You write realistic conversations between a novice user wearing smart glasses and an "
       "expert who guides them through a task one step at a time. The user does not know the "
       "instructions; the expert knows all of them."},
      {"dialogue/user",
       "Task: {task}\n"
       "\n"
       "Instruction steps:\n"
       "{steps}\n"
       "\n"
       "{style_hint}\n"
       "{action_hint}\n"
       "\n"
       "Write the conversation as a script. Every turn starts with a marker line followed by one "
       "\"USER:\" line and one \"EXPERT:\" line. Markers:\n"
       "#init - the user asks how to do the task; the expert gets them ready.\n"
       "#step=<k> - the expert gives step k. Use each step number exactly once, in order.\n"
       "#error=<k> - only where allowed above.\n"
       "#closing - the user has finished every step; the expert wraps up.\n"
       "{attempt_note}"},
      {"dialogue/style_concise",
       "User speech style: concise. Keep every USER line to about 3-4 words (e.g. \"Done. Next?\")."},
      {"dialogue/style_regular",
       "User speech style: regular. USER lines are natural spoken sentences of about 10-11 words."},
      {"dialogue/action_follow",
       "The user performs every step correctly. Do not write any #error turns."},
      {"dialogue/action_error",
       "Steps starting with {token} involve a user mistake. Directly after the #step=<k> turn of "
       "each such step, add one #error=<k> turn in which the user describes what they did wrong "
       "and the expert explains how to correct it."},
      {"clarify/system",
       "You write short clarification exchanges for a task-assistance conversation."},
      {"clarify/user",
       "Task: {task}\n"
       "\n"
       "For each caveat below, write one exchange where the user asks about the detail and the "
       "expert answers using the caveat. Format each exchange as\n"
       "#caveat=<id>\n"
       "USER: <question>\n"
       "EXPERT: <answer>\n"
       "\n"
       "Caveats:\n"
       "{caveats}"},
      {"eval/hint",
       "You are an expert assistant guiding a user through the task \"{task}\" over smart "
       "glasses. Reply with the next instruction only, one step at a time, and answer the user's "
       "questions briefly."},
      {"eval/hint_steps",
       "You are an expert assistant guiding a user through the task \"{task}\" over smart "
       "glasses. Reply with the next instruction only, one step at a time, and answer the user's "
       "questions briefly.\n"
       "\n"
       "Instruction steps for this task:\n"
       "{steps}"},
      {"judge/system",
       "You are a careful evaluator of responses from a task-assistance agent."},
      {"judge/user_reference",
       "Task: {task}\n"
       "\n"
       "Conversation so far:\n"
       "{history}\n"
       "\n"
       "Reference expert response:\n"
       "{reference}\n"
       "\n"
       "Candidate expert response:\n"
       "{candidate}\n"
       "\n"
       "Judge whether the candidate gives the user the right next guidance, compared with the "
       "reference. Use a 1-5 scale: 1 wrong or unhelpful, 3 partially right, 5 equivalent to the "
       "reference. Explain your reasoning briefly and end with a line \"Score: <1-5>\"."},
      {"judge/user_free",
       "Task: {task}\n"
       "\n"
       "Conversation so far:\n"
       "{history}\n"
       "\n"
       "Candidate expert response:\n"
       "{candidate}\n"
       "\n"
       "Judge whether the candidate gives the user correct and helpful next guidance for this "
       "task. Use a 1-5 scale: 1 wrong or unhelpful, 3 partially right, 5 fully correct. Explain "
       "your reasoning briefly and end with a line \"Score: <1-5>\"."},
      {"judge/reask",
       "{original}\n"
       "\n"
       "Your previous reply did not end with a usable score. Answer again and finish with "
       "\"Score: <n>\" where n is a single integer from 1 to 5."},
  };
  return kTemplates;
}

bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

std::string render_string(std::string_view tmpl, const TemplateVars& vars) {
  std::string out;
  std::set<std::string> used;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    char c = tmpl[i];
    if (c == '{' && i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
      out += '{';
      ++i;
      continue;
    }
    if (c == '}' && i + 1 < tmpl.size() && tmpl[i + 1] == '}') {
      out += '}';
      ++i;
      continue;
    }
    if (c == '{') {
      std::size_t j = i + 1;
      while (j < tmpl.size() && is_ident_char(tmpl[j])) ++j;
      if (j > i + 1 && j < tmpl.size() && tmpl[j] == '}') {
        std::string name(tmpl.substr(i + 1, j - i - 1));
        auto it = vars.find(name);
        if (it == vars.end()) throw Error(ErrorCode::kUnboundPlaceholder, "{" + name + "}");
        out += it->second;
        used.insert(name);
        i = j;
        continue;
      }
    }
    out += c;
  }
  for (const auto& [name, value] : vars)
    if (!used.contains(name)) throw Error(ErrorCode::kUnusedVariable, name);
  return out;
}

TemplateRegistry::TemplateRegistry() : templates_(builtin_templates()) {}

const TemplateRegistry& TemplateRegistry::builtin() {
  static const TemplateRegistry kRegistry;
  return kRegistry;
}

void TemplateRegistry::set(std::string name, std::string body) { templates_[std::move(name)] = std::move(body); }

bool TemplateRegistry::has(std::string_view name) const { return templates_.find(name) != templates_.end(); }

const std::string& TemplateRegistry::body(std::string_view name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw Error(ErrorCode::kUnknownTemplate, std::string(name));
  return it->second;
}

void TemplateRegistry::load_overrides(const std::filesystem::path& dir) {
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::string name = entry.path().stem().string();
    for (auto pos = name.find("__"); pos != std::string::npos; pos = name.find("__", pos + 1))
      name.replace(pos, 2, "/");
    set(name, io::read_file(entry.path()));
  }
}

std::string TemplateRegistry::render(std::string_view name, const TemplateVars& vars) const {
  return render_string(body(name), vars);
}

std::string render_template(std::string_view template_name, const TemplateVars& vars) {
  return TemplateRegistry::builtin().render(template_name, vars);
}

}  // namespace taskdialog
