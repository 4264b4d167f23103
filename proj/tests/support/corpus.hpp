#pragma once

#include <string>
#include <vector>

#include "taskdialog/dataset.hpp"

namespace taskdialog::fixture {

struct StratumCount {
  std::string task;
  SpeechStyle style;
  ActionType action;
  int sessions;
};

/// Synthetic 507-session layout: five cooking tasks recorded both concise and
/// regular-follow plus 15 regular-error sessions each, and four narrated tasks
/// in regular-follow only. Category totals are 180 / 252 / 75.
inline std::vector<StratumCount> full_scale_strata() {
  using S = SpeechStyle;
  using A = ActionType;
  std::vector<StratumCount> out;
  const std::vector<std::pair<std::string, int>> cooking{
      {"make pour-over coffee", 32}, {"make tea", 32}, {"make oatmeal", 36}, {"make pinwheels", 40}, {"make quesadilla", 40}};
  for (const auto& [task, n] : cooking) {
    out.push_back({task, S::kConcise, A::kFollow, n});
    out.push_back({task, S::kRegular, A::kFollow, n});
    out.push_back({task, S::kRegular, A::kError, 15});
  }
  const std::vector<std::pair<std::string, int>> narrated{
      {"make coffee", 17}, {"jump start a car", 17}, {"change a tire", 17}, {"repot a plant", 21}};
  for (const auto& [task, n] : narrated) out.push_back({task, S::kRegular, A::kFollow, n});
  return out;
}

/// Sessions carrying only the fields the split looks at.
inline std::vector<Session> sessions_for(const std::vector<StratumCount>& strata) {
  std::vector<Session> out;
  for (const auto& s : strata)
    for (int i = 0; i < s.sessions; ++i) {
      Session x;
      x.task = s.task;
      x.style = s.style;
      x.action_type = s.action;
      x.source_recording_id = s.task + "#" + std::to_string(i);
      x.session_id = make_session_id(x.source_recording_id, s.style, s.action);
      out.push_back(std::move(x));
    }
  return out;
}

}  // namespace taskdialog::fixture
