#pragma once

#include <string>
#include <string_view>

#include "taskdialog/llm_client.hpp"
#include "taskdialog/templates.hpp"

namespace taskdialog {

/// Backend plus the sampling settings used by one pipeline stage.
struct LlmContext {
  LlmBackend& backend;
  const TemplateRegistry& templates = TemplateRegistry::builtin();
  std::string model_id;
  double temperature = kGenerationTemperature;
  int max_output_tokens = kDialogueMaxTokens;

  PromptRequest request(std::string_view system_template, std::string_view user_template, const TemplateVars& vars,
                        std::string tag) const {
    PromptRequest r;
    r.system_text = templates.render(system_template, {});
    r.user_text = templates.render(user_template, vars);
    r.temperature = temperature;
    r.max_output_tokens = max_output_tokens;
    r.model_id = model_id;
    r.tag = std::move(tag);
    return r;
  }

  Completion call(const PromptRequest& r) const { return backend.complete(r); }
};

}  // namespace taskdialog
