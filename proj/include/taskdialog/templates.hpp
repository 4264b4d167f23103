#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace taskdialog {

using TemplateVars = std::map<std::string, std::string>;

/// Named prompt templates with `{name}` placeholders (`{{` and `}}` are
/// literal braces). Built-in templates can be overridden by `<name>.txt`
/// files, where a '/' in the name maps to '__' in the file name.
class TemplateRegistry {
 public:
  TemplateRegistry();  // loads the built-in set

  static const TemplateRegistry& builtin();

  void set(std::string name, std::string body);
  bool has(std::string_view name) const;
  const std::string& body(std::string_view name) const;
  void load_overrides(const std::filesystem::path& dir);

  /// Throws kUnknownTemplate, kUnboundPlaceholder, or kUnusedVariable.
  std::string render(std::string_view name, const TemplateVars& vars) const;

 private:
  std::map<std::string, std::string, std::less<>> templates_;
};

/// Substitution on a raw template string, same rules as TemplateRegistry.
std::string render_string(std::string_view tmpl, const TemplateVars& vars);

std::string render_template(std::string_view template_name, const TemplateVars& vars);

}  // namespace taskdialog
