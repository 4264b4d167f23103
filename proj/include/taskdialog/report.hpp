#pragma once

#include <string>
#include <vector>

namespace taskdialog {

struct Violation {
  std::string kind;
  std::string detail;
};

/// Accumulates structural problems; an empty report means the input is valid.
struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  void add(std::string kind, std::string detail) {
    violations.push_back({std::move(kind), std::move(detail)});
  }
  bool contains(const std::string& kind) const {
    for (const auto& v : violations)
      if (v.kind == kind) return true;
    return false;
  }
  std::string to_string() const {
    std::string out;
    for (const auto& v : violations) {
      if (!out.empty()) out += "; ";
      out += v.kind + ": " + v.detail;
    }
    return out;
  }
};

}  // namespace taskdialog
