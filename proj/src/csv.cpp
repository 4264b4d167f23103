#include "taskdialog/csv.hpp"

#include "taskdialog/error.hpp"

namespace taskdialog::csv {

std::vector<Row> parse(std::string_view content) {
  std::vector<Row> rows;
  Row current;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  current.line = 1;

  auto end_field = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    bool blank = current.fields.size() == 1 && current.fields[0].empty();
    if (!blank) rows.push_back(std::move(current));
    current = Row{};
    current.line = line;
  };

  for (std::size_t i = 0; i < content.size(); ++i) {
    char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field_started || field.find_first_not_of(" \t") == std::string::npos) {
          field.clear();
          in_quotes = true;
          field_started = true;
        } else {
          field += c;
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        ++line;
        end_row();
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (in_quotes) throw Error(ErrorCode::kMalformedRow, "unterminated quote starting on line " + std::to_string(current.line));
  if (field_started || !field.empty() || !current.fields.empty()) end_row();
  return rows;
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += escape(fields[i]);
  }
  return out;
}

}  // namespace taskdialog::csv
