#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace taskdialog::csv {

struct Row {
  std::size_t line = 0;  // 1-based source line where the row starts
  std::vector<std::string> fields;
};

/// RFC 4180 reader: quoted fields, doubled quotes, CRLF, and newlines inside
/// quotes. Blank lines are skipped. Throws Error(kMalformedRow) on an
/// unterminated quote.
std::vector<Row> parse(std::string_view content);

std::string escape(std::string_view field);
std::string join(const std::vector<std::string>& fields);

}  // namespace taskdialog::csv
