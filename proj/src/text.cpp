#include "taskdialog/text.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

namespace taskdialog::text {

namespace {
bool is_space(unsigned char c) { return std::isspace(c) != 0; }
bool is_punct(unsigned char c) { return std::ispunct(c) != 0; }
}  // namespace

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto nl = s.find('\n', pos);
    if (nl == std::string_view::npos) nl = s.size();
    std::string_view line = s.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    if (nl == s.size()) break;
    pos = nl + 1;
  }
  return lines;
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_space(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](unsigned char x, unsigned char y) {
           return std::tolower(x) == std::tolower(y);
         });
}

bool icontains(std::string_view haystack, std::string_view needle) {
  return to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

bool starts_with_icase(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && iequals(s.substr(0, prefix.size()), prefix);
}

std::string collapse_spaces(std::string_view s) {
  std::string out;
  for (const auto& tok : split_whitespace(s)) {
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

std::string capitalize_first(std::string_view s) {
  std::string out(s);
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

std::size_t word_count(std::string_view s) {
  std::size_t n = 0;
  for (const auto& tok : split_whitespace(s)) {
    if (std::any_of(tok.begin(), tok.end(), [](unsigned char c) { return !is_punct(c); })) ++n;
  }
  return n;
}

std::vector<std::string> metric_tokens(std::string_view s) {
  std::vector<std::string> out;
  for (const auto& raw : split_whitespace(s)) {
    std::string_view tok(raw);
    while (!tok.empty() && is_punct(static_cast<unsigned char>(tok.front()))) tok.remove_prefix(1);
    while (!tok.empty() && is_punct(static_cast<unsigned char>(tok.back()))) tok.remove_suffix(1);
    if (!tok.empty()) out.push_back(to_lower(tok));
  }
  return out;
}

std::string format_seconds(double seconds) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", seconds);
  return buf;
}

}  // namespace taskdialog::text
