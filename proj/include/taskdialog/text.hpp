#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace taskdialog::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool icontains(std::string_view haystack, std::string_view needle);
std::string collapse_spaces(std::string_view s);
std::string capitalize_first(std::string_view s);
bool starts_with_icase(std::string_view s, std::string_view prefix);

/// Whitespace tokens after dropping tokens made only of punctuation.
/// This is the word count used for every corpus statistic.
std::size_t word_count(std::string_view s);

/// Metric tokenization: lowercase, whitespace split, surrounding punctuation
/// stripped, empty tokens dropped.
std::vector<std::string> metric_tokens(std::string_view s);

/// Fixed three-decimal rendering used for every serialized time value.
std::string format_seconds(double seconds);

}  // namespace taskdialog::text
