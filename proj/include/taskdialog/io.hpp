#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace taskdialog::io {

/// Reads a whole file; throws Error(kMissingFile) naming the path.
std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames over the target so readers
/// never observe a partial file. Throws Error(kIOFailure).
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Lowercase hex SHA-256 of the input.
std::string sha256_hex(std::string_view data);

}  // namespace taskdialog::io
