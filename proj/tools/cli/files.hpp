#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace cartogram::cli {

/// Throws InputError when the file cannot be read.
std::string read_file(const std::filesystem::path& path);
/// Creates parent directories; throws InputError on failure.
void write_file(const std::filesystem::path& path, std::string_view content);

/// Lower-case hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

}  // namespace cartogram::cli
