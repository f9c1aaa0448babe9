#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace neurolens::io {

/// Whole-file read. Throws InputError naming the path if it cannot be opened.
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

/// Reads a file that may be gzip-compressed; plain files pass through unchanged.
std::vector<std::uint8_t> read_maybe_gzip(const std::filesystem::path& path);

/// Throws InputError if the path is not writable.
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace neurolens::io
