#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "neurolens/core.hpp"

namespace neurolens::io {

using CsvRow = std::vector<std::string>;

/// RFC 4180 style: comma separated, double-quoted fields may contain commas,
/// quotes ("") and newlines. CRLF and LF line endings are both accepted.
/// Throws FormatError on an unterminated quote.
std::vector<CsvRow> parse_csv(std::string_view text);

/// Quotes a field only when it contains a comma, quote or line break.
std::string csv_escape(std::string_view field);

/// Columns: label,region,voxel_count,percentage (percentage with 6 decimals).
std::string format_coverage_csv(const CoverageTable& table);
void write_coverage_csv(const std::filesystem::path& path, const CoverageTable& table);

/// Inverse of format_coverage_csv. Percentages are recomputed from the counts.
CoverageTable parse_coverage_csv(std::string_view text);
CoverageTable read_coverage_csv(const std::filesystem::path& path);

}  // namespace neurolens::io
