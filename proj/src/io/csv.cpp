#include "neurolens/io/csv.hpp"

#include <fmt/format.h>

#include "neurolens/io/file.hpp"

namespace neurolens::io {

std::vector<CsvRow> parse_csv(std::string_view text) {
    std::vector<CsvRow> rows;
    CsvRow row;
    std::string field;
    bool quoted = false;
    bool row_started = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                quoted = true;
                row_started = true;
                break;
            case ',':
                row.push_back(std::move(field));
                field.clear();
                row_started = true;
                break;
            case '\r':
                break;
            case '\n':
                row.push_back(std::move(field));
                field.clear();
                rows.push_back(std::move(row));
                row.clear();
                row_started = false;
                break;
            default:
                field.push_back(c);
                row_started = true;
        }
    }
    if (quoted) {
        throw FormatError("CSV has an unterminated quoted field");
    }
    if (row_started || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
        return std::string(field);
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') {
            out.push_back('"');
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string format_coverage_csv(const CoverageTable& table) {
    std::string out = "label,region,voxel_count,percentage\n";
    for (const auto& row : table.rows) {
        out += fmt::format("{},{},{},{:.6f}\n", row.label, csv_escape(row.region_name), row.voxel_count,
                           row.percentage);
    }
    return out;
}

void write_coverage_csv(const std::filesystem::path& path, const CoverageTable& table) {
    write_text_file(path, format_coverage_csv(table));
}

CoverageTable parse_coverage_csv(std::string_view text) {
    const auto rows = parse_csv(text);
    if (rows.empty() || rows[0] != CsvRow{"label", "region", "voxel_count", "percentage"}) {
        throw FormatError("coverage CSV must start with 'label,region,voxel_count,percentage'");
    }
    CoverageTable table;
    std::size_t total = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.size() == 1 && r[0].empty()) {
            continue;
        }
        if (r.size() != 4) {
            throw FormatError(fmt::format("coverage CSV line {}: expected 4 fields, found {}", i + 1, r.size()));
        }
        CoverageRow row;
        try {
            row.label = static_cast<std::int32_t>(std::stol(r[0]));
            row.voxel_count = static_cast<std::size_t>(std::stoull(r[2]));
        } catch (const std::exception&) {
            throw FormatError(fmt::format("coverage CSV line {}: non-numeric label or count", i + 1));
        }
        row.region_name = r[1];
        total += row.voxel_count;
        table.rows.push_back(std::move(row));
    }
    for (auto& row : table.rows) {
        row.percentage = total == 0 ? 0.0 : static_cast<double>(row.voxel_count) / static_cast<double>(total) * 100.0;
    }
    return table;
}

CoverageTable read_coverage_csv(const std::filesystem::path& path) {
    return parse_coverage_csv(read_text_file(path));
}

}  // namespace neurolens::io
