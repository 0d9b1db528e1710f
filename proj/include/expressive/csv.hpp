#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace expressive::csv {

struct Row {
    std::size_t line = 0;  // 1-based source line
    std::vector<std::string> cells;
};

/// RFC-4180-ish table: quoted cells may contain commas, quotes ("") and newlines.
/// Header names are whitespace-trimmed (OpenFace writes ", timestamp").
struct Table {
    std::string source;
    std::vector<std::string> header;
    std::vector<Row> rows;

    std::optional<std::size_t> column(std::string_view name) const;
    /// Throws MissingColumn when absent.
    std::size_t require_column(std::string_view name) const;
};

Table read(const std::filesystem::path& path);
Table parse(std::string_view text, std::string source = "<memory>");

/// Strict numeric parse of one cell; throws ParseError / NonFiniteValue with location.
double to_double(const Table& table, const Row& row, std::size_t col);

std::string escape(std::string_view cell);
void write_row(std::ostream& out, const std::vector<std::string>& cells);

/// Shortest representation that round-trips exactly.
std::string format_double(double v);

std::string trim(std::string_view s);

}  // namespace expressive::csv
