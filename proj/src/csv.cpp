#include "expressive/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "expressive/error.hpp"

namespace expressive::csv {

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n')) --e;
    return std::string(s.substr(b, e - b));
}

std::optional<std::size_t> Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    return std::nullopt;
}

std::size_t Table::require_column(std::string_view name) const {
    if (auto c = column(name)) return *c;
    throw Error(ErrorKind::MissingColumn, std::string(name) + " (in " + source + ")");
}

Table parse(std::string_view text, std::string source) {
    Table table;
    table.source = std::move(source);

    std::vector<std::vector<std::string>> records;
    std::vector<std::size_t> lines;
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    bool cell_was_quoted = false;
    std::size_t line = 1;
    std::size_t record_line = 1;
    bool record_has_content = false;

    auto end_cell = [&] {
        cells.push_back(cell_was_quoted ? cell : trim(cell));
        cell.clear();
        cell_was_quoted = false;
    };
    auto end_record = [&] {
        end_cell();
        bool blank = cells.size() == 1 && cells[0].empty() && !record_has_content;
        if (!blank) {
            records.push_back(std::move(cells));
            lines.push_back(record_line);
        }
        cells.clear();
        record_has_content = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                cell.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!trim(cell).empty())
                    throw Error(ErrorKind::ParseError,
                                table.source + ":" + std::to_string(line) + ": stray quote inside unquoted cell");
                cell.clear();
                quoted = true;
                cell_was_quoted = true;
                record_has_content = true;
                break;
            case ',':
                end_cell();
                record_has_content = true;
                break;
            case '\r':
                break;
            case '\n':
                end_record();
                ++line;
                record_line = line;
                break;
            default:
                cell.push_back(c);
                if (c != ' ' && c != '\t') record_has_content = true;
        }
    }
    if (quoted)
        throw Error(ErrorKind::ParseError, table.source + ":" + std::to_string(record_line) + ": unterminated quote");
    if (!cell.empty() || !cells.empty() || cell_was_quoted) end_record();

    if (records.empty()) throw Error(ErrorKind::ParseError, table.source + ": empty file (no header)");
    table.header = std::move(records.front());
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != table.header.size())
            throw Error(ErrorKind::ParseError, table.source + ":" + std::to_string(lines[r]) + ": expected " +
                                                   std::to_string(table.header.size()) + " cells, found " +
                                                   std::to_string(records[r].size()));
        table.rows.push_back(Row{lines[r], std::move(records[r])});
    }
    return table;
}

Table read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
}

double to_double(const Table& table, const Row& row, std::size_t col) {
    const std::string& s = row.cells.at(col);
    auto where = [&] {
        return table.source + ":" + std::to_string(row.line) + " column '" + table.header[col] + "'";
    };
    std::string lower;
    for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "nan" || lower == "inf" || lower == "-inf" || lower == "+inf" || lower == "infinity" ||
        lower == "-infinity")
        throw Error(ErrorKind::NonFiniteValue, where() + " = " + s);
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (s.empty() || ec != std::errc() || ptr != last)
        throw Error(ErrorKind::ParseError, where() + ": not a number: '" + s + "'");
    if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteValue, where() + " = " + s);
    return v;
}

std::string escape(std::string_view cell) {
    bool needs = cell.find_first_of(",\"\n\r") != std::string_view::npos ||
                 (!cell.empty() && (cell.front() == ' ' || cell.back() == ' '));
    if (!needs) return std::string(cell);
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out << ',';
        out << escape(cells[i]);
    }
    out << '\n';
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

}  // namespace expressive::csv
