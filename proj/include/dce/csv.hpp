#pragma once

// Minimal CSV support: header + string cells in, numeric tables out.
// Handles UTF-8 BOM, CRLF, configurable delimiter, and double-quoted fields
// (the UCI export wraps every value in quotes).

#include <charconv>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "dce/errors.hpp"

namespace dce {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line, char delimiter) {
    std::vector<std::string> cells;
    std::string cell;
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {  // escaped quote
                    cell.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cell.push_back(ch);
            }
        } else if (ch == '"') {
            in_quotes = true;
        } else if (ch == delimiter) {
            cells.push_back(cell);
            cell.clear();
        } else if (ch != '\r') {
            cell.push_back(ch);
        }
    }
    cells.push_back(cell);
    return cells;
}

inline bool parse_finite_double(const std::string& text, double& out) {
    const char* begin = text.data();
    const char* end = begin + text.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t')) --end;
    if (begin == end) return false;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value)) return false;
    out = value;
    return true;
}

}  // namespace detail

inline CsvTable read_csv(const std::string& path, char delimiter = ',') {
    std::ifstream in(path);
    if (!in) throw DataError("read_csv: cannot open " + path);
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw DataError("read_csv: " + path + " is empty");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
        static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF)
        line.erase(0, 3);
    table.header = detail::split_csv_line(line, delimiter);
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        table.rows.push_back(detail::split_csv_line(line, delimiter));
    }
    return table;
}

}  // namespace dce
