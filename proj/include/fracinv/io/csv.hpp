#pragma once

#include "fracinv/error.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fracinv::io {

struct CsvTable {
    std::vector<std::string> header; // empty when the first row is numeric
    std::vector<std::vector<double>> rows;
};

namespace detail {

inline std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
        cells.push_back(cell);
    if (!line.empty() && line.back() == ',')
        cells.emplace_back();
    return cells;
}

inline std::string trim(std::string s)
{
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

inline bool parse_double(const std::string& text, double& out)
{
    const std::string t = trim(text);
    if (t.empty())
        return false;
    char* end = nullptr;
    out = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size();
}

} // namespace detail

/// Reads a comma-separated numeric table with an optional header row.
/// Blank lines and lines starting with '#' are skipped.
inline CsvTable read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        fail(ErrorKind::ConfigError, "cannot open " + path.string());
    CsvTable table;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = detail::trim(line);
        if (line.empty() || line.front() == '#')
            continue;
        const auto cells = detail::split(line);
        std::vector<double> row;
        bool numeric = true;
        for (const auto& c : cells) {
            double v = 0.0;
            numeric = numeric && detail::parse_double(c, v);
            row.push_back(v);
        }
        if (!numeric) {
            if (table.rows.empty() && table.header.empty()) {
                for (const auto& c : cells)
                    table.header.push_back(detail::trim(c));
                continue;
            }
            fail(ErrorKind::ConfigError, path.string() + ":" + std::to_string(lineno) + ": non-numeric value");
        }
        if (!table.rows.empty() && row.size() != table.rows.front().size())
            fail(ErrorKind::ConfigError, path.string() + ":" + std::to_string(lineno) + ": expected "
                                             + std::to_string(table.rows.front().size()) + " columns, found "
                                             + std::to_string(row.size()));
        table.rows.push_back(std::move(row));
    }
    if (table.rows.empty())
        fail(ErrorKind::ConfigError, path.string() + ": no data rows");
    return table;
}

inline std::string format_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Writes columns of equal length under a header, full precision.
inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& columns)
{
    for (const auto& c : columns)
        if (c.size() != columns.front().size())
            fail(ErrorKind::InvalidParameters, "csv columns differ in length");
    std::ofstream out(path);
    if (!out)
        fail(ErrorKind::ConfigError, "cannot write " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i)
        out << (i ? "," : "") << header[i];
    out << '\n';
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c)
            out << (c ? "," : "") << format_number(columns[c][r]);
        out << '\n';
    }
}

} // namespace fracinv::io
