// csv.hpp: numeric CSV tables written at 17 significant digits

#pragma once

#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "dimerlab/errors.hpp"
#include "dimerlab/ttm.hpp"

namespace dimerlab {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }
};

inline void write_csv(std::ostream& os, const Table& t) {
    for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << detail::fmt17(row[i]);
        os << '\n';
    }
}

inline void write_csv(const std::string& path, const Table& t) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot open " + path + " for writing");
    write_csv(f, t);
    if (!f) throw Error(ErrorKind::Io, "write failed: " + path);
}

namespace detail {

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cell);
            cell.clear();
        } else if (ch != '\r') {
            cell += ch;
        }
    }
    out.push_back(cell);
    return out;
}

} // namespace detail

/// Reads a header row plus numeric rows; `name` prefixes error messages.
inline Table read_csv(std::istream& is, const std::string& name = "csv") {
    Table t;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto cells = detail::split_line(line);
        if (t.header.empty()) {
            t.header = cells;
            continue;
        }
        if (cells.size() != t.header.size())
            throw ParseError(name + ":" + std::to_string(lineno),
                             "expected " + std::to_string(t.header.size()) + " fields, found " +
                                 std::to_string(cells.size()));
        std::vector<double> row;
        for (const auto& c : cells) {
            char* end = nullptr;
            const double v = std::strtod(c.c_str(), &end);
            if (c.empty() || end != c.c_str() + c.size())
                throw ParseError(name + ":" + std::to_string(lineno), "non-numeric field '" + c + "'");
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    if (t.header.empty()) throw ParseError(name + ":1", "empty file, expected a header row");
    if (t.rows.empty()) throw ParseError(name + ":" + std::to_string(lineno + 1), "no data rows");
    return t;
}

inline Table read_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot open " + path);
    return read_csv(f, path);
}

} // namespace dimerlab
