#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "l2h/error.hpp"
#include "l2h/matrix.hpp"

namespace l2h {

namespace detail {

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

/// Splits on '\n', dropping a trailing '\r' from each line and a final empty line.
inline std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = end + 1;
    }
    while (!lines.empty() && lines.back().find_first_not_of(" \t") == std::string_view::npos) {
        lines.pop_back();
    }
    return lines;
}

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

} // namespace detail

/// Parses comma-separated numeric rows into a double-precision matrix.
inline RealMatrix read_csv_matrix(const std::string& path, bool has_header = false) {
    const std::string text = detail::read_text_file(path);
    const auto lines = detail::split_lines(text);
    const std::size_t first = has_header ? 1 : 0;
    if (lines.size() <= first) throw FormatError(path + ": empty CSV file");

    std::vector<double> values;
    std::size_t cols = 0;
    for (std::size_t li = first; li < lines.size(); ++li) {
        std::size_t n = 0;
        std::size_t start = 0;
        const auto line = lines[li];
        while (true) {
            auto comma = line.find(',', start);
            const auto cell = detail::trim(line.substr(start, comma == std::string_view::npos
                                                                  ? std::string_view::npos
                                                                  : comma - start));
            double v = 0;
            const auto* end = cell.data() + cell.size();
            auto [ptr, ec] = std::from_chars(cell.data(), end, v);
            if (cell.empty() || ec != std::errc{} || ptr != end) {
                throw FormatError(path + ": non-numeric cell '" + std::string(cell) + "' at line " +
                                  std::to_string(li + 1));
            }
            values.push_back(v);
            ++n;
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (li == first) {
            cols = n;
        } else if (n != cols) {
            throw FormatError(path + ": ragged row at line " + std::to_string(li + 1) + " (" +
                              std::to_string(n) + " cells, expected " + std::to_string(cols) + ")");
        }
    }
    const std::size_t rows = lines.size() - first;
    return RealMatrix(rows, cols, std::move(values));
}

} // namespace l2h
