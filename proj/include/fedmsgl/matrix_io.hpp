#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fedmsgl/types.hpp"

namespace fedmsgl {

namespace detail {

inline std::vector<std::string> split_cells(const std::string& line, char delimiter) {
    std::vector<std::string> cells;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            cells.push_back(cur);
            cur.clear();
        }
    };
    for (char ch : line) {
        if (ch == delimiter || ch == ' ' || ch == '\t' || ch == '\r') {
            flush();
        } else {
            cur.push_back(ch);
        }
    }
    flush();
    return cells;
}

inline double parse_cell(const std::string& cell, const std::string& path, std::size_t row,
                         std::size_t col) {
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(cell, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != cell.size())
        throw IoError("non-numeric cell '" + cell + "' in " + path + " at row " +
                      std::to_string(row + 1) + ", column " + std::to_string(col + 1));
    return value;
}

}  // namespace detail

/// Reads a header-free delimited numeric matrix. Cells may be separated by
/// `delimiter`, spaces, or tabs; blank lines are ignored.
inline Matrix read_matrix(const std::string& path, char delimiter = ',') {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open matrix file: " + path);

    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        auto cells = detail::split_cells(line, delimiter);
        if (cells.empty()) {
            ++lineno;
            continue;
        }
        std::vector<double> row(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c)
            row[c] = detail::parse_cell(cells[c], path, rows.size(), c);
        if (!rows.empty() && row.size() != rows.front().size())
            throw ShapeError("ragged matrix in " + path + ": row " + std::to_string(lineno + 1) +
                             " has " + std::to_string(row.size()) + " cells, expected " +
                             std::to_string(rows.front().size()));
        rows.push_back(std::move(row));
        ++lineno;
    }
    if (rows.empty()) throw IoError("empty matrix file: " + path);

    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

/// %.17g formatting keeps the text round-trip bit-exact for finite doubles.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_matrix(const std::string& path, const Matrix& m, char delimiter = ',') {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write matrix file: " + path);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j > 0) out << delimiter;
            out << format_double(m(i, j));
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

inline IntVector read_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open labels file: " + path);
    std::vector<int> values;
    std::string line;
    while (std::getline(in, line)) {
        auto cells = detail::split_cells(line, ',');
        for (const auto& cell : cells) {
            const double v = detail::parse_cell(cell, path, values.size(), 0);
            const int label = static_cast<int>(v);
            if (static_cast<double>(label) != v)
                throw IoError("non-integer label '" + cell + "' in " + path);
            values.push_back(label);
        }
    }
    if (values.empty()) throw IoError("empty labels file: " + path);
    IntVector labels(static_cast<Eigen::Index>(values.size()));
    for (Eigen::Index i = 0; i < labels.size(); ++i) labels[i] = values[static_cast<std::size_t>(i)];
    return labels;
}

inline void write_labels(const std::string& path, const IntVector& labels) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write labels file: " + path);
    for (Eigen::Index i = 0; i < labels.size(); ++i) out << labels[i] << '\n';
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace fedmsgl
