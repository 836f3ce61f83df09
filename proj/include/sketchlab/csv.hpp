#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sketchlab/errors.hpp"
#include "sketchlab/sketch_core.hpp"

namespace sketchlab {

// Shortest representation of x that parses back to exactly x.
inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

// Row-major numeric CSV, no header; decimal or scientific notation.
inline Mat parse_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos) comma = line.size();
      std::string cell = line.substr(pos, comma - pos);
      // trim spaces
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      if (b == std::string::npos)
        throw NonNumeric("empty cell in '" + path + "'");
      cell = cell.substr(b, e - b + 1);
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        row.push_back(v);
      } catch (const std::exception&) {
        throw NonNumeric("cell '" + cell + "' in '" + path + "' is not a number");
      }
      pos = comma + 1;
      if (comma == line.size()) break;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw RaggedRows("row " + std::to_string(rows.size() + 1) + " of '" + path +
                       "' has " + std::to_string(row.size()) + " cells, expected " +
                       std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("'" + path + "' contains no data");
  Mat M(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < M.rows(); ++i)
    for (Index j = 0; j < M.cols(); ++j)
      M(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return M;
}

inline void write_matrix_csv(const std::string& path, const Mat& M) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) {
      if (j) out << ',';
      out << format_double(M(i, j));
    }
    out << '\n';
  }
}

inline Vec parse_vector_csv(const std::string& path) {
  const Mat M = parse_matrix_csv(path);
  if (M.cols() == 1) return M.col(0);
  if (M.rows() == 1) return M.row(0).transpose();
  throw BadDimension("'" + path + "' is not a vector");
}

}  // namespace sketchlab
