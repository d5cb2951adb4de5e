#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "shapdec/core.hpp"

namespace shapdec {

/// A CSV table split into features and an optional target column.
struct Dataset {
  FeatureMatrix features;
  std::optional<Vector> target;
  std::string target_name;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') quoted = !quoted;
    else if (c == ',' && !quoted) {
      out.push_back(trim(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  out.push_back(trim(cell));
  return out;
}

inline double parse_number(const std::string& cell, std::size_t line, const std::string& column) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v))
    throw IngestionError("line " + std::to_string(line) + ", column '" + column + "': '" + cell +
                         "' is not a finite number");
  return v;
}

}  // namespace detail

/// Reads a CSV file with a header row of column names and numeric cells.
/// When `target` is non-empty that column becomes the target vector and is
/// removed from the features.
inline Dataset read_csv(std::istream& in, const std::string& target = "", const std::string& source = "input") {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) {
      header = detail::split_csv_line(line);
      break;
    }
  }
  if (header.empty()) throw IngestionError(source + " has no header row");
  for (auto& h : header) {
    if (h.size() >= 2 && h.front() == '"' && h.back() == '"') h = h.substr(1, h.size() - 2);
    if (h.empty()) throw IngestionError(source + " has an empty column name");
  }

  std::optional<std::size_t> target_col;
  if (!target.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == target) target_col = c;
    if (!target_col) throw IngestionError(source + " has no target column '" + target + "'");
  }

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw IngestionError(source + " line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                           " cells, expected " + std::to_string(header.size()));
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) row[c] = detail::parse_number(cells[c], line_no, header[c]);
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) throw IngestionError(source + " needs at least two data rows");

  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (!target_col || c != *target_col) names.push_back(header[c]);
  if (names.empty()) throw IngestionError(source + " has no feature columns");
  Matrix values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
  Vector y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Eigen::Index f = 0;
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (target_col && c == *target_col) y[static_cast<Eigen::Index>(r)] = rows[r][c];
      else values(static_cast<Eigen::Index>(r), f++) = rows[r][c];
    }
  }

  Dataset ds;
  try {
    ds.features = FeatureMatrix(std::move(names), std::move(values));
  } catch (const Error& e) {
    throw IngestionError(source + ": " + e.what());
  }
  if (target_col) {
    ds.target = std::move(y);
    ds.target_name = target;
  }
  return ds;
}

inline Dataset read_csv(const std::string& path, const std::string& target = "") {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open '" + path + "'");
  return read_csv(in, target, "'" + path + "'");
}

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : std::to_string(v);
}

inline void write_csv(std::ostream& out, const std::vector<std::string>& names, const Matrix& values) {
  if (static_cast<Eigen::Index>(names.size()) != values.cols()) throw SizeError("name count does not match columns");
  for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << names[c];
  out << '\n';
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) out << (c ? "," : "") << format_double(values(r, c));
    out << '\n';
  }
}

inline void write_csv(const std::string& path, const std::vector<std::string>& names, const Matrix& values) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write '" + path + "'");
  write_csv(out, names, values);
}

/// Parses "1,2.5,-3" into a vector.
inline Vector parse_vector(const std::string& text) {
  const auto cells = detail::split_csv_line(text);
  Vector v(static_cast<Eigen::Index>(cells.size()));
  for (std::size_t k = 0; k < cells.size(); ++k)
    v[static_cast<Eigen::Index>(k)] = detail::parse_number(cells[k], 1, "value " + std::to_string(k));
  return v;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestionError("cannot write '" + path + "'");
  out << text;
}

}  // namespace shapdec
