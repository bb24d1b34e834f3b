#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ovp/error.hpp"
#include "ovp/harness.hpp"

namespace ovp {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& text, std::size_t line, const std::string& column) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw Error(ErrorCode::IncompleteData, "line " + std::to_string(line) + ", column " +
                                               column + ": not a number '" + text + "'");
  }
  return value;
}

std::uint64_t parse_unsigned(const std::string& text, std::size_t line,
                             const std::string& column) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const unsigned long long value = std::strtoull(begin, &end, 10);
  if (end == begin || *end != '\0') {
    throw Error(ErrorCode::IncompleteData, "line " + std::to_string(line) + ", column " +
                                               column + ": not an integer '" + text + "'");
  }
  return value;
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string csv_header() {
  std::string out;
  for (const auto& c : csv_columns()) {
    if (!out.empty()) out += ',';
    out += c;
  }
  return out;
}

std::string csv_line(const ResultRow& row) {
  std::string out = row.experiment;
  out += ',' + format_double(row.sweep_value);
  out += ',' + std::to_string(row.trial);
  out += ',' + std::to_string(row.seed);
  out += ',' + std::to_string(row.n);
  out += ',' + std::to_string(row.d);
  out += ',' + row.regime;
  for (const auto& name : metric_names()) {
    out += ',';
    if (const auto v = row.get(name)) out += format_double(*v);
  }
  return out;
}

std::vector<ResultRow> read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open results file " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::IncompleteData, path + ": empty file");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split(line);
  const auto& expected = csv_columns();
  // Later schema versions only append columns, so a prefix match suffices.
  if (header.size() < expected.size() ||
      !std::equal(expected.begin(), expected.end(), header.begin())) {
    throw Error(ErrorCode::IncompleteData, path + ": unrecognized CSV header");
  }

  std::vector<ResultRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::IncompleteData,
                  path + ": line " + std::to_string(line_no) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    }
    ResultRow row;
    row.experiment = cells[0];
    row.sweep_value = parse_double(cells[1], line_no, header[1]);
    row.trial = parse_unsigned(cells[2], line_no, header[2]);
    row.seed = parse_unsigned(cells[3], line_no, header[3]);
    row.n = parse_unsigned(cells[4], line_no, header[4]);
    row.d = parse_unsigned(cells[5], line_no, header[5]);
    row.regime = cells[6];
    for (std::size_t c = 7; c < expected.size(); ++c) {
      if (!cells[c].empty()) row.set(header[c], parse_double(cells[c], line_no, header[c]));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace ovp
