#include "apulse/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "apulse/csv.hpp"
#include "apulse/numeric.hpp"

namespace apulse {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
  throw std::runtime_error(origin + ":" + std::to_string(line) + ": " + msg);
}

double parse_value(const std::string& origin, int line, const std::string& field) {
  const std::string f = trim(field);
  double v = 0.0;
  const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
  if (res.ec != std::errc() || res.ptr != f.data() + f.size())
    fail(origin, line, "malformed number '" + f + "'");
  if (!std::isfinite(v)) fail(origin, line, "non-finite value");
  return v;
}

}  // namespace

GridDataset parse_grid_dataset(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;

  if (!std::getline(in, line)) fail(origin, 1, "empty file");
  ++lineno;
  const auto header = split_fields(trim(line));
  if (header.size() < 2 || trim(header.back()) != "value")
    fail(origin, lineno, "header must be x0,...,x{d-1},value");
  const int d = static_cast<int>(header.size()) - 1;
  for (int i = 0; i < d; ++i)
    if (trim(header[i]) != "x" + std::to_string(i))
      fail(origin, lineno, "header must be x0,...,x{d-1},value");

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto fields = split_fields(t);
    if (static_cast<int>(fields.size()) != d + 1)
      fail(origin, lineno, "expected " + std::to_string(d + 1) + " fields, got " +
                               std::to_string(fields.size()));
    std::vector<double> row(d + 1);
    for (int i = 0; i <= d; ++i) row[i] = parse_value(origin, lineno, fields[i]);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(origin, lineno, "no data rows");

  GridDataset ds;
  ds.points.resize(static_cast<Eigen::Index>(rows.size()), d);
  ds.values.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < d; ++j) ds.points(static_cast<Eigen::Index>(i), j) = rows[i][j];
    ds.values(static_cast<Eigen::Index>(i)) = rows[i][d];
  }
  return ds;
}

GridDataset load_grid_dataset(const std::string& path) {
  return parse_grid_dataset(read_text_file(path), path);
}

std::string grid_dataset_to_csv(const GridDataset& dataset) {
  std::string out;
  const int d = static_cast<int>(dataset.points.cols());
  for (int j = 0; j < d; ++j) out += "x" + std::to_string(j) + ",";
  out += "value\n";
  for (Eigen::Index i = 0; i < dataset.points.rows(); ++i) {
    for (int j = 0; j < d; ++j) {
      out += format_double(dataset.points(i, j));
      out += ',';
    }
    out += format_double(dataset.values(i));
    out += '\n';
  }
  return out;
}

void save_grid_dataset(const GridDataset& dataset, const std::string& path) {
  write_text_file(path, grid_dataset_to_csv(dataset));
}

}  // namespace apulse
