#include "apulse/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "apulse/numeric.hpp"

namespace apulse {

std::string run_result_to_csv(const RunResult& result) {
  const Eigen::Index d = result.selected_points.cols();
  std::ostringstream out;
  out << "iteration";
  for (Eigen::Index k = 0; k < d; ++k) out << ",x" << k;
  out << ",y,f1,wall_ms\n";
  for (Eigen::Index i = 0; i < result.selected_points.rows(); ++i) {
    out << (i + 1);
    for (Eigen::Index k = 0; k < d; ++k)
      out << ',' << format_double(result.selected_points(i, k));
    out << ',' << format_double(result.observations(i));
    out << ',' << format_double(result.f1_curve(i));
    out << ',' << format_double(result.wall_ms[static_cast<std::size_t>(i)]);
    out << '\n';
  }
  return out.str();
}

std::string curve_to_csv(const RepeatStats& stats) {
  std::ostringstream out;
  out << "iteration,mean_f1,stderr\n";
  for (Eigen::Index i = 0; i < stats.mean_curve.size(); ++i)
    out << (i + 1) << ',' << format_double(stats.mean_curve(i)) << ','
        << format_double(stats.stderr_curve(i)) << '\n';
  return out.str();
}

namespace {

double field_to_double(const std::string& f, int lineno) {
  double v = 0.0;
  const auto r = std::from_chars(f.data(), f.data() + f.size(), v);
  if (r.ec != std::errc{} || r.ptr != f.data() + f.size())
    throw std::runtime_error("curve csv line " + std::to_string(lineno) +
                             ": bad number '" + f + "'");
  return v;
}

}  // namespace

std::vector<CurveRow> parse_curve_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<CurveRow> rows;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1) {
      if (line != "iteration,mean_f1,stderr")
        throw std::runtime_error("curve csv: unexpected header '" + line + "'");
      continue;
    }
    std::stringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') ||
        !std::getline(ss, c, ','))
      throw std::runtime_error("curve csv line " + std::to_string(lineno) +
                               ": expected 3 fields");
    std::string extra;
    if (std::getline(ss, extra, ','))
      throw std::runtime_error("curve csv line " + std::to_string(lineno) +
                               ": expected 3 fields");
    CurveRow row;
    row.iteration = static_cast<int>(field_to_double(a, lineno));
    row.mean_f1 = field_to_double(b, lineno);
    row.stderr_f1 = field_to_double(c, lineno);
    rows.push_back(row);
  }
  return rows;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace apulse
