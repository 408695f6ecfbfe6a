#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "apulse/engine.hpp"

namespace apulse {

// Per-iteration trace: iteration,x[0..d-1],y,f1,wall_ms
std::string run_result_to_csv(const RunResult& result);

// Aggregated curve: iteration,mean_f1,stderr
std::string curve_to_csv(const RepeatStats& stats);

struct CurveRow {
  int iteration = 0;
  double mean_f1 = 0.0;
  double stderr_f1 = 0.0;
};
// Load-side counterpart for round-trip checks.
std::vector<CurveRow> parse_curve_csv(const std::string& text);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace apulse
