#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace apulse {

struct SvgSeries {
  std::string label;
  Eigen::VectorXd mean;
  Eigen::VectorXd stderr_band;  // same length; 0 => no band
};

// Static line chart of mean F1 vs iteration with a translucent +-stderr band
// per series. Pure function of its inputs (deterministic text).
std::string render_f1_chart(const std::string& title,
                            const std::vector<SvgSeries>& series);

}  // namespace apulse
