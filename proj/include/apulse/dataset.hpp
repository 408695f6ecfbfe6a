#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "apulse/engine.hpp"

namespace apulse {

// User-supplied grid task: n points with observed values, optionally carrying
// threshold/direction metadata from the config that referenced it.
struct GridDataset {
  Eigen::MatrixXd points;  // n x d
  Eigen::VectorXd values;
  std::optional<double> threshold;
  std::optional<Direction> direction;
};

// CSV with header x0,x1,...,x{d-1},value; one row per point; decimal-point
// floats; no missing fields. Errors name the offending line.
GridDataset load_grid_dataset(const std::string& path);
GridDataset parse_grid_dataset(const std::string& text, const std::string& origin);

void save_grid_dataset(const GridDataset& dataset, const std::string& path);
std::string grid_dataset_to_csv(const GridDataset& dataset);

}  // namespace apulse
