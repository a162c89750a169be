#pragma once

#include <string>
#include <vector>

#include "core/dataset.hpp"

namespace m2oe {

struct Metrics {
  TaskKind task = TaskKind::Classification;
  double acc = 0.0;          // classification
  double mae = 0.0, mse = 0.0, r2 = 0.0; // regression

  // {"acc": ...} or {"mae": ..., "mse": ..., "r2": ...}
  std::string to_json() const;
  // validation-selection score: ACC or R2, larger is better
  double selection_score() const {
    return task == TaskKind::Classification ? acc : r2;
  }
};

// Classification: accuracy at threshold 0.5. Regression: MAE, MSE and
// R^2 = 1 - SS_res / SS_tot.
Metrics compute_metrics(TaskKind task, const std::vector<double> &labels,
                        const std::vector<double> &predictions);

// population standard deviation / mean; 0 for an all-zero vector
double coefficient_of_variation(const std::vector<double> &values);

} // namespace m2oe
