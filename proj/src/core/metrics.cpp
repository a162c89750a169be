#include "core/metrics.hpp"

#include <cmath>

#include <json.hpp>

#include "core/error.hpp"

namespace m2oe {

std::string Metrics::to_json() const {
  nlohmann::json out;
  if (task == TaskKind::Classification) {
    out["acc"] = acc;
  } else {
    out["mae"] = mae;
    out["mse"] = mse;
    out["r2"] = r2;
  }
  return out.dump();
}

Metrics compute_metrics(TaskKind task, const std::vector<double> &labels,
                        const std::vector<double> &predictions) {
  if (labels.empty() || labels.size() != predictions.size()) {
    fail(ErrorKind::Validation, "metrics need matching non-empty label and "
                                "prediction lists");
  }
  const double n = static_cast<double>(labels.size());
  Metrics metrics;
  metrics.task = task;
  if (task == TaskKind::Classification) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const double predicted = predictions[i] >= 0.5 ? 1.0 : 0.0;
      if (predicted == labels[i]) {
        ++correct;
      }
    }
    metrics.acc = static_cast<double>(correct) / n;
    return metrics;
  }

  double abs_sum = 0.0, sq_sum = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double diff = predictions[i] - labels[i];
    abs_sum += std::fabs(diff);
    sq_sum += diff * diff;
    mean += labels[i];
  }
  mean /= n;
  double ss_tot = 0.0;
  for (double y : labels) {
    ss_tot += (y - mean) * (y - mean);
  }
  metrics.mae = abs_sum / n;
  metrics.mse = sq_sum / n;
  if (ss_tot > 0.0) {
    metrics.r2 = 1.0 - sq_sum / ss_tot;
  } else {
    metrics.r2 = sq_sum == 0.0 ? 1.0 : 0.0; // constant labels
  }
  return metrics;
}

double coefficient_of_variation(const std::vector<double> &values) {
  if (values.empty()) {
    return 0.0;
  }
  double mean = 0.0;
  for (double v : values) {
    mean += v;
  }
  mean /= static_cast<double>(values.size());
  if (mean == 0.0) {
    return 0.0;
  }
  double var = 0.0;
  for (double v : values) {
    var += (v - mean) * (v - mean);
  }
  var /= static_cast<double>(values.size());
  return std::sqrt(var) / mean;
}

} // namespace m2oe
