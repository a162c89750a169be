#pragma once

#include <cstdint>
#include <vector>

#include "core/tensor.hpp"

namespace m2oe {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction. Parameters with an empty gradient buffer are
// treated as having zero gradient.
class AdamOptimizer {
public:
  AdamOptimizer(std::vector<Tensor> params, const AdamConfig &config);

  void step();
  void zero_grad();
  std::int64_t step_count() const { return step_count_; }

private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> first_moment_;
  std::vector<std::vector<double>> second_moment_;
  AdamConfig config_;
  std::int64_t step_count_ = 0;
};

} // namespace m2oe
