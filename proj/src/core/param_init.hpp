#pragma once

#include <vector>

#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace m2oe {

inline constexpr double kInitStd = 0.02;

// weight matrices: N(0, 0.02); biases and layer-norm shifts: 0; gains: 1
inline Tensor normal_param(const std::vector<int> &shape, RngState &rng,
                           double std_dev = kInitStd) {
  std::size_t count = 1;
  for (int dim : shape) {
    count *= static_cast<std::size_t>(dim);
  }
  std::vector<double> values(count);
  for (double &v : values) {
    v = std_dev * rng.normal();
  }
  return Tensor::from(shape, std::move(values), true);
}

inline Tensor zero_param(const std::vector<int> &shape) {
  return Tensor::zeros(shape, true);
}

inline Tensor const_param(const std::vector<int> &shape, double value) {
  std::size_t count = 1;
  for (int dim : shape) {
    count *= static_cast<std::size_t>(dim);
  }
  return Tensor::from(shape, std::vector<double>(count, value), true);
}

} // namespace m2oe
