#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "core/tensor.hpp"

namespace m2oe {

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
};

// Central-difference verification of the analytic gradients of loss_fn with
// respect to each named parameter. loss_fn must be deterministic: it is
// evaluated twice up front (a mismatch raises a determinism error) and then
// twice per parameter scalar. eps must lie in [1e-6, 1e-3].
//
// Relative error per scalar is |a - n| / max(|a|, |n|, 1e-8).
std::vector<GradCheckEntry>
grad_check(const std::function<Tensor()> &loss_fn,
           const std::vector<std::pair<std::string, Tensor>> &params,
           double eps);

double grad_check_max(const std::function<Tensor()> &loss_fn,
                      const std::vector<std::pair<std::string, Tensor>> &params,
                      double eps);

} // namespace m2oe
