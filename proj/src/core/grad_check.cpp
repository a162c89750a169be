#include "core/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace m2oe {

std::vector<GradCheckEntry>
grad_check(const std::function<Tensor()> &loss_fn,
           const std::vector<std::pair<std::string, Tensor>> &params,
           double eps) {
  if (!(eps >= 1e-6 && eps <= 1e-3)) {
    fail(ErrorKind::Config,
         "grad_check eps must lie in [1e-6, 1e-3], got " + std::to_string(eps));
  }
  for (const auto &[name, p] : params) {
    if (!p.defined() || !p.requires_grad()) {
      fail(ErrorKind::Config, "grad_check parameter '" + name +
                                  "' must be defined and require gradients");
    }
  }

  Tensor loss = loss_fn();
  if (!loss.defined() || loss.size() != 1) {
    fail(ErrorKind::Config, "grad_check loss must be scalar");
  }
  const double base = loss.item();
  {
    Tensor again = loss_fn();
    if (again.item() != base) {
      fail(ErrorKind::Determinism,
           "loss is not deterministic under a fixed seed: " +
               std::to_string(base) + " vs " + std::to_string(again.item()));
    }
  }

  for (const auto &[name, p] : params) {
    Tensor handle = p;
    handle.zero_grad();
  }
  run_backward(loss);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto &[name, p] : params) {
    std::vector<double> g = p.grad();
    if (g.size() != p.size()) {
      g.assign(p.size(), 0.0); // loss does not reach this parameter
    }
    analytic.push_back(std::move(g));
  }

  std::vector<GradCheckEntry> result;
  result.reserve(params.size());
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor param = params[pi].second;
    std::vector<double> &values = param.raw_values();
    double worst = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double plus = loss_fn().item();
      values[i] = saved - eps;
      const double minus = loss_fn().item();
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * eps);
      const double analytic_g = analytic[pi][i];
      const double denom =
          std::max({std::fabs(analytic_g), std::fabs(numeric), 1e-8});
      worst = std::max(worst, std::fabs(analytic_g - numeric) / denom);
    }
    result.push_back({params[pi].first, worst});
  }
  return result;
}

double grad_check_max(const std::function<Tensor()> &loss_fn,
                      const std::vector<std::pair<std::string, Tensor>> &params,
                      double eps) {
  double worst = 0.0;
  for (const GradCheckEntry &entry : grad_check(loss_fn, params, eps)) {
    worst = std::max(worst, entry.max_rel_err);
  }
  return worst;
}

} // namespace m2oe
