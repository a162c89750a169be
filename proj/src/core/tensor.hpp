#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "core/error.hpp"

namespace m2oe {

namespace detail {

struct TensorNode {
  std::vector<int> shape;
  std::vector<double> values;
  std::vector<double> grad; // empty until first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(const TensorNode &)> backward;

  std::size_t size() const { return values.size(); }

  void ensure_grad() {
    if (grad.size() != values.size()) {
      grad.assign(values.size(), 0.0);
    }
  }
};

} // namespace detail

// Dense row-major tensor handle, rank 1 or 2. Rank-1 tensors behave as row
// vectors wherever a 2-D view is needed. Values are written once at
// construction; afterwards only gradient accumulation and optimizer updates
// touch storage.
class Tensor {
public:
  Tensor() = default;

  static Tensor zeros(const std::vector<int> &shape, bool requires_grad = false);
  static Tensor from(const std::vector<int> &shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int> &shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int rows() const { return rank() == 1 ? 1 : node_->shape[0]; }
  int cols() const { return rank() == 1 ? node_->shape[0] : node_->shape[1]; }
  std::size_t size() const { return node_->values.size(); }

  double at(int r, int c) const {
    return node_->values[static_cast<std::size_t>(r) * cols() + c];
  }
  double item() const;

  const std::vector<double> &values() const { return node_->values; }
  // optimizer / checkpoint-loader path only
  std::vector<double> &raw_values() { return node_->values; }

  const std::vector<double> &grad() const { return node_->grad; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  void zero_grad() {
    if (node_) {
      node_->grad.assign(node_->values.size(), 0.0);
    }
  }

  std::shared_ptr<detail::TensorNode> node() const { return node_; }

  explicit Tensor(std::shared_ptr<detail::TensorNode> node)
      : node_(std::move(node)) {}

private:
  std::shared_ptr<detail::TensorNode> node_;
};

std::string shape_str(const std::vector<int> &shape);

// Throws ErrorKind::NonFinite if any entry is NaN or infinite.
void check_finite(const std::vector<double> &values, const char *what);

// Reverse-mode sweep from a scalar loss. Accumulates into .grad of every
// reachable requires_grad node; grads persist until zero_grad.
void run_backward(const Tensor &loss);

} // namespace m2oe
