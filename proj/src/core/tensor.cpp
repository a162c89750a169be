#include "core/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

namespace m2oe {

namespace {

std::size_t checked_count(const std::vector<int> &shape) {
  if (shape.empty() || shape.size() > 2) {
    fail(ErrorKind::Shape, "tensor rank must be 1 or 2, got shape " + shape_str(shape));
  }
  std::size_t count = 1;
  for (int dim : shape) {
    if (dim <= 0) {
      fail(ErrorKind::Shape, "tensor dimensions must be positive, got shape " + shape_str(shape));
    }
    count *= static_cast<std::size_t>(dim);
  }
  return count;
}

} // namespace

std::string shape_str(const std::vector<int> &shape) {
  std::ostringstream out;
  out << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) {
      out << "x";
    }
    out << shape[i];
  }
  out << ")";
  return out.str();
}

void check_finite(const std::vector<double> &values, const char *what) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      fail(ErrorKind::NonFinite, std::string(what) + " produced a non-finite value");
    }
  }
}

Tensor Tensor::zeros(const std::vector<int> &shape, bool requires_grad) {
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = shape;
  node->values.assign(checked_count(shape), 0.0);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from(const std::vector<int> &shape, std::vector<double> values,
                    bool requires_grad) {
  std::size_t count = checked_count(shape);
  if (values.size() != count) {
    fail(ErrorKind::Shape, "value count " + std::to_string(values.size()) +
                               " does not match shape " + shape_str(shape));
  }
  check_finite(values, "tensor construction");
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = shape;
  node->values = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

double Tensor::item() const {
  if (!defined() || size() != 1) {
    fail(ErrorKind::Internal, "item() requires a defined single-element tensor");
  }
  return node_->values[0];
}

void run_backward(const Tensor &loss) {
  if (!loss.defined() || loss.size() != 1) {
    fail(ErrorKind::Internal, "backward root must be a defined scalar tensor");
  }
  auto root = loss.node();
  if (!root->requires_grad) {
    fail(ErrorKind::Internal, "backward root does not require gradients");
  }

  // iterative post-order DFS over the requires_grad subgraph
  struct Frame {
    detail::TensorNode *node;
    std::size_t next;
  };
  std::vector<detail::TensorNode *> order;
  std::unordered_set<detail::TensorNode *> seen;
  std::vector<Frame> stack;
  stack.push_back({root.get(), 0});
  seen.insert(root.get());
  while (!stack.empty()) {
    Frame &top = stack.back();
    if (top.next < top.node->parents.size()) {
      detail::TensorNode *parent = top.node->parents[top.next++].get();
      if (parent->requires_grad && seen.insert(parent).second) {
        stack.push_back({parent, 0});
      }
    } else {
      order.push_back(top.node);
      stack.pop_back();
    }
  }

  root->ensure_grad();
  root->grad[0] += 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::TensorNode *node = *it;
    if (node->backward) {
      node->ensure_grad();
      node->backward(*node);
    }
  }

  for (detail::TensorNode *node : order) {
    for (double g : node->grad) {
      if (!std::isfinite(g)) {
        fail(ErrorKind::NonFinite, "backward produced a non-finite gradient");
      }
    }
  }
}

} // namespace m2oe
