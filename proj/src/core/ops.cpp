#include "core/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace m2oe {

namespace {

using detail::TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

Tensor make_op(std::vector<int> shape, std::vector<double> values,
               std::vector<Tensor> parents,
               std::function<void(const TensorNode &)> backward,
               const char *what) {
  check_finite(values, what);
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  bool requires_grad = false;
  for (const Tensor &p : parents) {
    requires_grad = requires_grad || p.requires_grad();
  }
  node->requires_grad = requires_grad;
  if (requires_grad) {
    node->parents.reserve(parents.size());
    for (const Tensor &p : parents) {
      node->parents.push_back(p.node());
    }
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

} // namespace

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  if (x > 0.0) {
    return x + std::log1p(std::exp(-x));
  }
  return std::log1p(std::exp(x));
}

Activation activation_from_name(const std::string &name) {
  if (name == "leaky_relu") {
    return Activation::LeakyRelu;
  }
  if (name == "softplus") {
    return Activation::Softplus;
  }
  if (name == "sigmoid") {
    return Activation::Sigmoid;
  }
  fail(ErrorKind::Config, "unknown activation kind '" + name + "'");
}

Tensor matmul(const Tensor &a, const Tensor &b) {
  const int m = a.rows(), k = a.cols();
  const int k2 = b.rows(), n = b.cols();
  if (k != k2) {
    fail(ErrorKind::Shape, "matmul inner dimensions differ: " +
                               shape_str(a.shape()) + " vs " +
                               shape_str(b.shape()));
  }
  std::vector<double> out(static_cast<std::size_t>(m) * n, 0.0);
  {
    const double *pa = a.values().data();
    const double *pb = b.values().data();
    for (int i = 0; i < m; ++i) {
      for (int kk = 0; kk < k; ++kk) {
        const double aik = pa[i * k + kk];
        if (aik == 0.0) {
          continue;
        }
        const double *brow = pb + static_cast<std::size_t>(kk) * n;
        double *orow = out.data() + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
          orow[j] += aik * brow[j];
        }
      }
    }
  }
  NodePtr an = a.node(), bn = b.node();
  return make_op(
      {m, n}, std::move(out), {a, b},
      [an, bn, m, k, n](const TensorNode &self) {
        const double *dc = self.grad.data();
        if (an->requires_grad) {
          an->ensure_grad();
          const double *pb = bn->values.data();
          double *da = an->grad.data();
          for (int i = 0; i < m; ++i) {
            for (int kk = 0; kk < k; ++kk) {
              const double *brow = pb + static_cast<std::size_t>(kk) * n;
              const double *drow = dc + static_cast<std::size_t>(i) * n;
              double acc = 0.0;
              for (int j = 0; j < n; ++j) {
                acc += drow[j] * brow[j];
              }
              da[i * k + kk] += acc;
            }
          }
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          const double *pa = an->values.data();
          double *db = bn->grad.data();
          for (int i = 0; i < m; ++i) {
            const double *drow = dc + static_cast<std::size_t>(i) * n;
            for (int kk = 0; kk < k; ++kk) {
              const double aik = pa[i * k + kk];
              if (aik == 0.0) {
                continue;
              }
              double *dbrow = db + static_cast<std::size_t>(kk) * n;
              for (int j = 0; j < n; ++j) {
                dbrow[j] += aik * drow[j];
              }
            }
          }
        }
      },
      "matmul");
}

Tensor transpose(const Tensor &a) {
  const int m = a.rows(), n = a.cols();
  std::vector<double> out(a.size());
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      out[static_cast<std::size_t>(j) * m + i] = a.at(i, j);
    }
  }
  NodePtr an = a.node();
  return make_op(
      {n, m}, std::move(out), {a},
      [an, m, n](const TensorNode &self) {
        if (!an->requires_grad) {
          return;
        }
        an->ensure_grad();
        for (int i = 0; i < m; ++i) {
          for (int j = 0; j < n; ++j) {
            an->grad[static_cast<std::size_t>(i) * n + j] +=
                self.grad[static_cast<std::size_t>(j) * m + i];
          }
        }
      },
      "transpose");
}

Tensor add(const Tensor &a, const Tensor &b) {
  if (a.shape() != b.shape()) {
    fail(ErrorKind::Shape, "add shapes differ: " + shape_str(a.shape()) +
                               " vs " + shape_str(b.shape()));
  }
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a.values()[i] + b.values()[i];
  }
  NodePtr an = a.node(), bn = b.node();
  return make_op(
      a.shape(), std::move(out), {a, b},
      [an, bn](const TensorNode &self) {
        for (const NodePtr &p : {an, bn}) {
          if (!p->requires_grad) {
            continue;
          }
          p->ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i) {
            p->grad[i] += self.grad[i];
          }
        }
      },
      "add");
}

Tensor add_rowwise(const Tensor &x, const Tensor &bias) {
  const int m = x.rows(), n = x.cols();
  if (static_cast<int>(bias.size()) != n) {
    fail(ErrorKind::Shape, "bias size " + shape_str(bias.shape()) +
                               " does not match column count of " +
                               shape_str(x.shape()));
  }
  std::vector<double> out(x.size());
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      out[static_cast<std::size_t>(i) * n + j] = x.at(i, j) + bias.values()[j];
    }
  }
  NodePtr xn = x.node(), bn = bias.node();
  return make_op(
      x.shape(), std::move(out), {x, bias},
      [xn, bn, m, n](const TensorNode &self) {
        if (xn->requires_grad) {
          xn->ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i) {
            xn->grad[i] += self.grad[i];
          }
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n; ++j) {
              bn->grad[j] += self.grad[static_cast<std::size_t>(i) * n + j];
            }
          }
        }
      },
      "add_rowwise");
}

Tensor mul(const Tensor &a, const Tensor &b) {
  if (a.shape() != b.shape()) {
    fail(ErrorKind::Shape, "mul shapes differ: " + shape_str(a.shape()) +
                               " vs " + shape_str(b.shape()));
  }
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a.values()[i] * b.values()[i];
  }
  NodePtr an = a.node(), bn = b.node();
  return make_op(
      a.shape(), std::move(out), {a, b},
      [an, bn](const TensorNode &self) {
        if (an->requires_grad) {
          an->ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i) {
            an->grad[i] += self.grad[i] * bn->values[i];
          }
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i) {
            bn->grad[i] += self.grad[i] * an->values[i];
          }
        }
      },
      "mul");
}

Tensor mul_rowwise(const Tensor &x, const Tensor &row_scale) {
  const int m = x.rows(), n = x.cols();
  if (static_cast<int>(row_scale.size()) != m) {
    fail(ErrorKind::Shape, "row scale size " + shape_str(row_scale.shape()) +
                               " does not match row count of " +
                               shape_str(x.shape()));
  }
  std::vector<double> out(x.size());
  for (int i = 0; i < m; ++i) {
    const double s = row_scale.values()[i];
    for (int j = 0; j < n; ++j) {
      out[static_cast<std::size_t>(i) * n + j] = x.at(i, j) * s;
    }
  }
  NodePtr xn = x.node(), sn = row_scale.node();
  return make_op(
      x.shape(), std::move(out), {x, row_scale},
      [xn, sn, m, n](const TensorNode &self) {
        if (xn->requires_grad) {
          xn->ensure_grad();
          for (int i = 0; i < m; ++i) {
            const double s = sn->values[i];
            for (int j = 0; j < n; ++j) {
              xn->grad[static_cast<std::size_t>(i) * n + j] +=
                  self.grad[static_cast<std::size_t>(i) * n + j] * s;
            }
          }
        }
        if (sn->requires_grad) {
          sn->ensure_grad();
          for (int i = 0; i < m; ++i) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) {
              acc += self.grad[static_cast<std::size_t>(i) * n + j] *
                     xn->values[static_cast<std::size_t>(i) * n + j];
            }
            sn->grad[i] += acc;
          }
        }
      },
      "mul_rowwise");
}

Tensor scale(const Tensor &a, double factor) {
  if (!std::isfinite(factor)) {
    fail(ErrorKind::NonFinite, "scale factor is non-finite");
  }
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a.values()[i] * factor;
  }
  NodePtr an = a.node();
  return make_op(
      a.shape(), std::move(out), {a},
      [an, factor](const TensorNode &self) {
        if (!an->requires_grad) {
          return;
        }
        an->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          an->grad[i] += self.grad[i] * factor;
        }
      },
      "scale");
}

Tensor reshape(const Tensor &a, const std::vector<int> &shape) {
  std::size_t count = 1;
  for (int dim : shape) {
    count *= static_cast<std::size_t>(std::max(dim, 0));
  }
  if (count != a.size()) {
    fail(ErrorKind::Shape, "reshape " + shape_str(a.shape()) + " -> " +
                               shape_str(shape) + " changes element count");
  }
  NodePtr an = a.node();
  return make_op(
      shape, a.values(), {a},
      [an](const TensorNode &self) {
        if (!an->requires_grad) {
          return;
        }
        an->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          an->grad[i] += self.grad[i];
        }
      },
      "reshape");
}

Tensor leaky_relu(const Tensor &x, double slope) {
  if (!(slope > 0.0 && slope < 1.0)) {
    fail(ErrorKind::Config,
         "leaky_relu slope must lie in (0, 1), got " + std::to_string(slope));
  }
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = x.values()[i];
    out[i] = v >= 0.0 ? v : slope * v;
  }
  NodePtr xn = x.node();
  return make_op(
      x.shape(), std::move(out), {x},
      [xn, slope](const TensorNode &self) {
        if (!xn->requires_grad) {
          return;
        }
        xn->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          xn->grad[i] += self.grad[i] * (xn->values[i] >= 0.0 ? 1.0 : slope);
        }
      },
      "leaky_relu");
}

Tensor softplus(const Tensor &x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = stable_softplus(x.values()[i]);
  }
  NodePtr xn = x.node();
  return make_op(
      x.shape(), std::move(out), {x},
      [xn](const TensorNode &self) {
        if (!xn->requires_grad) {
          return;
        }
        xn->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          xn->grad[i] += self.grad[i] * stable_sigmoid(xn->values[i]);
        }
      },
      "softplus");
}

Tensor sigmoid(const Tensor &x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = stable_sigmoid(x.values()[i]);
  }
  NodePtr xn = x.node();
  return make_op(
      x.shape(), std::move(out), {x},
      [xn](const TensorNode &self) {
        if (!xn->requires_grad) {
          return;
        }
        xn->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          const double s = self.values[i];
          xn->grad[i] += self.grad[i] * s * (1.0 - s);
        }
      },
      "sigmoid");
}

Tensor activate(const Tensor &x, Activation kind, double slope) {
  switch (kind) {
  case Activation::LeakyRelu: return leaky_relu(x, slope);
  case Activation::Softplus: return softplus(x);
  case Activation::Sigmoid: return sigmoid(x);
  }
  fail(ErrorKind::Config, "unknown activation kind");
}

Tensor softmax_masked(const Tensor &logits,
                      const std::vector<std::uint8_t> *mask, int axis) {
  if (axis != 0 && axis != 1) {
    fail(ErrorKind::Config, "softmax axis must be 0 or 1, got " + std::to_string(axis));
  }
  const int r = logits.rows(), c = logits.cols();
  if (mask && mask->size() != logits.size()) {
    fail(ErrorKind::Shape, "softmax mask has " + std::to_string(mask->size()) +
                               " entries for logits " + shape_str(logits.shape()));
  }
  const int slices = axis == 1 ? r : c;
  const int len = axis == 1 ? c : r;
  auto flat = [axis, c](int s, int t) {
    return axis == 1 ? static_cast<std::size_t>(s) * c + t
                     : static_cast<std::size_t>(t) * c + s;
  };
  std::vector<std::uint8_t> keep;
  if (mask) {
    keep = *mask;
  }
  auto kept = [&keep](std::size_t i) { return keep.empty() || keep[i] != 0; };

  const auto &x = logits.values();
  std::vector<double> y(x.size(), 0.0);
  for (int s = 0; s < slices; ++s) {
    double max = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (int t = 0; t < len; ++t) {
      const std::size_t i = flat(s, t);
      if (kept(i)) {
        any = true;
        max = std::max(max, x[i]);
      }
    }
    if (!any) {
      fail(ErrorKind::DegenerateMask,
           "softmax slice " + std::to_string(s) + " is fully masked");
    }
    double sum = 0.0;
    for (int t = 0; t < len; ++t) {
      const std::size_t i = flat(s, t);
      if (kept(i)) {
        y[i] = std::exp(x[i] - max);
        sum += y[i];
      }
    }
    for (int t = 0; t < len; ++t) {
      const std::size_t i = flat(s, t);
      if (kept(i)) {
        y[i] /= sum;
      }
    }
  }
  NodePtr xn = logits.node();
  return make_op(
      logits.shape(), std::move(y), {logits},
      [xn, keep, flat, slices, len](const TensorNode &self) {
        if (!xn->requires_grad) {
          return;
        }
        auto live = [&keep](std::size_t i) { return keep.empty() || keep[i] != 0; };
        xn->ensure_grad();
        for (int s = 0; s < slices; ++s) {
          double dot = 0.0;
          for (int t = 0; t < len; ++t) {
            const std::size_t i = flat(s, t);
            if (live(i)) {
              dot += self.values[i] * self.grad[i];
            }
          }
          for (int t = 0; t < len; ++t) {
            const std::size_t i = flat(s, t);
            if (live(i)) {
              xn->grad[i] += self.values[i] * (self.grad[i] - dot);
            }
          }
        }
      },
      "softmax_masked");
}

Tensor concat_cols(const Tensor &a, const Tensor &b) {
  const int m = a.rows(), p = a.cols(), q = b.cols();
  if (b.rows() != m) {
    fail(ErrorKind::Shape, "concat_cols row counts differ: " +
                               shape_str(a.shape()) + " vs " +
                               shape_str(b.shape()));
  }
  std::vector<double> out(static_cast<std::size_t>(m) * (p + q));
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < p; ++j) {
      out[static_cast<std::size_t>(i) * (p + q) + j] = a.at(i, j);
    }
    for (int j = 0; j < q; ++j) {
      out[static_cast<std::size_t>(i) * (p + q) + p + j] = b.at(i, j);
    }
  }
  NodePtr an = a.node(), bn = b.node();
  return make_op(
      {m, p + q}, std::move(out), {a, b},
      [an, bn, m, p, q](const TensorNode &self) {
        if (an->requires_grad) {
          an->ensure_grad();
          for (int i = 0; i < m; ++i) {
            for (int j = 0; j < p; ++j) {
              an->grad[static_cast<std::size_t>(i) * p + j] +=
                  self.grad[static_cast<std::size_t>(i) * (p + q) + j];
            }
          }
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (int i = 0; i < m; ++i) {
            for (int j = 0; j < q; ++j) {
              bn->grad[static_cast<std::size_t>(i) * q + j] +=
                  self.grad[static_cast<std::size_t>(i) * (p + q) + p + j];
            }
          }
        }
      },
      "concat_cols");
}

Tensor slice_cols(const Tensor &x, int start, int count) {
  const int m = x.rows(), n = x.cols();
  if (start < 0 || count < 1 || start + count > n) {
    fail(ErrorKind::Shape, "slice_cols [" + std::to_string(start) + ", " +
                               std::to_string(start + count) +
                               ") out of range for " + shape_str(x.shape()));
  }
  std::vector<double> out(static_cast<std::size_t>(m) * count);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < count; ++j) {
      out[static_cast<std::size_t>(i) * count + j] = x.at(i, start + j);
    }
  }
  NodePtr xn = x.node();
  return make_op(
      {m, count}, std::move(out), {x},
      [xn, m, n, start, count](const TensorNode &self) {
        if (!xn->requires_grad) {
          return;
        }
        xn->ensure_grad();
        for (int i = 0; i < m; ++i) {
          for (int j = 0; j < count; ++j) {
            xn->grad[static_cast<std::size_t>(i) * n + start + j] +=
                self.grad[static_cast<std::size_t>(i) * count + j];
          }
        }
      },
      "slice_cols");
}

Tensor gather_rows(const Tensor &table, const std::vector<int> &ids) {
  const int v = table.rows(), d = table.cols();
  if (ids.empty()) {
    fail(ErrorKind::Internal, "gather_rows requires at least one index");
  }
  for (int id : ids) {
    if (id < 0 || id >= v) {
      fail(ErrorKind::Internal, "gather_rows index " + std::to_string(id) +
                                    " out of range for " + shape_str(table.shape()));
    }
  }
  const int n = static_cast<int>(ids.size());
  std::vector<double> out(static_cast<std::size_t>(n) * d);
  for (int r = 0; r < n; ++r) {
    for (int j = 0; j < d; ++j) {
      out[static_cast<std::size_t>(r) * d + j] = table.at(ids[r], j);
    }
  }
  NodePtr tn = table.node();
  return make_op(
      {n, d}, std::move(out), {table},
      [tn, ids, n, d](const TensorNode &self) {
        if (!tn->requires_grad) {
          return;
        }
        tn->ensure_grad();
        for (int r = 0; r < n; ++r) {
          for (int j = 0; j < d; ++j) {
            tn->grad[static_cast<std::size_t>(ids[r]) * d + j] +=
                self.grad[static_cast<std::size_t>(r) * d + j];
          }
        }
      },
      "gather_rows");
}

Tensor scatter_add_rows(const Tensor &rows, const std::vector<int> &ids,
                        int out_rows) {
  const int n = rows.rows(), d = rows.cols();
  if (static_cast<int>(ids.size()) != n) {
    fail(ErrorKind::Internal, "scatter_add_rows index count mismatch");
  }
  for (int id : ids) {
    if (id < 0 || id >= out_rows) {
      fail(ErrorKind::Internal, "scatter_add_rows index " + std::to_string(id) +
                                    " out of range for " + std::to_string(out_rows) +
                                    " rows");
    }
  }
  std::vector<double> out(static_cast<std::size_t>(out_rows) * d, 0.0);
  for (int r = 0; r < n; ++r) {
    for (int j = 0; j < d; ++j) {
      out[static_cast<std::size_t>(ids[r]) * d + j] +=
          rows.values()[static_cast<std::size_t>(r) * d + j];
    }
  }
  NodePtr rn = rows.node();
  return make_op(
      {out_rows, d}, std::move(out), {rows},
      [rn, ids, n, d](const TensorNode &self) {
        if (!rn->requires_grad) {
          return;
        }
        rn->ensure_grad();
        for (int r = 0; r < n; ++r) {
          for (int j = 0; j < d; ++j) {
            rn->grad[static_cast<std::size_t>(r) * d + j] +=
                self.grad[static_cast<std::size_t>(ids[r]) * d + j];
          }
        }
      },
      "scatter_add_rows");
}

Tensor gather_cols_per_row(const Tensor &x, const std::vector<int> &ids,
                           int per_row) {
  const int t = x.rows(), c = x.cols();
  if (per_row < 1 || static_cast<int>(ids.size()) != t * per_row) {
    fail(ErrorKind::Internal, "gather_cols_per_row expects " +
                                  std::to_string(t) + "x" + std::to_string(per_row) +
                                  " indices");
  }
  for (int id : ids) {
    if (id < 0 || id >= c) {
      fail(ErrorKind::Internal, "gather_cols_per_row index " + std::to_string(id) +
                                    " out of range for " + shape_str(x.shape()));
    }
  }
  std::vector<double> out(ids.size());
  for (int i = 0; i < t; ++i) {
    for (int j = 0; j < per_row; ++j) {
      out[static_cast<std::size_t>(i) * per_row + j] = x.at(i, ids[i * per_row + j]);
    }
  }
  NodePtr xn = x.node();
  return make_op(
      {t, per_row}, std::move(out), {x},
      [xn, ids, t, c, per_row](const TensorNode &self) {
        if (!xn->requires_grad) {
          return;
        }
        xn->ensure_grad();
        for (int i = 0; i < t; ++i) {
          for (int j = 0; j < per_row; ++j) {
            xn->grad[static_cast<std::size_t>(i) * c + ids[i * per_row + j]] +=
                self.grad[static_cast<std::size_t>(i) * per_row + j];
          }
        }
      },
      "gather_cols_per_row");
}

Tensor gather_elements(const Tensor &x, const std::vector<std::size_t> &flat_ids) {
  if (flat_ids.empty()) {
    fail(ErrorKind::Internal, "gather_elements requires at least one index");
  }
  for (std::size_t id : flat_ids) {
    if (id >= x.size()) {
      fail(ErrorKind::Internal, "gather_elements index out of range");
    }
  }
  std::vector<double> out(flat_ids.size());
  for (std::size_t i = 0; i < flat_ids.size(); ++i) {
    out[i] = x.values()[flat_ids[i]];
  }
  NodePtr xn = x.node();
  return make_op(
      {static_cast<int>(flat_ids.size())}, std::move(out), {x},
      [xn, flat_ids](const TensorNode &self) {
        if (!xn->requires_grad) {
          return;
        }
        xn->ensure_grad();
        for (std::size_t i = 0; i < flat_ids.size(); ++i) {
          xn->grad[flat_ids[i]] += self.grad[i];
        }
      },
      "gather_elements");
}

Tensor bin_sum_by_index(const Tensor &x, const std::vector<int> &bins,
                        int bin_count) {
  if (bins.size() != x.size() || bin_count < 1) {
    fail(ErrorKind::Internal, "bin_sum_by_index bin list does not match input");
  }
  for (int b : bins) {
    if (b < 0 || b >= bin_count) {
      fail(ErrorKind::Internal, "bin_sum_by_index bin " + std::to_string(b) +
                                    " out of range");
    }
  }
  std::vector<double> out(static_cast<std::size_t>(bin_count), 0.0);
  for (std::size_t i = 0; i < bins.size(); ++i) {
    out[bins[i]] += x.values()[i];
  }
  NodePtr xn = x.node();
  return make_op(
      {bin_count}, std::move(out), {x},
      [xn, bins](const TensorNode &self) {
        if (!xn->requires_grad) {
          return;
        }
        xn->ensure_grad();
        for (std::size_t i = 0; i < bins.size(); ++i) {
          xn->grad[i] += self.grad[bins[i]];
        }
      },
      "bin_sum_by_index");
}

Tensor sum_all(const Tensor &x) {
  double total = 0.0;
  for (double v : x.values()) {
    total += v;
  }
  NodePtr xn = x.node();
  return make_op(
      {1}, {total}, {x},
      [xn](const TensorNode &self) {
        if (!xn->requires_grad) {
          return;
        }
        xn->ensure_grad();
        for (double &g : xn->grad) {
          g += self.grad[0];
        }
      },
      "sum_all");
}

Tensor mean_all(const Tensor &x) {
  double total = 0.0;
  for (double v : x.values()) {
    total += v;
  }
  const double inv = 1.0 / static_cast<double>(x.size());
  NodePtr xn = x.node();
  return make_op(
      {1}, {total * inv}, {x},
      [xn, inv](const TensorNode &self) {
        if (!xn->requires_grad) {
          return;
        }
        xn->ensure_grad();
        for (double &g : xn->grad) {
          g += self.grad[0] * inv;
        }
      },
      "mean_all");
}

Tensor mean_rows_masked(const Tensor &x, const std::vector<std::uint8_t> *mask) {
  const int t = x.rows(), d = x.cols();
  if (mask && static_cast<int>(mask->size()) != t) {
    fail(ErrorKind::Shape, "row mask has " + std::to_string(mask->size()) +
                               " entries for " + shape_str(x.shape()));
  }
  std::vector<std::uint8_t> keep;
  if (mask) {
    keep = *mask;
  }
  int count = 0;
  for (int i = 0; i < t; ++i) {
    if (keep.empty() || keep[i]) {
      ++count;
    }
  }
  if (count == 0) {
    fail(ErrorKind::DegenerateMask, "mean over rows with all rows masked");
  }
  std::vector<double> out(static_cast<std::size_t>(d), 0.0);
  for (int i = 0; i < t; ++i) {
    if (keep.empty() || keep[i]) {
      for (int j = 0; j < d; ++j) {
        out[j] += x.at(i, j);
      }
    }
  }
  const double inv = 1.0 / count;
  for (double &v : out) {
    v *= inv;
  }
  NodePtr xn = x.node();
  return make_op(
      {d}, std::move(out), {x},
      [xn, keep, t, d, inv](const TensorNode &self) {
        if (!xn->requires_grad) {
          return;
        }
        xn->ensure_grad();
        for (int i = 0; i < t; ++i) {
          if (keep.empty() || keep[i]) {
            for (int j = 0; j < d; ++j) {
              xn->grad[static_cast<std::size_t>(i) * d + j] += self.grad[j] * inv;
            }
          }
        }
      },
      "mean_rows_masked");
}

Tensor layer_norm_rows(const Tensor &x, const Tensor &gain, const Tensor &bias,
                       double eps) {
  const int m = x.rows(), n = x.cols();
  if (static_cast<int>(gain.size()) != n || static_cast<int>(bias.size()) != n) {
    fail(ErrorKind::Shape, "layer_norm gain/bias do not match column count of " +
                               shape_str(x.shape()));
  }
  std::vector<double> out(x.size());
  for (int i = 0; i < m; ++i) {
    double mu = 0.0;
    for (int j = 0; j < n; ++j) {
      mu += x.at(i, j);
    }
    mu /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) {
      const double dd = x.at(i, j) - mu;
      var += dd * dd;
    }
    var /= n;
    const double s = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < n; ++j) {
      const double xhat = (x.at(i, j) - mu) * s;
      out[static_cast<std::size_t>(i) * n + j] =
          gain.values()[j] * xhat + bias.values()[j];
    }
  }
  NodePtr xn = x.node(), gn = gain.node(), bn = bias.node();
  return make_op(
      x.shape(), std::move(out), {x, gain, bias},
      [xn, gn, bn, m, n, eps](const TensorNode &self) {
        std::vector<double> xhat(static_cast<std::size_t>(n));
        std::vector<double> dxhat(static_cast<std::size_t>(n));
        for (int i = 0; i < m; ++i) {
          double mu = 0.0;
          for (int j = 0; j < n; ++j) {
            mu += xn->values[static_cast<std::size_t>(i) * n + j];
          }
          mu /= n;
          double var = 0.0;
          for (int j = 0; j < n; ++j) {
            const double dd = xn->values[static_cast<std::size_t>(i) * n + j] - mu;
            var += dd * dd;
          }
          var /= n;
          const double s = 1.0 / std::sqrt(var + eps);
          double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
          for (int j = 0; j < n; ++j) {
            const std::size_t idx = static_cast<std::size_t>(i) * n + j;
            xhat[j] = (xn->values[idx] - mu) * s;
            dxhat[j] = self.grad[idx] * gn->values[j];
            mean_dxhat += dxhat[j];
            mean_dxhat_xhat += dxhat[j] * xhat[j];
          }
          mean_dxhat /= n;
          mean_dxhat_xhat /= n;
          if (xn->requires_grad) {
            xn->ensure_grad();
            for (int j = 0; j < n; ++j) {
              xn->grad[static_cast<std::size_t>(i) * n + j] +=
                  s * (dxhat[j] - mean_dxhat - xhat[j] * mean_dxhat_xhat);
            }
          }
          if (gn->requires_grad) {
            gn->ensure_grad();
            for (int j = 0; j < n; ++j) {
              gn->grad[j] += self.grad[static_cast<std::size_t>(i) * n + j] * xhat[j];
            }
          }
          if (bn->requires_grad) {
            bn->ensure_grad();
            for (int j = 0; j < n; ++j) {
              bn->grad[j] += self.grad[static_cast<std::size_t>(i) * n + j];
            }
          }
        }
      },
      "layer_norm_rows");
}

namespace {
constexpr double kBceEps = 1e-7;
}

Tensor bce_loss(const Tensor &target, const Tensor &pred) {
  if (target.shape() != pred.shape()) {
    fail(ErrorKind::Shape, "bce target shape " + shape_str(target.shape()) +
                               " does not match prediction shape " +
                               shape_str(pred.shape()));
  }
  const std::size_t n = pred.size();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = target.values()[i];
    const double p = std::clamp(pred.values()[i], kBceEps, 1.0 - kBceEps);
    loss -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  loss /= static_cast<double>(n);
  NodePtr yn = target.node(), pn = pred.node();
  return make_op(
      {1}, {loss}, {target, pred},
      [yn, pn, n](const TensorNode &self) {
        const double d = self.grad[0] / static_cast<double>(n);
        if (pn->requires_grad) {
          pn->ensure_grad();
          for (std::size_t i = 0; i < n; ++i) {
            const double raw = pn->values[i];
            if (raw < kBceEps || raw > 1.0 - kBceEps) {
              continue; // clamped region is flat
            }
            const double y = yn->values[i];
            pn->grad[i] += d * (raw - y) / (raw * (1.0 - raw));
          }
        }
        if (yn->requires_grad) {
          yn->ensure_grad();
          for (std::size_t i = 0; i < n; ++i) {
            const double p = std::clamp(pn->values[i], kBceEps, 1.0 - kBceEps);
            yn->grad[i] += d * (std::log(1.0 - p) - std::log(p));
          }
        }
      },
      "bce_loss");
}

Tensor mse_loss(const Tensor &target, const Tensor &pred) {
  if (target.shape() != pred.shape()) {
    fail(ErrorKind::Shape, "mse target shape " + shape_str(target.shape()) +
                               " does not match prediction shape " +
                               shape_str(pred.shape()));
  }
  const std::size_t n = pred.size();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double diff = pred.values()[i] - target.values()[i];
    loss += diff * diff;
  }
  loss /= static_cast<double>(n);
  NodePtr yn = target.node(), pn = pred.node();
  return make_op(
      {1}, {loss}, {target, pred},
      [yn, pn, n](const TensorNode &self) {
        const double d = 2.0 * self.grad[0] / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
          const double diff = pn->values[i] - yn->values[i];
          if (pn->requires_grad) {
            pn->ensure_grad();
            pn->grad[i] += d * diff;
          }
          if (yn->requires_grad) {
            yn->ensure_grad();
            yn->grad[i] -= d * diff;
          }
        }
      },
      "mse_loss");
}

Tensor pointwise_loss(const Tensor &target, const Tensor &pred, LossKind kind) {
  switch (kind) {
  case LossKind::Bce: return bce_loss(target, pred);
  case LossKind::Mse: return mse_loss(target, pred);
  }
  fail(ErrorKind::Config, "unknown loss kind");
}

} // namespace m2oe
