#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace m2oe {

enum class Activation { LeakyRelu, Softplus, Sigmoid };
Activation activation_from_name(const std::string &name);

enum class LossKind { Bce, Mse };

double stable_sigmoid(double x);
double stable_softplus(double x);

// -- linear algebra ---------------------------------------------------------

Tensor matmul(const Tensor &a, const Tensor &b);
Tensor transpose(const Tensor &a);

// -- elementwise / broadcast ------------------------------------------------

Tensor add(const Tensor &a, const Tensor &b);             // same shape
Tensor add_rowwise(const Tensor &x, const Tensor &bias);  // bias over columns
Tensor mul(const Tensor &a, const Tensor &b);             // same shape
Tensor mul_rowwise(const Tensor &x, const Tensor &row_scale);
Tensor scale(const Tensor &a, double factor);
Tensor reshape(const Tensor &a, const std::vector<int> &shape);

Tensor leaky_relu(const Tensor &x, double slope);
Tensor softplus(const Tensor &x);
Tensor sigmoid(const Tensor &x);
Tensor activate(const Tensor &x, Activation kind, double slope = 0.01);

// Softmax over each slice of `axis` (1 = rows, 0 = columns). `mask` is an
// optional elementwise keep-mask the size of `logits`; masked entries output
// exactly 0 and a fully masked slice is an error.
Tensor softmax_masked(const Tensor &logits,
                      const std::vector<std::uint8_t> *mask, int axis = 1);

// -- structure --------------------------------------------------------------

Tensor concat_cols(const Tensor &a, const Tensor &b);
Tensor slice_cols(const Tensor &x, int start, int count);
Tensor gather_rows(const Tensor &table, const std::vector<int> &ids);
Tensor scatter_add_rows(const Tensor &rows, const std::vector<int> &ids,
                        int out_rows);
// ids is row-major (x.rows() x per_row); out[t][j] = x[t][ids[t*per_row+j]]
Tensor gather_cols_per_row(const Tensor &x, const std::vector<int> &ids,
                           int per_row);
Tensor gather_elements(const Tensor &x, const std::vector<std::size_t> &flat_ids);
// out[bins[i]] += x[i] for the rank-1 view of x; ids parallel to x entries
Tensor bin_sum_by_index(const Tensor &x, const std::vector<int> &bins,
                        int bin_count);

// -- reductions -------------------------------------------------------------

Tensor sum_all(const Tensor &x);
Tensor mean_all(const Tensor &x);
// mean over rows whose mask entry is true; null mask = all rows
Tensor mean_rows_masked(const Tensor &x, const std::vector<std::uint8_t> *mask);

Tensor layer_norm_rows(const Tensor &x, const Tensor &gain, const Tensor &bias,
                       double eps = 1e-5);

// -- losses -----------------------------------------------------------------

// mean-reduced binary cross entropy; predictions clamped to [1e-7, 1 - 1e-7]
Tensor bce_loss(const Tensor &target, const Tensor &pred);
Tensor mse_loss(const Tensor &target, const Tensor &pred);
Tensor pointwise_loss(const Tensor &target, const Tensor &pred, LossKind kind);

// -- composites -------------------------------------------------------------

inline Tensor linear(const Tensor &x, const Tensor &weight, const Tensor &bias) {
  return add_rowwise(matmul(x, weight), bias);
}

} // namespace m2oe
