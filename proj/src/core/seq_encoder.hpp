#pragma once

#include <string>
#include <utility>
#include <vector>

#include "core/ops.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"
#include "core/vocab.hpp"

namespace m2oe {

struct AttentionLayerParams {
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor ln_gain, ln_bias;
};

struct FfnLayerParams {
  Tensor w1, b1, w2, b2;
  Tensor ln_gain, ln_bias;
};

// Transformer encoder over residue tokens: embedding + sinusoidal positions,
// then post-norm attention/FFN blocks.
struct SeqEncoderParams {
  int max_len = 0;
  int dim = 0;
  int heads = 0;
  double leaky_slope = 0.01;
  Tensor token_embedding; // 22 x d
  Tensor positional;      // max_len x d, constant
  std::vector<AttentionLayerParams> attn_layers;
  std::vector<FfnLayerParams> ffn_layers;

  static SeqEncoderParams init(int max_len, int dim, int layers, int heads,
                               double leaky_slope, RngState &rng);
  void collect_params(const std::string &prefix,
                      std::vector<std::pair<std::string, Tensor>> &out) const;
};

// PE[pos, 2i] = sin(pos / 10000^(2i/d)), PE[pos, 2i+1] = cos(same)
Tensor positional_table(int max_len, int dim);

Tensor embed_with_positions(const TokenizedSequence &tokens,
                            const SeqEncoderParams &params);

// Multi-head self-attention with padded keys masked out, residual add, and
// layer norm. Scores use the conventional 1/sqrt(head_dim) scaling.
Tensor attention_block(const Tensor &x, const std::vector<std::uint8_t> &mask,
                       const AttentionLayerParams &params, int heads);

Tensor ffn_block(const Tensor &x, const FfnLayerParams &params, double slope);

Tensor seq_encode(const TokenizedSequence &tokens, const SeqEncoderParams &params);

} // namespace m2oe
