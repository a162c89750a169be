#include "core/seq_encoder.hpp"

#include <cmath>

#include "core/param_init.hpp"

namespace m2oe {

Tensor positional_table(int max_len, int dim) {
  std::vector<double> values(static_cast<std::size_t>(max_len) * dim);
  for (int pos = 0; pos < max_len; ++pos) {
    for (int i = 0; i < dim / 2; ++i) {
      const double rate = std::pow(10000.0, 2.0 * i / dim);
      values[static_cast<std::size_t>(pos) * dim + 2 * i] = std::sin(pos / rate);
      values[static_cast<std::size_t>(pos) * dim + 2 * i + 1] = std::cos(pos / rate);
    }
  }
  return Tensor::from({max_len, dim}, std::move(values), false);
}

SeqEncoderParams SeqEncoderParams::init(int max_len, int dim, int layers,
                                        int heads, double leaky_slope,
                                        RngState &rng) {
  if (dim < 2 || dim % 2 != 0) {
    fail(ErrorKind::Config,
         "model dim must be even and >= 2, got " + std::to_string(dim));
  }
  if (heads < 1 || dim % heads != 0) {
    fail(ErrorKind::Config, "model dim " + std::to_string(dim) +
                                " must be divisible by head count " +
                                std::to_string(heads));
  }
  if (layers < 1) {
    fail(ErrorKind::Config, "encoder needs at least one layer");
  }
  if (max_len < 1) {
    fail(ErrorKind::Config, "max_len must be at least 1");
  }
  SeqEncoderParams p;
  p.max_len = max_len;
  p.dim = dim;
  p.heads = heads;
  p.leaky_slope = leaky_slope;
  p.token_embedding = normal_param({kVocabSize, dim}, rng);
  p.positional = positional_table(max_len, dim);
  const int hidden = 4 * dim;
  for (int l = 0; l < layers; ++l) {
    AttentionLayerParams a;
    a.wq = normal_param({dim, dim}, rng);
    a.bq = zero_param({dim});
    a.wk = normal_param({dim, dim}, rng);
    a.bk = zero_param({dim});
    a.wv = normal_param({dim, dim}, rng);
    a.bv = zero_param({dim});
    a.wo = normal_param({dim, dim}, rng);
    a.bo = zero_param({dim});
    a.ln_gain = const_param({dim}, 1.0);
    a.ln_bias = zero_param({dim});
    p.attn_layers.push_back(std::move(a));

    FfnLayerParams f;
    f.w1 = normal_param({dim, hidden}, rng);
    f.b1 = zero_param({hidden});
    f.w2 = normal_param({hidden, dim}, rng);
    f.b2 = zero_param({dim});
    f.ln_gain = const_param({dim}, 1.0);
    f.ln_bias = zero_param({dim});
    p.ffn_layers.push_back(std::move(f));
  }
  return p;
}

void SeqEncoderParams::collect_params(
    const std::string &prefix,
    std::vector<std::pair<std::string, Tensor>> &out) const {
  out.emplace_back(prefix + ".token_embedding", token_embedding);
  for (std::size_t l = 0; l < attn_layers.size(); ++l) {
    const std::string base = prefix + ".layer" + std::to_string(l);
    const AttentionLayerParams &a = attn_layers[l];
    out.emplace_back(base + ".attn.wq", a.wq);
    out.emplace_back(base + ".attn.bq", a.bq);
    out.emplace_back(base + ".attn.wk", a.wk);
    out.emplace_back(base + ".attn.bk", a.bk);
    out.emplace_back(base + ".attn.wv", a.wv);
    out.emplace_back(base + ".attn.bv", a.bv);
    out.emplace_back(base + ".attn.wo", a.wo);
    out.emplace_back(base + ".attn.bo", a.bo);
    out.emplace_back(base + ".attn.ln_gain", a.ln_gain);
    out.emplace_back(base + ".attn.ln_bias", a.ln_bias);
    const FfnLayerParams &f = ffn_layers[l];
    out.emplace_back(base + ".ffn.w1", f.w1);
    out.emplace_back(base + ".ffn.b1", f.b1);
    out.emplace_back(base + ".ffn.w2", f.w2);
    out.emplace_back(base + ".ffn.b2", f.b2);
    out.emplace_back(base + ".ffn.ln_gain", f.ln_gain);
    out.emplace_back(base + ".ffn.ln_bias", f.ln_bias);
  }
}

Tensor embed_with_positions(const TokenizedSequence &tokens,
                            const SeqEncoderParams &params) {
  const int m = static_cast<int>(tokens.ids.size());
  if (m > params.max_len) {
    fail(ErrorKind::Validation, "token count " + std::to_string(m) +
                                    " exceeds positional table length " +
                                    std::to_string(params.max_len));
  }
  std::vector<int> positions(m);
  for (int i = 0; i < m; ++i) {
    positions[i] = i;
  }
  return add(gather_rows(params.token_embedding, tokens.ids),
             gather_rows(params.positional, positions));
}

Tensor attention_block(const Tensor &x, const std::vector<std::uint8_t> &mask,
                       const AttentionLayerParams &params, int heads) {
  const int m = x.rows();
  const int dim = x.cols();
  const int head_dim = dim / heads;
  if (static_cast<int>(mask.size()) != m) {
    fail(ErrorKind::Shape, "attention mask has " + std::to_string(mask.size()) +
                               " entries for " + std::to_string(m) + " tokens");
  }
  bool any = false;
  for (std::uint8_t k : mask) {
    any = any || k;
  }
  if (!any) {
    fail(ErrorKind::DegenerateMask, "attention input is fully masked");
  }

  Tensor q = linear(x, params.wq, params.bq);
  Tensor k = linear(x, params.wk, params.bk);
  Tensor v = linear(x, params.wv, params.bv);

  // key mask tiled over score rows
  std::vector<std::uint8_t> key_mask(static_cast<std::size_t>(m) * m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      key_mask[static_cast<std::size_t>(i) * m + j] = mask[j];
    }
  }

  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  Tensor concat;
  for (int h = 0; h < heads; ++h) {
    Tensor qh = slice_cols(q, h * head_dim, head_dim);
    Tensor kh = slice_cols(k, h * head_dim, head_dim);
    Tensor vh = slice_cols(v, h * head_dim, head_dim);
    Tensor scores = scale(matmul(qh, transpose(kh)), inv_scale);
    Tensor weights = softmax_masked(scores, &key_mask, 1);
    Tensor head_out = matmul(weights, vh);
    concat = h == 0 ? head_out : concat_cols(concat, head_out);
  }
  Tensor projected = linear(concat, params.wo, params.bo);
  return layer_norm_rows(add(x, projected), params.ln_gain, params.ln_bias);
}

Tensor ffn_block(const Tensor &x, const FfnLayerParams &params, double slope) {
  Tensor hidden = leaky_relu(linear(x, params.w1, params.b1), slope);
  Tensor out = linear(hidden, params.w2, params.b2);
  return layer_norm_rows(add(x, out), params.ln_gain, params.ln_bias);
}

Tensor seq_encode(const TokenizedSequence &tokens, const SeqEncoderParams &params) {
  Tensor x = embed_with_positions(tokens, params);
  for (std::size_t l = 0; l < params.attn_layers.size(); ++l) {
    x = attention_block(x, tokens.mask, params.attn_layers[l], params.heads);
    x = ffn_block(x, params.ffn_layers[l], params.leaky_slope);
  }
  return x;
}

} // namespace m2oe
