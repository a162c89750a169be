#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "core/ops.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace m2oe {

// -- cross attention ----------------------------------------------------------

struct CrossAttnParams {
  int dim = 0;
  double dk = 0.0;        // score divisor; defaults to dim
  bool sqrt_scale = false; // divide by sqrt(dk) instead of dk
  Tensor wq_seq, wk_seq, wv_seq;
  Tensor wq_gra, wk_gra, wv_gra;

  static CrossAttnParams init(int dim, bool sqrt_scale, RngState &rng);
  void collect_params(const std::string &prefix,
                      std::vector<std::pair<std::string, Tensor>> &out) const;
};

struct CrossAttnOut {
  Tensor fused_seq; // M x d, built from graph values
  Tensor fused_gra; // N x d, built from sequence values
};

// Queries of one modality attend over keys/values of the other. Padded
// sequence keys are excluded via seq_mask (null = none padded).
CrossAttnOut cross_attention(const Tensor &f_seq, const Tensor &f_gra,
                             const std::vector<std::uint8_t> *seq_mask,
                             const CrossAttnParams &params);

// -- noisy top-k router --------------------------------------------------------

struct RouterParams {
  int experts = 0;
  int topk = 0;
  Tensor w_router; // in_dim x C
  Tensor w_noise;  // in_dim x C

  static RouterParams init(int in_dim, int experts, int topk, RngState &rng);
  void collect_params(const std::string &prefix,
                      std::vector<std::pair<std::string, Tensor>> &out) const;
};

struct RouterOutput {
  int tokens = 0;
  int topk = 0;
  int experts = 0;
  std::vector<int> expert_ids;           // tokens x topk, row-major
  Tensor gates;                          // tokens x topk, rows sum to 1
  Tensor soft_mass;                      // per-expert summed gate weight, length C
  std::vector<std::int64_t> hard_counts; // per-expert token count, length C
};

// Noisy top-k routing: h = x.W_r + eps * softplus(x.W_noise) with
// eps ~ N(0,1) during training and 0 otherwise; keep the k largest logits
// per token (ties to the lower expert index) and softmax over them.
RouterOutput route_tokens(const Tensor &x, const RouterParams &params,
                          bool training, RngState *rng);

// -- expert bank ---------------------------------------------------------------

struct Expert {
  Tensor w1, b1, w2, b2; // in_dim -> hidden -> out_dim
};

struct ExpertBank {
  int in_dim = 0;
  int hidden = 0;
  int out_dim = 0;
  std::vector<Expert> experts;

  static ExpertBank init(int in_dim, int hidden, int out_dim, int count,
                         RngState &rng);
  void collect_params(const std::string &prefix,
                      std::vector<std::pair<std::string, Tensor>> &out) const;
};

Expert init_expert(int in_dim, int hidden, int out_dim, RngState &rng);
Tensor expert_forward(const Expert &expert, const Tensor &rows, double slope);

// Sparse combine: only experts that received tokens are evaluated; each
// token's output is the gate-weighted sum over its selected experts.
Tensor moe_forward(const Tensor &x, const RouterOutput &routing,
                   const ExpertBank &bank, double slope);

// -- balancing losses ----------------------------------------------------------

// sum_i (n_i / sum_j n_j - 1/C)^2 over differentiable soft mass
Tensor load_balance_loss(const Tensor &soft_mass);
// weight * population_std(importance) / mean(importance)
Tensor importance_loss(const Tensor &importance, double weight);

// -- block ---------------------------------------------------------------------

struct ScmoeParams {
  bool use_cra = true;
  bool use_moe = true;
  int dim = 0;
  int experts = 0;
  int topk = 0;
  double importance_weight = 0.1;
  double leaky_slope = 0.01;
  CrossAttnParams cross;
  RouterParams router_seq, router_gra;
  ExpertBank bank_seq, bank_gra;
  Expert dense_seq, dense_gra; // replaces the banks when use_moe is off

  static ScmoeParams init(int dim, bool use_cra, bool use_moe, int experts,
                          int topk, double importance_weight, double leaky_slope,
                          bool sqrt_scale, RngState &rng);
  void collect_params(const std::string &prefix,
                      std::vector<std::pair<std::string, Tensor>> &out) const;
};

struct ScmoeAux {
  Tensor load_loss_seq, load_loss_gra;             // scalars
  Tensor importance_loss_seq, importance_loss_gra; // scalars, weight applied
  std::vector<std::int64_t> hard_counts_seq, hard_counts_gra;
  std::vector<double> soft_mass_seq, soft_mass_gra;
};

struct ScmoeResult {
  Tensor f_seq; // M x d
  Tensor f_gra; // N x d
  ScmoeAux aux;
};

ScmoeResult scmoe_block(const Tensor &f_seq, const Tensor &f_gra,
                        const std::vector<std::uint8_t> *seq_mask, bool training,
                        RngState *rng, const ScmoeParams &params);

} // namespace m2oe
