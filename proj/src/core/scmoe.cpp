#include "core/scmoe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/param_init.hpp"

namespace m2oe {

CrossAttnParams CrossAttnParams::init(int dim, bool sqrt_scale, RngState &rng) {
  if (dim < 1) {
    fail(ErrorKind::Config, "cross attention dim must be positive");
  }
  CrossAttnParams p;
  p.dim = dim;
  p.dk = static_cast<double>(dim);
  p.sqrt_scale = sqrt_scale;
  p.wq_seq = normal_param({dim, dim}, rng);
  p.wk_seq = normal_param({dim, dim}, rng);
  p.wv_seq = normal_param({dim, dim}, rng);
  p.wq_gra = normal_param({dim, dim}, rng);
  p.wk_gra = normal_param({dim, dim}, rng);
  p.wv_gra = normal_param({dim, dim}, rng);
  return p;
}

void CrossAttnParams::collect_params(
    const std::string &prefix,
    std::vector<std::pair<std::string, Tensor>> &out) const {
  out.emplace_back(prefix + ".wq_seq", wq_seq);
  out.emplace_back(prefix + ".wk_seq", wk_seq);
  out.emplace_back(prefix + ".wv_seq", wv_seq);
  out.emplace_back(prefix + ".wq_gra", wq_gra);
  out.emplace_back(prefix + ".wk_gra", wk_gra);
  out.emplace_back(prefix + ".wv_gra", wv_gra);
}

CrossAttnOut cross_attention(const Tensor &f_seq, const Tensor &f_gra,
                             const std::vector<std::uint8_t> *seq_mask,
                             const CrossAttnParams &params) {
  if (!f_seq.defined() || !f_gra.defined() || f_seq.rows() < 1 || f_gra.rows() < 1) {
    fail(ErrorKind::Validation, "cross attention requires both modalities non-empty");
  }
  const int m = f_seq.rows();
  const int n = f_gra.rows();
  if (!(params.dk > 0.0)) {
    fail(ErrorKind::Config, "cross attention scaling factor must be positive");
  }
  const double divisor = params.sqrt_scale ? std::sqrt(params.dk) : params.dk;

  Tensor q_seq = matmul(f_seq, params.wq_seq);
  Tensor k_seq = matmul(f_seq, params.wk_seq);
  Tensor v_seq = matmul(f_seq, params.wv_seq);
  Tensor q_gra = matmul(f_gra, params.wq_gra);
  Tensor k_gra = matmul(f_gra, params.wk_gra);
  Tensor v_gra = matmul(f_gra, params.wv_gra);

  CrossAttnOut out;
  // sequence queries over graph keys: new sequence rows carry graph content
  {
    Tensor scores = scale(matmul(q_seq, transpose(k_gra)), 1.0 / divisor);
    out.fused_seq = matmul(softmax_masked(scores, nullptr, 1), v_gra);
  }
  // graph queries over sequence keys, padded sequence keys masked out
  {
    Tensor scores = scale(matmul(q_gra, transpose(k_seq)), 1.0 / divisor);
    if (seq_mask != nullptr) {
      if (static_cast<int>(seq_mask->size()) != m) {
        fail(ErrorKind::Shape, "sequence mask has " +
                                   std::to_string(seq_mask->size()) +
                                   " entries for " + std::to_string(m) + " tokens");
      }
      std::vector<std::uint8_t> tiled(static_cast<std::size_t>(n) * m);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) {
          tiled[static_cast<std::size_t>(i) * m + j] = (*seq_mask)[j];
        }
      }
      out.fused_gra = matmul(softmax_masked(scores, &tiled, 1), v_seq);
    } else {
      out.fused_gra = matmul(softmax_masked(scores, nullptr, 1), v_seq);
    }
  }
  return out;
}

RouterParams RouterParams::init(int in_dim, int experts, int topk, RngState &rng) {
  if (experts < 1) {
    fail(ErrorKind::Config, "router needs at least one expert");
  }
  if (topk < 1 || topk > experts) {
    fail(ErrorKind::Config, "topk " + std::to_string(topk) +
                                " must lie in [1, " + std::to_string(experts) + "]");
  }
  RouterParams p;
  p.experts = experts;
  p.topk = topk;
  p.w_router = normal_param({in_dim, experts}, rng);
  p.w_noise = normal_param({in_dim, experts}, rng);
  return p;
}

void RouterParams::collect_params(
    const std::string &prefix,
    std::vector<std::pair<std::string, Tensor>> &out) const {
  out.emplace_back(prefix + ".w_router", w_router);
  out.emplace_back(prefix + ".w_noise", w_noise);
}

RouterOutput route_tokens(const Tensor &x, const RouterParams &params,
                          bool training, RngState *rng) {
  if (params.topk < 1 || params.topk > params.experts) {
    fail(ErrorKind::Config, "topk " + std::to_string(params.topk) +
                                " must lie in [1, " +
                                std::to_string(params.experts) + "]");
  }
  const int t = x.rows();
  const int c = params.experts;
  const int k = params.topk;

  Tensor logits = matmul(x, params.w_router);
  if (training) {
    if (rng == nullptr) {
      fail(ErrorKind::Config, "training-mode routing requires a random stream");
    }
    Tensor sigma = softplus(matmul(x, params.w_noise));
    std::vector<double> eps(static_cast<std::size_t>(t) * c);
    for (double &e : eps) {
      e = rng->normal();
    }
    logits = add(logits, mul(Tensor::from({t, c}, std::move(eps), false), sigma));
  }

  RouterOutput out;
  out.tokens = t;
  out.topk = k;
  out.experts = c;
  out.expert_ids.resize(static_cast<std::size_t>(t) * k);
  std::vector<int> order(c);
  for (int row = 0; row < t; ++row) {
    std::iota(order.begin(), order.end(), 0);
    const double *h = logits.values().data() + static_cast<std::size_t>(row) * c;
    std::sort(order.begin(), order.end(), [h](int a, int b) {
      if (h[a] != h[b]) {
        return h[a] > h[b];
      }
      return a < b; // ties to the lower expert index
    });
    for (int j = 0; j < k; ++j) {
      out.expert_ids[static_cast<std::size_t>(row) * k + j] = order[j];
    }
  }

  Tensor kept = gather_cols_per_row(logits, out.expert_ids, k);
  out.gates = softmax_masked(kept, nullptr, 1);
  out.soft_mass = bin_sum_by_index(out.gates, out.expert_ids, c);
  out.hard_counts.assign(c, 0);
  for (int id : out.expert_ids) {
    ++out.hard_counts[id];
  }
  return out;
}

Expert init_expert(int in_dim, int hidden, int out_dim, RngState &rng) {
  Expert e;
  e.w1 = normal_param({in_dim, hidden}, rng);
  e.b1 = zero_param({hidden});
  e.w2 = normal_param({hidden, out_dim}, rng);
  e.b2 = zero_param({out_dim});
  return e;
}

ExpertBank ExpertBank::init(int in_dim, int hidden, int out_dim, int count,
                            RngState &rng) {
  if (count < 1) {
    fail(ErrorKind::Config, "expert bank needs at least one expert");
  }
  ExpertBank bank;
  bank.in_dim = in_dim;
  bank.hidden = hidden;
  bank.out_dim = out_dim;
  bank.experts.reserve(count);
  for (int e = 0; e < count; ++e) {
    bank.experts.push_back(init_expert(in_dim, hidden, out_dim, rng));
  }
  return bank;
}

void ExpertBank::collect_params(
    const std::string &prefix,
    std::vector<std::pair<std::string, Tensor>> &out) const {
  for (std::size_t e = 0; e < experts.size(); ++e) {
    const std::string base = prefix + ".expert" + std::to_string(e);
    out.emplace_back(base + ".w1", experts[e].w1);
    out.emplace_back(base + ".b1", experts[e].b1);
    out.emplace_back(base + ".w2", experts[e].w2);
    out.emplace_back(base + ".b2", experts[e].b2);
  }
}

Tensor expert_forward(const Expert &expert, const Tensor &rows, double slope) {
  Tensor hidden = leaky_relu(linear(rows, expert.w1, expert.b1), slope);
  return linear(hidden, expert.w2, expert.b2);
}

Tensor moe_forward(const Tensor &x, const RouterOutput &routing,
                   const ExpertBank &bank, double slope) {
  const int t = x.rows();
  if (routing.tokens != t) {
    fail(ErrorKind::Internal, "routing output was produced for " +
                                  std::to_string(routing.tokens) +
                                  " tokens, input has " + std::to_string(t));
  }
  if (routing.experts != static_cast<int>(bank.experts.size())) {
    fail(ErrorKind::Internal, "routing expert count does not match bank");
  }
  const int k = routing.topk;
  Tensor out = Tensor::zeros({t, bank.out_dim});
  for (int e = 0; e < routing.experts; ++e) {
    std::vector<int> token_rows;
    std::vector<std::size_t> gate_slots;
    for (int row = 0; row < t; ++row) {
      for (int j = 0; j < k; ++j) {
        const std::size_t slot = static_cast<std::size_t>(row) * k + j;
        const int id = routing.expert_ids[slot];
        if (id < 0 || id >= routing.experts) {
          fail(ErrorKind::Internal,
               "expert index " + std::to_string(id) + " out of range");
        }
        if (id == e) {
          token_rows.push_back(row);
          gate_slots.push_back(slot);
        }
      }
    }
    if (token_rows.empty()) {
      continue; // unselected experts are never evaluated
    }
    Tensor routed = gather_rows(x, token_rows);
    Tensor produced = expert_forward(bank.experts[e], routed, slope);
    Tensor gated = mul_rowwise(produced, gather_elements(routing.gates, gate_slots));
    out = add(out, scatter_add_rows(gated, token_rows, t));
  }
  return out;
}

Tensor load_balance_loss(const Tensor &soft_mass) {
  const int c = static_cast<int>(soft_mass.size());
  if (c < 1) {
    fail(ErrorKind::Validation, "load balance loss needs at least one expert");
  }
  double total = 0.0;
  for (double v : soft_mass.values()) {
    total += v;
  }
  if (!(total > 0.0)) {
    fail(ErrorKind::DegenerateRouting,
         "total routed mass is not positive: " + std::to_string(total));
  }
  const double uniform = 1.0 / c;
  double loss = 0.0;
  for (double v : soft_mass.values()) {
    const double diff = v / total - uniform;
    loss += diff * diff;
  }
  auto mass_node = soft_mass.node();
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = {1};
  node->values = {loss};
  node->requires_grad = soft_mass.requires_grad();
  if (node->requires_grad) {
    node->parents = {mass_node};
    node->backward = [mass_node, c, total, uniform](const detail::TensorNode &self) {
      if (!mass_node->requires_grad) {
        return;
      }
      mass_node->ensure_grad();
      // dL/dm_i = (2/total) * [(p_i - 1/C) - sum_j (p_j - 1/C) p_j]
      double cross = 0.0;
      for (int j = 0; j < c; ++j) {
        const double p = mass_node->values[j] / total;
        cross += (p - uniform) * p;
      }
      for (int i = 0; i < c; ++i) {
        const double p = mass_node->values[i] / total;
        mass_node->grad[i] += self.grad[0] * 2.0 / total * ((p - uniform) - cross);
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor importance_loss(const Tensor &importance, double weight) {
  const int c = static_cast<int>(importance.size());
  if (c < 1) {
    fail(ErrorKind::Validation, "importance loss needs at least one expert");
  }
  double mean = 0.0;
  for (double v : importance.values()) {
    mean += v;
  }
  mean /= c;
  if (!(mean > 0.0)) {
    fail(ErrorKind::DegenerateRouting,
         "mean expert importance is not positive: " + std::to_string(mean));
  }
  double var = 0.0;
  for (double v : importance.values()) {
    const double diff = v - mean;
    var += diff * diff;
  }
  var /= c;
  const double sigma = std::sqrt(var);
  const double loss = weight * sigma / mean;

  auto imp_node = importance.node();
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = {1};
  node->values = {loss};
  node->requires_grad = importance.requires_grad();
  if (node->requires_grad) {
    node->parents = {imp_node};
    node->backward = [imp_node, c, mean, sigma, weight](const detail::TensorNode &self) {
      if (!imp_node->requires_grad || weight == 0.0) {
        return;
      }
      imp_node->ensure_grad();
      if (sigma == 0.0) {
        return; // flat at exactly uniform importance
      }
      // d(sigma/mu)/dx_i = ((x_i - mu) / (C sigma) * mu - sigma / C) / mu^2
      for (int i = 0; i < c; ++i) {
        const double dsigma = (imp_node->values[i] - mean) / (c * sigma);
        imp_node->grad[i] +=
            self.grad[0] * weight * (dsigma * mean - sigma / c) / (mean * mean);
      }
    };
  }
  return Tensor(std::move(node));
}

ScmoeParams ScmoeParams::init(int dim, bool use_cra, bool use_moe, int experts,
                              int topk, double importance_weight,
                              double leaky_slope, bool sqrt_scale, RngState &rng) {
  ScmoeParams p;
  p.use_cra = use_cra;
  p.use_moe = use_moe;
  p.dim = dim;
  p.experts = experts;
  p.topk = topk;
  p.importance_weight = importance_weight;
  p.leaky_slope = leaky_slope;
  const int in_dim = use_cra ? 2 * dim : dim;
  const int hidden = 2 * dim;
  if (use_cra) {
    p.cross = CrossAttnParams::init(dim, sqrt_scale, rng);
  }
  if (use_moe) {
    p.router_seq = RouterParams::init(in_dim, experts, topk, rng);
    p.bank_seq = ExpertBank::init(in_dim, hidden, dim, experts, rng);
    p.router_gra = RouterParams::init(in_dim, experts, topk, rng);
    p.bank_gra = ExpertBank::init(in_dim, hidden, dim, experts, rng);
  } else {
    p.dense_seq = init_expert(in_dim, hidden, dim, rng);
    p.dense_gra = init_expert(in_dim, hidden, dim, rng);
  }
  return p;
}

void ScmoeParams::collect_params(
    const std::string &prefix,
    std::vector<std::pair<std::string, Tensor>> &out) const {
  if (use_cra) {
    cross.collect_params(prefix + ".cross", out);
  }
  if (use_moe) {
    router_seq.collect_params(prefix + ".seq.router", out);
    bank_seq.collect_params(prefix + ".seq", out);
    router_gra.collect_params(prefix + ".gra.router", out);
    bank_gra.collect_params(prefix + ".gra", out);
  } else {
    out.emplace_back(prefix + ".seq.dense.w1", dense_seq.w1);
    out.emplace_back(prefix + ".seq.dense.b1", dense_seq.b1);
    out.emplace_back(prefix + ".seq.dense.w2", dense_seq.w2);
    out.emplace_back(prefix + ".seq.dense.b2", dense_seq.b2);
    out.emplace_back(prefix + ".gra.dense.w1", dense_gra.w1);
    out.emplace_back(prefix + ".gra.dense.b1", dense_gra.b1);
    out.emplace_back(prefix + ".gra.dense.w2", dense_gra.w2);
    out.emplace_back(prefix + ".gra.dense.b2", dense_gra.b2);
  }
}

ScmoeResult scmoe_block(const Tensor &f_seq, const Tensor &f_gra,
                        const std::vector<std::uint8_t> *seq_mask, bool training,
                        RngState *rng, const ScmoeParams &params) {
  const int m = f_seq.rows();
  const int n = f_gra.rows();
  Tensor in_seq = f_seq;
  Tensor in_gra = f_gra;
  if (params.use_cra) {
    if (m != n) {
      fail(ErrorKind::Shape, "cross attention requires matched counts, got " +
                                 std::to_string(m) + " tokens vs " +
                                 std::to_string(n) + " nodes");
    }
    CrossAttnOut crossed = cross_attention(f_seq, f_gra, seq_mask, params.cross);
    in_seq = concat_cols(f_seq, crossed.fused_seq);
    in_gra = concat_cols(f_gra, crossed.fused_gra);
  }

  ScmoeResult result;
  if (params.use_moe) {
    RouterOutput r_seq = route_tokens(in_seq, params.router_seq, training, rng);
    result.f_seq = add(f_seq, moe_forward(in_seq, r_seq, params.bank_seq,
                                          params.leaky_slope));
    RouterOutput r_gra = route_tokens(in_gra, params.router_gra, training, rng);
    result.f_gra = add(f_gra, moe_forward(in_gra, r_gra, params.bank_gra,
                                          params.leaky_slope));
    result.aux.load_loss_seq = load_balance_loss(r_seq.soft_mass);
    result.aux.load_loss_gra = load_balance_loss(r_gra.soft_mass);
    result.aux.importance_loss_seq =
        importance_loss(r_seq.soft_mass, params.importance_weight);
    result.aux.importance_loss_gra =
        importance_loss(r_gra.soft_mass, params.importance_weight);
    result.aux.hard_counts_seq = r_seq.hard_counts;
    result.aux.hard_counts_gra = r_gra.hard_counts;
    result.aux.soft_mass_seq = r_seq.soft_mass.values();
    result.aux.soft_mass_gra = r_gra.soft_mass.values();
  } else {
    result.f_seq =
        add(f_seq, expert_forward(params.dense_seq, in_seq, params.leaky_slope));
    result.f_gra =
        add(f_gra, expert_forward(params.dense_gra, in_gra, params.leaky_slope));
    result.aux.load_loss_seq = Tensor::scalar(0.0);
    result.aux.load_loss_gra = Tensor::scalar(0.0);
    result.aux.importance_loss_seq = Tensor::scalar(0.0);
    result.aux.importance_loss_gra = Tensor::scalar(0.0);
  }
  return result;
}

} // namespace m2oe
