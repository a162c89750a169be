#pragma once

#include <string>
#include <utility>
#include <vector>

#include "core/graph.hpp"
#include "core/ops.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace m2oe {

enum class GraphEncoderKind { Gcn, Sage };

GraphEncoderKind graph_encoder_from_name(const std::string &name);
const char *graph_encoder_name(GraphEncoderKind kind);

struct GraphEncoderParams {
  GraphEncoderKind kind = GraphEncoderKind::Gcn;
  int dim = 0;
  double leaky_slope = 0.01;
  Tensor node_embedding; // 22 x D
  std::vector<Tensor> weights;        // gcn: per-layer D x D
  std::vector<Tensor> sage_self;      // sage: per-layer D x D
  std::vector<Tensor> sage_neighbor;  // sage: per-layer D x D

  int layer_count() const {
    return static_cast<int>(kind == GraphEncoderKind::Gcn ? weights.size()
                                                          : sage_self.size());
  }

  static GraphEncoderParams init(GraphEncoderKind kind, int dim, int layers,
                                 double leaky_slope, RngState &rng);
  void collect_params(const std::string &prefix,
                      std::vector<std::pair<std::string, Tensor>> &out) const;
};

// LeakyReLU(A_hat . X . W)
Tensor gcn_layer(const Tensor &norm_adj, const Tensor &x, const Tensor &w,
                 double slope);

// mean-aggregator alternative: LeakyReLU(X . W_self + mean_nb(X) . W_nb)
Tensor sage_layer(const Tensor &mean_adj, const Tensor &x, const Tensor &w_self,
                  const Tensor &w_neighbor, double slope);

// row-normalized adjacency without self loops (zero rows for isolated nodes)
Tensor mean_neighbor_tensor(const PeptideGraph &graph);

Tensor graph_encode(const PeptideGraph &graph, const GraphEncoderParams &params);

} // namespace m2oe
