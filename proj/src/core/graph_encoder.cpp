#include "core/graph_encoder.hpp"

#include "core/param_init.hpp"
#include "core/vocab.hpp"

namespace m2oe {

GraphEncoderKind graph_encoder_from_name(const std::string &name) {
  if (name == "gcn") {
    return GraphEncoderKind::Gcn;
  }
  if (name == "sage") {
    return GraphEncoderKind::Sage;
  }
  fail(ErrorKind::Config,
       "unknown graph encoder '" + name + "' (expected gcn or sage)");
}

const char *graph_encoder_name(GraphEncoderKind kind) {
  return kind == GraphEncoderKind::Gcn ? "gcn" : "sage";
}

GraphEncoderParams GraphEncoderParams::init(GraphEncoderKind kind, int dim,
                                            int layers, double leaky_slope,
                                            RngState &rng) {
  if (layers < 1) {
    fail(ErrorKind::Config, "graph encoder needs at least one layer");
  }
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) {
    fail(ErrorKind::Config, "leaky slope must lie in (0, 1)");
  }
  GraphEncoderParams p;
  p.kind = kind;
  p.dim = dim;
  p.leaky_slope = leaky_slope;
  p.node_embedding = normal_param({kVocabSize, dim}, rng);
  for (int l = 0; l < layers; ++l) {
    if (kind == GraphEncoderKind::Gcn) {
      p.weights.push_back(normal_param({dim, dim}, rng));
    } else {
      p.sage_self.push_back(normal_param({dim, dim}, rng));
      p.sage_neighbor.push_back(normal_param({dim, dim}, rng));
    }
  }
  return p;
}

void GraphEncoderParams::collect_params(
    const std::string &prefix,
    std::vector<std::pair<std::string, Tensor>> &out) const {
  out.emplace_back(prefix + ".node_embedding", node_embedding);
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.emplace_back(prefix + ".layer" + std::to_string(l) + ".w", weights[l]);
  }
  for (std::size_t l = 0; l < sage_self.size(); ++l) {
    const std::string base = prefix + ".layer" + std::to_string(l);
    out.emplace_back(base + ".w_self", sage_self[l]);
    out.emplace_back(base + ".w_neighbor", sage_neighbor[l]);
  }
}

Tensor gcn_layer(const Tensor &norm_adj, const Tensor &x, const Tensor &w,
                 double slope) {
  if (norm_adj.rows() != norm_adj.cols() || norm_adj.cols() != x.rows()) {
    fail(ErrorKind::Shape, "gcn adjacency " + shape_str(norm_adj.shape()) +
                               " does not match features " + shape_str(x.shape()));
  }
  return leaky_relu(matmul(matmul(norm_adj, x), w), slope);
}

Tensor sage_layer(const Tensor &mean_adj, const Tensor &x, const Tensor &w_self,
                  const Tensor &w_neighbor, double slope) {
  Tensor self_term = matmul(x, w_self);
  Tensor neighbor_term = matmul(matmul(mean_adj, x), w_neighbor);
  return leaky_relu(add(self_term, neighbor_term), slope);
}

Tensor mean_neighbor_tensor(const PeptideGraph &graph) {
  const int n = graph.node_count;
  std::vector<double> mean(static_cast<std::size_t>(n) * n, 0.0);
  std::vector<int> degree(n, 0);
  for (const auto &[i, j] : graph.edges) {
    ++degree[i];
    ++degree[j];
  }
  for (const auto &[i, j] : graph.edges) {
    mean[static_cast<std::size_t>(i) * n + j] = 1.0 / degree[i];
    mean[static_cast<std::size_t>(j) * n + i] = 1.0 / degree[j];
  }
  return Tensor::from({n, n}, std::move(mean), false);
}

Tensor graph_encode(const PeptideGraph &graph, const GraphEncoderParams &params) {
  if (graph.node_count < 1 ||
      graph.node_ids.size() != static_cast<std::size_t>(graph.node_count)) {
    fail(ErrorKind::Validation, "graph has no nodes or inconsistent node list");
  }
  Tensor x = gather_rows(params.node_embedding, graph.node_ids);
  if (params.kind == GraphEncoderKind::Gcn) {
    Tensor adj = adjacency_tensor(graph);
    for (const Tensor &w : params.weights) {
      x = gcn_layer(adj, x, w, params.leaky_slope);
    }
  } else {
    Tensor mean_adj = mean_neighbor_tensor(graph);
    for (std::size_t l = 0; l < params.sage_self.size(); ++l) {
      x = sage_layer(mean_adj, x, params.sage_self[l], params.sage_neighbor[l],
                     params.leaky_slope);
    }
  }
  return x;
}

} // namespace m2oe
