#include "core/graph.hpp"

#include <cmath>

#include "core/vocab.hpp"

namespace m2oe {

std::vector<double> normalize_adjacency(const std::vector<double> &a, int n) {
  if (n < 1 || a.size() != static_cast<std::size_t>(n) * n) {
    fail(ErrorKind::Validation, "adjacency must be square, got " +
                                    std::to_string(a.size()) + " entries for n=" +
                                    std::to_string(n));
  }
  for (int i = 0; i < n; ++i) {
    if (a[static_cast<std::size_t>(i) * n + i] != 0.0) {
      fail(ErrorKind::Validation,
           "adjacency diagonal must be zero at node " + std::to_string(i));
    }
    for (int j = 0; j < n; ++j) {
      const double v = a[static_cast<std::size_t>(i) * n + j];
      if (v != 0.0 && v != 1.0) {
        fail(ErrorKind::Validation, "adjacency entries must be 0 or 1");
      }
      if (v != a[static_cast<std::size_t>(j) * n + i]) {
        fail(ErrorKind::Validation, "adjacency is not symmetric at (" +
                                        std::to_string(i) + ", " +
                                        std::to_string(j) + ")");
      }
    }
  }

  // A~ = A + I; degree of A~ is always >= 1 thanks to the self loop
  std::vector<double> degree(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double d = 1.0;
    for (int j = 0; j < n; ++j) {
      d += a[static_cast<std::size_t>(i) * n + j];
    }
    degree[i] = d;
  }
  std::vector<double> out(a.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double tilde =
          a[static_cast<std::size_t>(i) * n + j] + (i == j ? 1.0 : 0.0);
      if (tilde != 0.0) {
        out[static_cast<std::size_t>(i) * n + j] =
            tilde / std::sqrt(degree[i] * degree[j]);
      }
    }
  }
  return out;
}

PeptideGraph build_chain_graph(const std::string &sequence) {
  if (sequence.empty()) {
    fail(ErrorKind::Validation, "cannot build a graph from an empty sequence");
  }
  if (!valid_sequence(sequence)) {
    fail(ErrorKind::Validation,
         "sequence contains characters outside A-Z: '" + sequence + "'");
  }
  PeptideGraph graph;
  graph.node_count = static_cast<int>(sequence.size());
  graph.node_ids.reserve(graph.node_count);
  for (char c : sequence) {
    graph.node_ids.push_back(token_id(c));
  }
  const int n = graph.node_count;
  std::vector<double> a(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i + 1 < n; ++i) {
    graph.edges.emplace_back(i, i + 1);
    a[static_cast<std::size_t>(i) * n + i + 1] = 1.0;
    a[static_cast<std::size_t>(i + 1) * n + i] = 1.0;
  }
  graph.norm_adjacency = normalize_adjacency(a, n);
  return graph;
}

Tensor adjacency_tensor(const PeptideGraph &graph) {
  return Tensor::from({graph.node_count, graph.node_count},
                      graph.norm_adjacency, false);
}

} // namespace m2oe
