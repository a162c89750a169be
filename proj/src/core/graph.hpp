#pragma once

#include <string>
#include <utility>
#include <vector>

#include "core/tensor.hpp"

namespace m2oe {

// Residue-chain peptide graph: one node per residue, an undirected edge
// between consecutive residues, and the normalized adjacency
// D^{-1/2} (A + I) D^{-1/2} stored dense.
struct PeptideGraph {
  int node_count = 0;
  std::vector<int> node_ids;                 // vocabulary ids, length N
  std::vector<std::pair<int, int>> edges;    // (i, i+1) pairs
  std::vector<double> norm_adjacency;        // N x N row-major
};

// a: dense square 0/1 adjacency, symmetric, zero diagonal.
std::vector<double> normalize_adjacency(const std::vector<double> &a, int n);

PeptideGraph build_chain_graph(const std::string &sequence);

// constant (non-trainable) tensor view of the normalized adjacency
Tensor adjacency_tensor(const PeptideGraph &graph);

} // namespace m2oe
