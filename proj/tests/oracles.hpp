// Independent reference implementations used to cross-check the library.
// Everything here is deliberately written as straight dense arithmetic with
// no shared code paths into the implementations under test.
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "core/scmoe.hpp"
#include "core/tensor.hpp"

namespace oracle {

// plain i-j-k triple loop
inline std::vector<double> matmul(const std::vector<double> &a, int m, int k,
                                  const std::vector<double> &b, int n) {
  std::vector<double> out(static_cast<std::size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int kk = 0; kk < k; ++kk) {
        acc += a[static_cast<std::size_t>(i) * k + kk] *
               b[static_cast<std::size_t>(kk) * n + j];
      }
      out[static_cast<std::size_t>(i) * n + j] = acc;
    }
  }
  return out;
}

// D^{-1/2} (A + I) D^{-1/2} via explicit diagonal matrix products
inline std::vector<double> normalized_adjacency(const std::vector<double> &a,
                                                int n) {
  std::vector<double> tilde(a);
  for (int i = 0; i < n; ++i) {
    tilde[static_cast<std::size_t>(i) * n + i] += 1.0;
  }
  std::vector<double> d_inv_sqrt(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    double degree = 0.0;
    for (int j = 0; j < n; ++j) {
      degree += tilde[static_cast<std::size_t>(i) * n + j];
    }
    d_inv_sqrt[static_cast<std::size_t>(i) * n + i] = 1.0 / std::sqrt(degree);
  }
  return matmul(matmul(d_inv_sqrt, n, n, tilde, n), n, n, d_inv_sqrt, n);
}

// direct exp / sum, no max shift
inline std::vector<double> softmax(const std::vector<double> &logits) {
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i]);
    sum += out[i];
  }
  for (double &v : out) {
    v /= sum;
  }
  return out;
}

// Evaluates every expert for every token and multiplies by the dense
// (mostly zero) gate vector.
inline std::vector<double> moe_dense(const std::vector<double> &x, int tokens,
                                     int in_dim,
                                     const m2oe::RouterOutput &routing,
                                     const m2oe::ExpertBank &bank,
                                     double slope) {
  std::vector<double> out(static_cast<std::size_t>(tokens) * bank.out_dim, 0.0);
  for (int t = 0; t < tokens; ++t) {
    // dense gate vector for this token
    std::vector<double> gate(bank.experts.size(), 0.0);
    for (int j = 0; j < routing.topk; ++j) {
      const std::size_t slot = static_cast<std::size_t>(t) * routing.topk + j;
      gate[routing.expert_ids[slot]] += routing.gates.values()[slot];
    }
    for (std::size_t e = 0; e < bank.experts.size(); ++e) {
      const m2oe::Expert &expert = bank.experts[e];
      std::vector<double> hidden(bank.hidden, 0.0);
      for (int h = 0; h < bank.hidden; ++h) {
        double acc = expert.b1.values()[h];
        for (int i = 0; i < in_dim; ++i) {
          acc += x[static_cast<std::size_t>(t) * in_dim + i] *
                 expert.w1.values()[static_cast<std::size_t>(i) * bank.hidden + h];
        }
        hidden[h] = acc >= 0.0 ? acc : slope * acc;
      }
      for (int o = 0; o < bank.out_dim; ++o) {
        double acc = expert.b2.values()[o];
        for (int h = 0; h < bank.hidden; ++h) {
          acc += hidden[h] *
                 expert.w2.values()[static_cast<std::size_t>(h) * bank.out_dim + o];
        }
        out[static_cast<std::size_t>(t) * bank.out_dim + o] += gate[e] * acc;
      }
    }
  }
  return out;
}

inline double population_cv(const std::vector<double> &values) {
  double mean = 0.0;
  for (double v : values) {
    mean += v;
  }
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) {
    var += (v - mean) * (v - mean);
  }
  var /= static_cast<double>(values.size());
  return std::sqrt(var) / mean;
}

} // namespace oracle
