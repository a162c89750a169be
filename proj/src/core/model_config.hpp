#pragma once

#include <cstdint>
#include <string>

#include "core/dataset.hpp"
#include "core/graph_encoder.hpp"

namespace m2oe {

// Every knob the model exposes. A config round-trips losslessly through
// key=value text, both in config files and in checkpoint headers.
struct ModelConfig {
  TaskKind task = TaskKind::Classification;
  int max_len = 64;
  int dim = 64;
  int encoder_layers = 2;
  int heads = 4;
  int experts = 4;
  int topk = 2;
  double importance_weight = 0.1;
  double load_weight = 1.0;
  double leaky_slope = 0.01;
  bool use_cra = true;
  bool use_moe = true;
  bool scale_sqrt_dk = false;
  GraphEncoderKind graph_encoder = GraphEncoderKind::Gcn;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int epochs = 200;
  int batch_size = 16;
  std::uint64_t seed = 42;

  void validate() const;

  // unknown key or malformed value -> config error
  void set(const std::string &key, const std::string &value);
  std::string get(const std::string &key) const;

  // single line of space-separated key=value pairs, fixed key order
  std::string to_key_values() const;
  static ModelConfig from_key_values(const std::string &line);

  // plain-text file: one `key = value` per line, '#' comments
  static ModelConfig load_file(const std::string &path);
};

} // namespace m2oe
