#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "core/dataset.hpp"
#include "core/metrics.hpp"
#include "core/model_config.hpp"
#include "core/scmoe.hpp"
#include "core/seq_encoder.hpp"

namespace m2oe {

inline constexpr const char *kCheckpointMagic = "M2OE-CKPT v1";

// Decoder head: sigmoid-gated convex combination of two branch MLPs.
struct FusionParams {
  Tensor alpha_raw; // alpha = sigmoid(alpha_raw), starts at 0.5
  Tensor w1_seq, b1_seq, w2_seq, b2_seq; // d -> d -> 1
  Tensor w1_gra, b1_gra, w2_gra, b2_gra;

  static FusionParams init(int dim, RngState &rng);
  void collect_params(const std::string &prefix,
                      std::vector<std::pair<std::string, Tensor>> &out) const;
};

Tensor pool_mean(const Tensor &features, const std::vector<std::uint8_t> *mask);

Tensor fuse_predict(const Tensor &z_seq, const Tensor &z_gra,
                    const FusionParams &params, TaskKind task, double slope);

// task loss + load_weight * (seq + gra load loss) + importance losses
// (importance weight is already applied inside the aux terms)
Tensor total_loss(const Tensor &label, const Tensor &prediction,
                  const ScmoeAux &aux, TaskKind task, double load_weight);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  Metrics val;
  double alpha = 0.5;
  std::vector<std::int64_t> hard_counts_seq, hard_counts_gra;
  double hard_cv_seq = 0.0, hard_cv_gra = 0.0;
  double importance_cv_seq = 0.0, importance_cv_gra = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  Metrics final_val;

  std::string to_json() const;
};

struct ForwardOut {
  Tensor prediction; // scalar
  ScmoeAux aux;
};

class Model {
public:
  explicit Model(const ModelConfig &config);

  const ModelConfig &config() const { return config_; }

  ForwardOut forward(const PeptideRecord &record, bool training, RngState *rng) const;

  double predict(const std::string &sequence) const;
  Metrics evaluate(const Dataset &dataset) const;
  TrainHistory fit(const Dataset &train, const Dataset &val);

  void save(const std::string &path) const;
  static Model load(const std::string &path);

  const std::vector<std::pair<std::string, Tensor>> &parameters() const {
    return params_;
  }
  double fusion_alpha() const;

private:
  ModelConfig config_;
  SeqEncoderParams seq_encoder_;
  GraphEncoderParams graph_encoder_;
  ScmoeParams scmoe_;
  FusionParams fusion_;
  std::vector<std::pair<std::string, Tensor>> params_;
};

} // namespace m2oe
