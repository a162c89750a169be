#include "core/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "core/optimizer.hpp"
#include "core/param_init.hpp"

namespace m2oe {

FusionParams FusionParams::init(int dim, RngState &rng) {
  FusionParams p;
  p.alpha_raw = zero_param({1});
  p.w1_seq = normal_param({dim, dim}, rng);
  p.b1_seq = zero_param({dim});
  p.w2_seq = normal_param({dim, 1}, rng);
  p.b2_seq = zero_param({1});
  p.w1_gra = normal_param({dim, dim}, rng);
  p.b1_gra = zero_param({dim});
  p.w2_gra = normal_param({dim, 1}, rng);
  p.b2_gra = zero_param({1});
  return p;
}

void FusionParams::collect_params(
    const std::string &prefix,
    std::vector<std::pair<std::string, Tensor>> &out) const {
  out.emplace_back(prefix + ".alpha_raw", alpha_raw);
  out.emplace_back(prefix + ".seq.w1", w1_seq);
  out.emplace_back(prefix + ".seq.b1", b1_seq);
  out.emplace_back(prefix + ".seq.w2", w2_seq);
  out.emplace_back(prefix + ".seq.b2", b2_seq);
  out.emplace_back(prefix + ".gra.w1", w1_gra);
  out.emplace_back(prefix + ".gra.b1", b1_gra);
  out.emplace_back(prefix + ".gra.w2", w2_gra);
  out.emplace_back(prefix + ".gra.b2", b2_gra);
}

Tensor pool_mean(const Tensor &features, const std::vector<std::uint8_t> *mask) {
  return mean_rows_masked(features, mask);
}

Tensor fuse_predict(const Tensor &z_seq, const Tensor &z_gra,
                    const FusionParams &params, TaskKind task, double slope) {
  auto branch = [slope](const Tensor &z, const Tensor &w1, const Tensor &b1,
                        const Tensor &w2, const Tensor &b2) {
    Tensor hidden = leaky_relu(linear(z, w1, b1), slope);
    return linear(hidden, w2, b2); // 1 x 1
  };
  Tensor seq_out = branch(z_seq, params.w1_seq, params.b1_seq, params.w2_seq,
                          params.b2_seq);
  Tensor gra_out = branch(z_gra, params.w1_gra, params.b1_gra, params.w2_gra,
                          params.b2_gra);
  Tensor alpha = reshape(sigmoid(params.alpha_raw), {1, 1});
  Tensor one_minus = add(scale(alpha, -1.0), Tensor::from({1, 1}, {1.0}, false));
  Tensor mixed = add(mul(alpha, seq_out), mul(one_minus, gra_out));
  return task == TaskKind::Classification ? sigmoid(mixed) : mixed;
}

Tensor total_loss(const Tensor &label, const Tensor &prediction,
                  const ScmoeAux &aux, TaskKind task, double load_weight) {
  Tensor task_term =
      pointwise_loss(label, prediction,
                     task == TaskKind::Classification ? LossKind::Bce
                                                      : LossKind::Mse);
  Tensor load = scale(
      add(reshape(aux.load_loss_seq, {1, 1}), reshape(aux.load_loss_gra, {1, 1})),
      load_weight);
  Tensor importance = add(reshape(aux.importance_loss_seq, {1, 1}),
                          reshape(aux.importance_loss_gra, {1, 1}));
  return add(reshape(task_term, {1, 1}), add(load, importance));
}

Model::Model(const ModelConfig &config) : config_(config) {
  config_.validate();
  RngState rng(config_.seed);
  seq_encoder_ = SeqEncoderParams::init(config_.max_len, config_.dim,
                                        config_.encoder_layers, config_.heads,
                                        config_.leaky_slope, rng);
  graph_encoder_ =
      GraphEncoderParams::init(config_.graph_encoder, config_.dim,
                               config_.encoder_layers, config_.leaky_slope, rng);
  scmoe_ = ScmoeParams::init(config_.dim, config_.use_cra, config_.use_moe,
                             config_.experts, config_.topk,
                             config_.importance_weight, config_.leaky_slope,
                             config_.scale_sqrt_dk, rng);
  fusion_ = FusionParams::init(config_.dim, rng);

  seq_encoder_.collect_params("seq", params_);
  graph_encoder_.collect_params("gra", params_);
  scmoe_.collect_params("scmoe", params_);
  fusion_.collect_params("fusion", params_);
}

ForwardOut Model::forward(const PeptideRecord &record, bool training,
                          RngState *rng) const {
  const int length = static_cast<int>(record.sequence.size());
  if (length > config_.max_len) {
    fail(ErrorKind::Validation,
         "sequence length " + std::to_string(length) + " exceeds max_len " +
             std::to_string(config_.max_len));
  }
  // processed unpadded so token count equals graph node count
  TokenizedSequence tokens = tokenize(record.sequence, length);
  PeptideGraph graph = build_chain_graph(record.sequence);

  Tensor f_seq = seq_encode(tokens, seq_encoder_);
  Tensor f_gra = graph_encode(graph, graph_encoder_);
  ScmoeResult mixed =
      scmoe_block(f_seq, f_gra, &tokens.mask, training, rng, scmoe_);

  Tensor z_seq = pool_mean(mixed.f_seq, &tokens.mask);
  Tensor z_gra = pool_mean(mixed.f_gra, nullptr);
  ForwardOut out;
  out.prediction =
      fuse_predict(z_seq, z_gra, fusion_, config_.task, config_.leaky_slope);
  out.aux = std::move(mixed.aux);
  return out;
}

double Model::predict(const std::string &sequence) const {
  PeptideRecord record;
  record.sequence = sequence;
  return forward(record, false, nullptr).prediction.item();
}

Metrics Model::evaluate(const Dataset &dataset) const {
  if (dataset.empty()) {
    fail(ErrorKind::Validation, "cannot evaluate on an empty dataset");
  }
  if (dataset.task != config_.task) {
    fail(ErrorKind::Validation,
         std::string("dataset task ") + task_name(dataset.task) +
             " does not match model task " + task_name(config_.task));
  }
  std::vector<double> labels, predictions;
  labels.reserve(dataset.size());
  predictions.reserve(dataset.size());
  for (const PeptideRecord &record : dataset.records) {
    labels.push_back(record.label);
    predictions.push_back(forward(record, false, nullptr).prediction.item());
  }
  return compute_metrics(config_.task, labels, predictions);
}

double Model::fusion_alpha() const {
  return stable_sigmoid(fusion_.alpha_raw.item());
}

TrainHistory Model::fit(const Dataset &train, const Dataset &val) {
  if (train.empty() || val.empty()) {
    fail(ErrorKind::Validation, "training requires non-empty train and val sets");
  }
  if (train.task != config_.task || val.task != config_.task) {
    fail(ErrorKind::Validation, "dataset task does not match model task");
  }

  RngState rng(config_.seed ^ 0x9e3779b97f4a7c15ULL);
  AdamConfig adam;
  adam.learning_rate = config_.learning_rate;
  adam.beta1 = config_.adam_beta1;
  adam.beta2 = config_.adam_beta2;
  adam.epsilon = config_.adam_epsilon;
  std::vector<Tensor> tensors;
  tensors.reserve(params_.size());
  for (const auto &[name, tensor] : params_) {
    tensors.push_back(tensor);
  }
  AdamOptimizer optimizer(tensors, adam);
  optimizer.zero_grad();

  const int c = config_.experts;
  const std::size_t n = train.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    order[i] = i;
  }

  TrainHistory history;
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> best_values;

  for (int epoch = 0; epoch < config_.epochs; ++epoch) {
    for (std::size_t i = n - 1; i > 0; --i) {
      const std::uint32_t j = rng.next_below(static_cast<std::uint32_t>(i + 1));
      std::swap(order[i], order[j]);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.hard_counts_seq.assign(config_.use_moe ? c : 0, 0);
    record.hard_counts_gra.assign(config_.use_moe ? c : 0, 0);
    std::vector<double> epoch_mass_seq(config_.use_moe ? c : 0, 0.0);
    std::vector<double> epoch_mass_gra(config_.use_moe ? c : 0, 0.0);

    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < n; start += config_.batch_size) {
      const std::size_t stop = std::min(n, start + config_.batch_size);
      Tensor batch_loss;
      try {
        for (std::size_t i = start; i < stop; ++i) {
          const PeptideRecord &sample = train.records[order[i]];
          ForwardOut fwd = forward(sample, true, &rng);
          Tensor label = Tensor::from({1, 1}, {sample.label}, false);
          Tensor sample_loss = total_loss(label, fwd.prediction, fwd.aux,
                                          config_.task, config_.load_weight);
          batch_loss =
              batch_loss.defined() ? add(batch_loss, sample_loss) : sample_loss;
          if (config_.use_moe) {
            for (int e = 0; e < c; ++e) {
              record.hard_counts_seq[e] += fwd.aux.hard_counts_seq[e];
              record.hard_counts_gra[e] += fwd.aux.hard_counts_gra[e];
              epoch_mass_seq[e] += fwd.aux.soft_mass_seq[e];
              epoch_mass_gra[e] += fwd.aux.soft_mass_gra[e];
            }
          }
        }
        batch_loss = scale(batch_loss, 1.0 / static_cast<double>(stop - start));
        run_backward(batch_loss);
        optimizer.step();
      } catch (const M2oeError &err) {
        if (err.kind() == ErrorKind::NonFinite) {
          fail(ErrorKind::Divergence,
               "training diverged at epoch " + std::to_string(epoch) + ": " +
                   err.what());
        }
        throw;
      }
      optimizer.zero_grad();
      loss_sum += batch_loss.item();
      ++batches;
    }

    record.train_loss = loss_sum / batches;
    record.alpha = fusion_alpha();
    // alpha is sigmoid-parameterized; it can only leave (0, 1) by numeric
    // saturation, which means the run has blown up
    if (!(record.alpha > 0.0 && record.alpha < 1.0)) {
      fail(ErrorKind::Divergence, "fusion weight saturated to " +
                                      std::to_string(record.alpha) +
                                      " at epoch " + std::to_string(epoch));
    }
    try {
      record.val = evaluate(val);
    } catch (const M2oeError &err) {
      if (err.kind() == ErrorKind::NonFinite) {
        fail(ErrorKind::Divergence,
             "training diverged at epoch " + std::to_string(epoch) + ": " +
                 err.what());
      }
      throw;
    }
    if (config_.use_moe) {
      std::vector<double> seq_counts(record.hard_counts_seq.begin(),
                                     record.hard_counts_seq.end());
      std::vector<double> gra_counts(record.hard_counts_gra.begin(),
                                     record.hard_counts_gra.end());
      record.hard_cv_seq = coefficient_of_variation(seq_counts);
      record.hard_cv_gra = coefficient_of_variation(gra_counts);
      record.importance_cv_seq = coefficient_of_variation(epoch_mass_seq);
      record.importance_cv_gra = coefficient_of_variation(epoch_mass_gra);
    }

    const double score = record.val.selection_score();
    if (score > best_score) {
      best_score = score;
      history.best_epoch = epoch;
      best_values.clear();
      best_values.reserve(params_.size());
      for (const auto &[name, tensor] : params_) {
        best_values.push_back(tensor.values());
      }
    }
    history.epochs.push_back(std::move(record));
  }

  if (!best_values.empty()) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      params_[i].second.raw_values() = best_values[i];
    }
  }
  history.final_val = evaluate(val);
  return history;
}

std::string TrainHistory::to_json() const {
  nlohmann::json out;
  out["epochs"] = nlohmann::json::array();
  for (const EpochRecord &record : epochs) {
    nlohmann::json e;
    e["epoch"] = record.epoch;
    e["train_loss"] = record.train_loss;
    e["val"] = nlohmann::json::parse(record.val.to_json());
    e["alpha"] = record.alpha;
    if (!record.hard_counts_seq.empty()) {
      e["hard_counts_seq"] = record.hard_counts_seq;
      e["hard_counts_gra"] = record.hard_counts_gra;
      e["hard_cv_seq"] = record.hard_cv_seq;
      e["hard_cv_gra"] = record.hard_cv_gra;
      e["importance_cv_seq"] = record.importance_cv_seq;
      e["importance_cv_gra"] = record.importance_cv_gra;
    }
    out["epochs"].push_back(std::move(e));
  }
  out["best_epoch"] = best_epoch;
  out["final"] = nlohmann::json::parse(final_val.to_json());
  return out.dump();
}

void Model::save(const std::string &path) const {
  std::ofstream out(path);
  if (!out) {
    fail(ErrorKind::Io, "cannot write checkpoint file '" + path + "'");
  }
  out << kCheckpointMagic << '\n';
  out << config_.to_key_values() << '\n';
  char buf[64];
  for (const auto &[name, tensor] : params_) {
    out << name << '\n';
    const auto &shape = tensor.shape();
    for (std::size_t i = 0; i < shape.size(); ++i) {
      out << (i > 0 ? " " : "") << shape[i];
    }
    out << '\n';
    for (double v : tensor.values()) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << buf << '\n';
    }
  }
  if (!out) {
    fail(ErrorKind::Io, "failed while writing checkpoint '" + path + "'");
  }
}

Model Model::load(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    fail(ErrorKind::Io, "cannot open checkpoint file '" + path + "'");
  }
  std::string line;
  if (!std::getline(in, line)) {
    fail(ErrorKind::Format, "checkpoint '" + path + "' is empty");
  }
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
  if (line != kCheckpointMagic) {
    fail(ErrorKind::Format, "checkpoint version '" + line +
                                "' does not match expected '" +
                                kCheckpointMagic + "'");
  }
  if (!std::getline(in, line)) {
    fail(ErrorKind::Format, "checkpoint '" + path + "' is missing its config line");
  }
  ModelConfig config;
  try {
    config = ModelConfig::from_key_values(line);
  } catch (const M2oeError &err) {
    fail(ErrorKind::Format,
         std::string("checkpoint config line is invalid: ") + err.what());
  }

  Model model(config);
  std::size_t loaded = 0;
  std::vector<bool> seen(model.params_.size(), false);
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    const std::string name = line;
    auto it = std::find_if(model.params_.begin(), model.params_.end(),
                           [&name](const auto &p) { return p.first == name; });
    if (it == model.params_.end()) {
      fail(ErrorKind::Format, "checkpoint holds unknown parameter '" + name + "'");
    }
    const std::size_t index = it - model.params_.begin();
    if (seen[index]) {
      fail(ErrorKind::Format, "checkpoint repeats parameter '" + name + "'");
    }
    if (!std::getline(in, line)) {
      fail(ErrorKind::Format, "checkpoint truncated in shape of '" + name + "'");
    }
    std::istringstream shape_in(line);
    std::vector<int> shape;
    int dim = 0;
    while (shape_in >> dim) {
      shape.push_back(dim);
    }
    if (shape != it->second.shape()) {
      fail(ErrorKind::Format, "checkpoint shape for '" + name +
                                  "' is " + shape_str(shape) + ", expected " +
                                  shape_str(it->second.shape()));
    }
    std::vector<double> &values = it->second.raw_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!std::getline(in, line)) {
        fail(ErrorKind::Format, "checkpoint truncated in values of '" + name + "'");
      }
      char *end = nullptr;
      const double v = std::strtod(line.c_str(), &end);
      if (line.empty() || end == nullptr || *end != '\0') {
        fail(ErrorKind::Format,
             "checkpoint holds a malformed value '" + line + "' in '" + name + "'");
      }
      values[i] = v;
    }
    check_finite(values, "checkpoint load");
    seen[index] = true;
    ++loaded;
  }
  if (loaded != model.params_.size()) {
    fail(ErrorKind::Format, "checkpoint holds " + std::to_string(loaded) +
                                " parameters, model expects " +
                                std::to_string(model.params_.size()));
  }
  return model;
}

} // namespace m2oe
