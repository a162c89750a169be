#include "m2oe/m2oe.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "core/model.hpp"

using m2oe::Dataset;
using m2oe::ErrorKind;
using m2oe::M2oeError;
using m2oe::Model;
using m2oe::ModelConfig;

struct m2oe_config {
  ModelConfig impl;
};

struct m2oe_dataset {
  Dataset impl;
};

struct m2oe_model {
  Model impl;
};

namespace {

thread_local std::string g_last_error;

m2oe_status status_of(ErrorKind kind) {
  switch (kind) {
  case ErrorKind::Shape: return M2OE_ERR_SHAPE;
  case ErrorKind::Config: return M2OE_ERR_CONFIG;
  case ErrorKind::Validation: return M2OE_ERR_VALIDATION;
  case ErrorKind::Parse: return M2OE_ERR_PARSE;
  case ErrorKind::Io: return M2OE_ERR_IO;
  case ErrorKind::Format: return M2OE_ERR_FORMAT;
  case ErrorKind::DegenerateMask:
  case ErrorKind::DegenerateRouting: return M2OE_ERR_DEGENERATE;
  case ErrorKind::Divergence: return M2OE_ERR_DIVERGED;
  case ErrorKind::Determinism:
  case ErrorKind::NonFinite:
  case ErrorKind::Internal: return M2OE_ERR_INTERNAL;
  }
  return M2OE_ERR_INTERNAL;
}

template <typename Fn> m2oe_status guarded(Fn &&fn) {
  try {
    fn();
    return M2OE_OK;
  } catch (const M2oeError &err) {
    g_last_error = err.what();
    return status_of(err.kind());
  } catch (const std::exception &err) {
    g_last_error = err.what();
    return M2OE_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return M2OE_ERR_INTERNAL;
  }
}

m2oe_status invalid_argument(const char *message) {
  g_last_error = message;
  return M2OE_ERR_INVALID_ARGUMENT;
}

char *dup_string(const std::string &text) {
  char *out = static_cast<char *>(std::malloc(text.size() + 1));
  if (out != nullptr) {
    std::memcpy(out, text.c_str(), text.size() + 1);
  }
  return out;
}

m2oe_status copy_to_buffer(const std::string &text, char *buffer,
                           size_t buffer_len) {
  if (buffer == nullptr || buffer_len == 0) {
    return invalid_argument("output buffer is null or empty");
  }
  if (text.size() + 1 > buffer_len) {
    g_last_error = "buffer of " + std::to_string(buffer_len) +
                   " bytes is too small for " + std::to_string(text.size() + 1);
    return M2OE_ERR_INVALID_ARGUMENT;
  }
  std::memcpy(buffer, text.c_str(), text.size() + 1);
  return M2OE_OK;
}

} // namespace

extern "C" {

const char *m2oe_status_name(m2oe_status status) {
  switch (status) {
  case M2OE_OK: return "ok";
  case M2OE_ERR_INVALID_ARGUMENT: return "invalid-argument";
  case M2OE_ERR_IO: return "io";
  case M2OE_ERR_PARSE: return "parse";
  case M2OE_ERR_CONFIG: return "config";
  case M2OE_ERR_SHAPE: return "shape";
  case M2OE_ERR_VALIDATION: return "validation";
  case M2OE_ERR_FORMAT: return "format";
  case M2OE_ERR_DEGENERATE: return "degenerate";
  case M2OE_ERR_DIVERGED: return "diverged";
  case M2OE_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char *m2oe_last_error(void) { return g_last_error.c_str(); }

m2oe_status m2oe_config_create(m2oe_config **out) {
  if (out == nullptr) {
    return invalid_argument("config output pointer is null");
  }
  return guarded([&] { *out = new m2oe_config{ModelConfig{}}; });
}

m2oe_status m2oe_config_load(const char *path, m2oe_config **out) {
  if (path == nullptr || out == nullptr) {
    return invalid_argument("config path or output pointer is null");
  }
  return guarded([&] { *out = new m2oe_config{ModelConfig::load_file(path)}; });
}

m2oe_status m2oe_config_set(m2oe_config *config, const char *key,
                            const char *value) {
  if (config == nullptr || key == nullptr || value == nullptr) {
    return invalid_argument("config, key, or value is null");
  }
  return guarded([&] {
    config->impl.set(key, value);
    config->impl.validate();
  });
}

m2oe_status m2oe_config_get(const m2oe_config *config, const char *key,
                            char *buffer, size_t buffer_len) {
  if (config == nullptr || key == nullptr) {
    return invalid_argument("config or key is null");
  }
  std::string value;
  const m2oe_status status = guarded([&] { value = config->impl.get(key); });
  if (status != M2OE_OK) {
    return status;
  }
  return copy_to_buffer(value, buffer, buffer_len);
}

void m2oe_config_free(m2oe_config *config) { delete config; }

m2oe_status m2oe_dataset_load_csv(const char *path, const char *task,
                                  m2oe_dataset **out) {
  if (path == nullptr || task == nullptr || out == nullptr) {
    return invalid_argument("dataset path, task, or output pointer is null");
  }
  return guarded([&] {
    *out = new m2oe_dataset{
        m2oe::load_csv_dataset(path, m2oe::task_from_name(task))};
  });
}

m2oe_status m2oe_dataset_synth(size_t count, uint64_t seed, const char *task,
                               m2oe_dataset **out) {
  if (task == nullptr || out == nullptr) {
    return invalid_argument("task or output pointer is null");
  }
  return guarded([&] {
    *out = new m2oe_dataset{
        m2oe::synth_dataset(count, seed, m2oe::task_from_name(task))};
  });
}

m2oe_status m2oe_dataset_split(const m2oe_dataset *dataset, uint64_t seed,
                               m2oe_dataset **train, m2oe_dataset **val,
                               m2oe_dataset **test) {
  if (dataset == nullptr || train == nullptr || val == nullptr ||
      test == nullptr) {
    return invalid_argument("dataset or split output pointer is null");
  }
  return guarded([&] {
    m2oe::DatasetSplit split = m2oe::split_dataset(dataset->impl, seed);
    *train = new m2oe_dataset{std::move(split.train)};
    *val = new m2oe_dataset{std::move(split.val)};
    *test = new m2oe_dataset{std::move(split.test)};
  });
}

size_t m2oe_dataset_size(const m2oe_dataset *dataset) {
  return dataset == nullptr ? 0 : dataset->impl.size();
}

void m2oe_dataset_free(m2oe_dataset *dataset) { delete dataset; }

m2oe_status m2oe_model_create(const m2oe_config *config, m2oe_model **out) {
  if (config == nullptr || out == nullptr) {
    return invalid_argument("config or model output pointer is null");
  }
  return guarded([&] { *out = new m2oe_model{Model(config->impl)}; });
}

m2oe_status m2oe_model_train(m2oe_model *model, const m2oe_dataset *train,
                             const m2oe_dataset *val, char **history_json) {
  if (model == nullptr || train == nullptr || val == nullptr) {
    return invalid_argument("model or dataset is null");
  }
  return guarded([&] {
    m2oe::TrainHistory history = model->impl.fit(train->impl, val->impl);
    if (history_json != nullptr) {
      *history_json = dup_string(history.to_json());
    }
  });
}

m2oe_status m2oe_model_evaluate(const m2oe_model *model,
                                const m2oe_dataset *dataset,
                                char **metrics_json) {
  if (model == nullptr || dataset == nullptr || metrics_json == nullptr) {
    return invalid_argument("model, dataset, or output pointer is null");
  }
  return guarded([&] {
    *metrics_json = dup_string(model->impl.evaluate(dataset->impl).to_json());
  });
}

m2oe_status m2oe_model_predict(const m2oe_model *model, const char *sequence,
                               double *out) {
  if (model == nullptr || sequence == nullptr || out == nullptr) {
    return invalid_argument("model, sequence, or output pointer is null");
  }
  return guarded([&] { *out = model->impl.predict(sequence); });
}

m2oe_status m2oe_model_predict_csv(const m2oe_model *model,
                                   const char *input_csv,
                                   const char *output_csv) {
  if (model == nullptr || input_csv == nullptr || output_csv == nullptr) {
    return invalid_argument("model or path is null");
  }
  return guarded([&] {
    std::vector<m2oe::PeptideRecord> records =
        m2oe::load_sequences_csv(input_csv);
    std::ofstream out(output_csv);
    if (!out) {
      m2oe::fail(ErrorKind::Io,
                 std::string("cannot write output file '") + output_csv + "'");
    }
    out << "id,sequence,prediction\n";
    char buf[64];
    for (const m2oe::PeptideRecord &record : records) {
      const double prediction = model->impl.predict(record.sequence);
      std::snprintf(buf, sizeof(buf), "%.17g", prediction);
      out << record.id << ',' << record.sequence << ',' << buf << '\n';
    }
    if (!out) {
      m2oe::fail(ErrorKind::Io,
                 std::string("failed while writing '") + output_csv + "'");
    }
  });
}

m2oe_status m2oe_model_save(const m2oe_model *model, const char *path) {
  if (model == nullptr || path == nullptr) {
    return invalid_argument("model or path is null");
  }
  return guarded([&] { model->impl.save(path); });
}

m2oe_status m2oe_model_load(const char *path, m2oe_model **out) {
  if (path == nullptr || out == nullptr) {
    return invalid_argument("path or model output pointer is null");
  }
  return guarded([&] { *out = new m2oe_model{Model::load(path)}; });
}

m2oe_status m2oe_model_task(const m2oe_model *model, char *buffer,
                            size_t buffer_len) {
  if (model == nullptr) {
    return invalid_argument("model is null");
  }
  return copy_to_buffer(m2oe::task_name(model->impl.config().task), buffer,
                        buffer_len);
}

void m2oe_model_free(m2oe_model *model) { delete model; }

void m2oe_string_free(char *text) { std::free(text); }

} // extern "C"
