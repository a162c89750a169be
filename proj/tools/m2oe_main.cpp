// Command-line front end for the m2oe library. Talks to the core purely
// through the C API in m2oe/m2oe.h.
//
// Exit codes: 0 success, 2 usage/config/data errors, 3 training divergence.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "m2oe/m2oe.h"

namespace {

struct ConfigDeleter {
  void operator()(m2oe_config *p) const { m2oe_config_free(p); }
};
struct DatasetDeleter {
  void operator()(m2oe_dataset *p) const { m2oe_dataset_free(p); }
};
struct ModelDeleter {
  void operator()(m2oe_model *p) const { m2oe_model_free(p); }
};

using ConfigPtr = std::unique_ptr<m2oe_config, ConfigDeleter>;
using DatasetPtr = std::unique_ptr<m2oe_dataset, DatasetDeleter>;
using ModelPtr = std::unique_ptr<m2oe_model, ModelDeleter>;

int exit_code_for(m2oe_status status) {
  return status == M2OE_ERR_DIVERGED ? 3 : 2;
}

[[noreturn]] void die(m2oe_status status) {
  std::cerr << m2oe_last_error() << std::endl;
  std::exit(exit_code_for(status));
}

void check(m2oe_status status) {
  if (status != M2OE_OK) {
    die(status);
  }
}

std::string model_task(const m2oe_model *model) {
  char buffer[32];
  check(m2oe_model_task(model, buffer, sizeof buffer));
  return buffer;
}

int run_train(const std::string &config_path, const std::string &train_path,
              const std::string &val_path, const std::string &out_dir,
              bool has_seed, std::uint64_t seed, bool no_cra, bool no_moe) {
  m2oe_config *config_raw = nullptr;
  check(m2oe_config_load(config_path.c_str(), &config_raw));
  ConfigPtr config(config_raw);
  if (has_seed) {
    check(m2oe_config_set(config.get(), "seed", std::to_string(seed).c_str()));
  }
  if (no_cra) {
    check(m2oe_config_set(config.get(), "use_cra", "false"));
  }
  if (no_moe) {
    check(m2oe_config_set(config.get(), "use_moe", "false"));
  }

  char task[32];
  check(m2oe_config_get(config.get(), "task", task, sizeof task));

  m2oe_dataset *train_raw = nullptr;
  check(m2oe_dataset_load_csv(train_path.c_str(), task, &train_raw));
  DatasetPtr train(train_raw);
  m2oe_dataset *val_raw = nullptr;
  check(m2oe_dataset_load_csv(val_path.c_str(), task, &val_raw));
  DatasetPtr val(val_raw);

  m2oe_model *model_raw = nullptr;
  check(m2oe_model_create(config.get(), &model_raw));
  ModelPtr model(model_raw);

  char *history = nullptr;
  check(m2oe_model_train(model.get(), train.get(), val.get(), &history));

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    std::cerr << "cannot create output directory '" << out_dir
              << "': " << ec.message() << std::endl;
    m2oe_string_free(history);
    return 2;
  }
  const std::string metrics_path = out_dir + "/metrics.json";
  {
    std::ofstream out(metrics_path);
    out << history << '\n';
    if (!out) {
      std::cerr << "cannot write '" << metrics_path << "'" << std::endl;
      m2oe_string_free(history);
      return 2;
    }
  }
  m2oe_string_free(history);

  const std::string ckpt_path = out_dir + "/model.ckpt";
  check(m2oe_model_save(model.get(), ckpt_path.c_str()));

  char *metrics = nullptr;
  check(m2oe_model_evaluate(model.get(), val.get(), &metrics));
  std::cout << metrics << std::endl;
  m2oe_string_free(metrics);
  return 0;
}

int run_eval(const std::string &checkpoint, const std::string &data_path) {
  m2oe_model *model_raw = nullptr;
  check(m2oe_model_load(checkpoint.c_str(), &model_raw));
  ModelPtr model(model_raw);

  m2oe_dataset *data_raw = nullptr;
  check(m2oe_dataset_load_csv(data_path.c_str(), model_task(model.get()).c_str(),
                              &data_raw));
  DatasetPtr data(data_raw);

  char *metrics = nullptr;
  check(m2oe_model_evaluate(model.get(), data.get(), &metrics));
  std::cout << metrics << std::endl;
  m2oe_string_free(metrics);
  return 0;
}

int run_predict(const std::string &checkpoint, const std::string &input,
                const std::string &output) {
  m2oe_model *model_raw = nullptr;
  check(m2oe_model_load(checkpoint.c_str(), &model_raw));
  ModelPtr model(model_raw);
  check(m2oe_model_predict_csv(model.get(), input.c_str(), output.c_str()));
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"m2oe peptide property model"};
  app.require_subcommand(1);

  std::string config_path, train_path, val_path, out_dir;
  std::uint64_t seed = 0;
  bool no_cra = false, no_moe = false;
  CLI::App *train = app.add_subcommand("train", "train a model");
  train->add_option("--config", config_path, "config file")->required();
  train->add_option("--train", train_path, "training CSV")->required();
  train->add_option("--val", val_path, "validation CSV")->required();
  train->add_option("--out", out_dir, "output directory")->required();
  CLI::Option *seed_opt = train->add_option("--seed", seed, "seed override");
  train->add_flag("--no-cra", no_cra, "disable cross attention");
  train->add_flag("--no-moe", no_moe, "replace the expert banks with dense FFNs");

  std::string checkpoint, data_path;
  CLI::App *eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("--data", data_path, "evaluation CSV")->required();

  std::string predict_ckpt, input_path, output_path;
  CLI::App *predict = app.add_subcommand("predict", "predict from sequences");
  predict->add_option("--checkpoint", predict_ckpt, "checkpoint file")->required();
  predict->add_option("--input", input_path, "input CSV with a sequence column")
      ->required();
  predict->add_option("--output", output_path, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &help) {
    return app.exit(help);
  } catch (const CLI::ParseError &err) {
    std::cerr << err.what() << std::endl;
    return 2;
  }

  if (train->parsed()) {
    return run_train(config_path, train_path, val_path, out_dir,
                     seed_opt->count() > 0, seed, no_cra, no_moe);
  }
  if (eval->parsed()) {
    return run_eval(checkpoint, data_path);
  }
  return run_predict(predict_ckpt, input_path, output_path);
}
