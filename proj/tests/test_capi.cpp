#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "m2oe/m2oe.h"

namespace {

std::filesystem::path temp_path(const std::string &name) {
  return std::filesystem::temp_directory_path() / name;
}

std::string slurp(const std::filesystem::path &path) {
  std::ifstream in(path);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

struct OwnedString {
  char *ptr = nullptr;
  ~OwnedString() { m2oe_string_free(ptr); }
  std::string str() const { return ptr == nullptr ? "" : ptr; }
};

m2oe_config *small_config(const char *task) {
  m2oe_config *config = nullptr;
  REQUIRE(m2oe_config_create(&config) == M2OE_OK);
  REQUIRE(m2oe_config_set(config, "task", task) == M2OE_OK);
  REQUIRE(m2oe_config_set(config, "dim", "8") == M2OE_OK);
  REQUIRE(m2oe_config_set(config, "heads", "2") == M2OE_OK);
  REQUIRE(m2oe_config_set(config, "encoder_layers", "1") == M2OE_OK);
  REQUIRE(m2oe_config_set(config, "experts", "3") == M2OE_OK);
  REQUIRE(m2oe_config_set(config, "epochs", "3") == M2OE_OK);
  REQUIRE(m2oe_config_set(config, "batch_size", "8") == M2OE_OK);
  REQUIRE(m2oe_config_set(config, "max_len", "16") == M2OE_OK);
  return config;
}

} // namespace

TEST_CASE("status names cover the enum") {
  CHECK(std::string(m2oe_status_name(M2OE_OK)) == "ok");
  CHECK(std::string(m2oe_status_name(M2OE_ERR_CONFIG)) == "config");
  CHECK(std::string(m2oe_status_name(M2OE_ERR_DIVERGED)) == "diverged");
}

TEST_CASE("config lifecycle and errors") {
  m2oe_config *config = nullptr;
  REQUIRE(m2oe_config_create(&config) == M2OE_OK);

  char buffer[64];
  CHECK(m2oe_config_get(config, "task", buffer, sizeof buffer) == M2OE_OK);
  CHECK(std::string(buffer) == "classification");
  CHECK(m2oe_config_get(config, "dim", buffer, sizeof buffer) == M2OE_OK);
  CHECK(std::string(buffer) == "64");

  CHECK(m2oe_config_set(config, "seed", "99") == M2OE_OK);
  CHECK(m2oe_config_get(config, "seed", buffer, sizeof buffer) == M2OE_OK);
  CHECK(std::string(buffer) == "99");

  CHECK(m2oe_config_set(config, "not_a_key", "1") == M2OE_ERR_CONFIG);
  CHECK(std::string(m2oe_last_error()).find("not_a_key") != std::string::npos);
  CHECK(m2oe_config_set(config, "dim", "eight") == M2OE_ERR_CONFIG);
  CHECK(m2oe_config_set(config, "topk", "9") == M2OE_ERR_CONFIG); // > experts

  CHECK(m2oe_config_create(nullptr) == M2OE_ERR_INVALID_ARGUMENT);
  CHECK(m2oe_config_set(nullptr, "dim", "8") == M2OE_ERR_INVALID_ARGUMENT);
  m2oe_config_free(config);
}

TEST_CASE("config file loading through the C surface") {
  const auto path = temp_path("m2oe_capi_config.cfg");
  {
    std::ofstream out(path);
    out << "task = regression\ndim = 8\nheads = 2\n";
  }
  m2oe_config *config = nullptr;
  REQUIRE(m2oe_config_load(path.string().c_str(), &config) == M2OE_OK);
  char buffer[32];
  CHECK(m2oe_config_get(config, "task", buffer, sizeof buffer) == M2OE_OK);
  CHECK(std::string(buffer) == "regression");
  m2oe_config_free(config);

  CHECK(m2oe_config_load("/nonexistent/m2oe.cfg", &config) == M2OE_ERR_IO);
  std::filesystem::remove(path);
}

TEST_CASE("datasets over the C surface") {
  m2oe_dataset *ds = nullptr;
  REQUIRE(m2oe_dataset_synth(100, 3, "classification", &ds) == M2OE_OK);
  CHECK(m2oe_dataset_size(ds) == 100);

  m2oe_dataset *train = nullptr, *val = nullptr, *test = nullptr;
  REQUIRE(m2oe_dataset_split(ds, 5, &train, &val, &test) == M2OE_OK);
  CHECK(m2oe_dataset_size(train) == 80);
  CHECK(m2oe_dataset_size(val) == 10);
  CHECK(m2oe_dataset_size(test) == 10);
  m2oe_dataset_free(train);
  m2oe_dataset_free(val);
  m2oe_dataset_free(test);
  m2oe_dataset_free(ds);

  CHECK(m2oe_dataset_synth(10, 1, "ranking", &ds) == M2OE_ERR_CONFIG);
  CHECK(m2oe_dataset_load_csv("/nonexistent/data.csv", "classification", &ds) ==
        M2OE_ERR_IO);
  CHECK(m2oe_dataset_size(nullptr) == 0);
}

TEST_CASE("model train, evaluate, predict, and round trip") {
  m2oe_config *config = small_config("classification");
  m2oe_dataset *train = nullptr, *val = nullptr;
  REQUIRE(m2oe_dataset_synth(24, 7, "classification", &train) == M2OE_OK);
  REQUIRE(m2oe_dataset_synth(12, 8, "classification", &val) == M2OE_OK);

  m2oe_model *model = nullptr;
  REQUIRE(m2oe_model_create(config, &model) == M2OE_OK);

  OwnedString history;
  REQUIRE(m2oe_model_train(model, train, val, &history.ptr) == M2OE_OK);
  nlohmann::json parsed = nlohmann::json::parse(history.str());
  CHECK(parsed["epochs"].size() == 3);
  CHECK(parsed.contains("final"));
  CHECK(parsed["epochs"][0].contains("hard_counts_seq"));

  OwnedString metrics;
  REQUIRE(m2oe_model_evaluate(model, val, &metrics.ptr) == M2OE_OK);
  nlohmann::json m = nlohmann::json::parse(metrics.str());
  CHECK(m.contains("acc"));
  CHECK(m["acc"].get<double>() >= 0.0);
  CHECK(m["acc"].get<double>() <= 1.0);

  double prediction = -1.0;
  REQUIRE(m2oe_model_predict(model, "ACDKRGHILV", &prediction) == M2OE_OK);
  CHECK(prediction >= 0.0);
  CHECK(prediction <= 1.0);
  CHECK(m2oe_model_predict(model, "AC1E", &prediction) == M2OE_ERR_VALIDATION);

  const auto ckpt = temp_path("m2oe_capi_model.ckpt");
  REQUIRE(m2oe_model_save(model, ckpt.string().c_str()) == M2OE_OK);
  m2oe_model *loaded = nullptr;
  REQUIRE(m2oe_model_load(ckpt.string().c_str(), &loaded) == M2OE_OK);

  char task[32];
  REQUIRE(m2oe_model_task(loaded, task, sizeof task) == M2OE_OK);
  CHECK(std::string(task) == "classification");

  OwnedString metrics_again;
  REQUIRE(m2oe_model_evaluate(loaded, val, &metrics_again.ptr) == M2OE_OK);
  CHECK(metrics_again.str() == metrics.str());

  double reloaded_prediction = -1.0;
  REQUIRE(m2oe_model_predict(loaded, "ACDKRGHILV", &reloaded_prediction) ==
          M2OE_OK);
  CHECK(reloaded_prediction == prediction);

  SUBCASE("prediction csv is order-preserving and byte-stable") {
    const auto in_csv = temp_path("m2oe_capi_in.csv");
    const auto out_a = temp_path("m2oe_capi_out_a.csv");
    const auto out_b = temp_path("m2oe_capi_out_b.csv");
    {
      std::ofstream out(in_csv);
      out << "sequence\nACDEFGHIKL\nKKKKRRRKKR\nAAAAAAAAAA\n";
    }
    REQUIRE(m2oe_model_predict_csv(model, in_csv.string().c_str(),
                                   out_a.string().c_str()) == M2OE_OK);
    REQUIRE(m2oe_model_predict_csv(model, in_csv.string().c_str(),
                                   out_b.string().c_str()) == M2OE_OK);
    const std::string text = slurp(out_a);
    CHECK(text == slurp(out_b));
    CHECK(text.rfind("id,sequence,prediction\n", 0) == 0);
    CHECK(text.find("0,ACDEFGHIKL,") != std::string::npos);
    CHECK(text.find("2,AAAAAAAAAA,") != std::string::npos);
    std::filesystem::remove(in_csv);
    std::filesystem::remove(out_a);
    std::filesystem::remove(out_b);
  }

  SUBCASE("evaluating with a mismatched task is rejected") {
    m2oe_dataset *regression = nullptr;
    REQUIRE(m2oe_dataset_synth(8, 9, "regression", &regression) == M2OE_OK);
    OwnedString bad;
    CHECK(m2oe_model_evaluate(model, regression, &bad.ptr) ==
          M2OE_ERR_VALIDATION);
    m2oe_dataset_free(regression);
  }

  SUBCASE("corrupt checkpoints are format errors") {
    {
      std::ofstream out(ckpt);
      out << "not a checkpoint\n";
    }
    m2oe_model *broken = nullptr;
    CHECK(m2oe_model_load(ckpt.string().c_str(), &broken) == M2OE_ERR_FORMAT);
  }

  m2oe_model_free(loaded);
  m2oe_model_free(model);
  m2oe_dataset_free(train);
  m2oe_dataset_free(val);
  m2oe_config_free(config);
  std::filesystem::remove(ckpt);
}

TEST_CASE("null arguments are invalid-argument errors") {
  CHECK(m2oe_model_create(nullptr, nullptr) == M2OE_ERR_INVALID_ARGUMENT);
  CHECK(m2oe_model_load(nullptr, nullptr) == M2OE_ERR_INVALID_ARGUMENT);
  double out = 0.0;
  CHECK(m2oe_model_predict(nullptr, "ACDE", &out) == M2OE_ERR_INVALID_ARGUMENT);
  CHECK(m2oe_model_train(nullptr, nullptr, nullptr, nullptr) ==
        M2OE_ERR_INVALID_ARGUMENT);
}
