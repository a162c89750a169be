#include "core/model_config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "core/error.hpp"

namespace m2oe {

namespace {

int parse_int(const std::string &key, const std::string &value) {
  char *end = nullptr;
  const long parsed = std::strtol(value.c_str(), &end, 10);
  if (value.empty() || end == nullptr || *end != '\0') {
    fail(ErrorKind::Config,
         "invalid integer '" + value + "' for config key '" + key + "'");
  }
  return static_cast<int>(parsed);
}

std::uint64_t parse_u64(const std::string &key, const std::string &value) {
  char *end = nullptr;
  const unsigned long long parsed = std::strtoull(value.c_str(), &end, 10);
  if (value.empty() || end == nullptr || *end != '\0') {
    fail(ErrorKind::Config,
         "invalid integer '" + value + "' for config key '" + key + "'");
  }
  return static_cast<std::uint64_t>(parsed);
}

double parse_double(const std::string &key, const std::string &value) {
  char *end = nullptr;
  const double parsed = std::strtod(value.c_str(), &end);
  if (value.empty() || end == nullptr || *end != '\0') {
    fail(ErrorKind::Config,
         "invalid number '" + value + "' for config key '" + key + "'");
  }
  return parsed;
}

bool parse_bool(const std::string &key, const std::string &value) {
  if (value == "true" || value == "1") {
    return true;
  }
  if (value == "false" || value == "0") {
    return false;
  }
  fail(ErrorKind::Config,
       "invalid boolean '" + value + "' for config key '" + key + "'");
}

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string trim(const std::string &text) {
  std::size_t begin = text.find_first_not_of(" \t");
  if (begin == std::string::npos) {
    return "";
  }
  std::size_t end = text.find_last_not_of(" \t");
  return text.substr(begin, end - begin + 1);
}

} // namespace

void ModelConfig::validate() const {
  if (max_len < 1) {
    fail(ErrorKind::Config, "max_len must be at least 1");
  }
  if (dim < 2 || dim % 2 != 0) {
    fail(ErrorKind::Config, "dim must be even and >= 2");
  }
  if (heads < 1 || dim % heads != 0) {
    fail(ErrorKind::Config, "dim must be divisible by heads");
  }
  if (encoder_layers < 1) {
    fail(ErrorKind::Config, "encoder_layers must be at least 1");
  }
  if (experts < 1) {
    fail(ErrorKind::Config, "experts must be at least 1");
  }
  if (topk < 1 || topk > experts) {
    fail(ErrorKind::Config, "topk must lie in [1, experts]");
  }
  if (!(importance_weight >= 0.0) || !(load_weight >= 0.0)) {
    fail(ErrorKind::Config, "loss weights must be non-negative");
  }
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) {
    fail(ErrorKind::Config, "leaky_slope must lie in (0, 1)");
  }
  if (!(learning_rate > 0.0)) {
    fail(ErrorKind::Config, "learning_rate must be positive");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) ||
      !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    fail(ErrorKind::Config, "adam decay rates must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) {
    fail(ErrorKind::Config, "adam_epsilon must be positive");
  }
  if (epochs < 1) {
    fail(ErrorKind::Config, "epochs must be at least 1");
  }
  if (batch_size < 1) {
    fail(ErrorKind::Config, "batch_size must be at least 1");
  }
}

void ModelConfig::set(const std::string &key, const std::string &value) {
  if (key == "task") {
    task = task_from_name(value);
  } else if (key == "max_len") {
    max_len = parse_int(key, value);
  } else if (key == "dim") {
    dim = parse_int(key, value);
  } else if (key == "encoder_layers") {
    encoder_layers = parse_int(key, value);
  } else if (key == "heads") {
    heads = parse_int(key, value);
  } else if (key == "experts") {
    experts = parse_int(key, value);
  } else if (key == "topk") {
    topk = parse_int(key, value);
  } else if (key == "importance_weight") {
    importance_weight = parse_double(key, value);
  } else if (key == "load_weight") {
    load_weight = parse_double(key, value);
  } else if (key == "leaky_slope") {
    leaky_slope = parse_double(key, value);
  } else if (key == "use_cra") {
    use_cra = parse_bool(key, value);
  } else if (key == "use_moe") {
    use_moe = parse_bool(key, value);
  } else if (key == "scale_sqrt_dk") {
    scale_sqrt_dk = parse_bool(key, value);
  } else if (key == "graph_encoder") {
    graph_encoder = graph_encoder_from_name(value);
  } else if (key == "learning_rate") {
    learning_rate = parse_double(key, value);
  } else if (key == "adam_beta1") {
    adam_beta1 = parse_double(key, value);
  } else if (key == "adam_beta2") {
    adam_beta2 = parse_double(key, value);
  } else if (key == "adam_epsilon") {
    adam_epsilon = parse_double(key, value);
  } else if (key == "epochs") {
    epochs = parse_int(key, value);
  } else if (key == "batch_size") {
    batch_size = parse_int(key, value);
  } else if (key == "seed") {
    seed = parse_u64(key, value);
  } else {
    fail(ErrorKind::Config, "unknown config key '" + key + "'");
  }
}

std::string ModelConfig::get(const std::string &key) const {
  if (key == "task") return task_name(task);
  if (key == "max_len") return std::to_string(max_len);
  if (key == "dim") return std::to_string(dim);
  if (key == "encoder_layers") return std::to_string(encoder_layers);
  if (key == "heads") return std::to_string(heads);
  if (key == "experts") return std::to_string(experts);
  if (key == "topk") return std::to_string(topk);
  if (key == "importance_weight") return format_double(importance_weight);
  if (key == "load_weight") return format_double(load_weight);
  if (key == "leaky_slope") return format_double(leaky_slope);
  if (key == "use_cra") return use_cra ? "true" : "false";
  if (key == "use_moe") return use_moe ? "true" : "false";
  if (key == "scale_sqrt_dk") return scale_sqrt_dk ? "true" : "false";
  if (key == "graph_encoder") return graph_encoder_name(graph_encoder);
  if (key == "learning_rate") return format_double(learning_rate);
  if (key == "adam_beta1") return format_double(adam_beta1);
  if (key == "adam_beta2") return format_double(adam_beta2);
  if (key == "adam_epsilon") return format_double(adam_epsilon);
  if (key == "epochs") return std::to_string(epochs);
  if (key == "batch_size") return std::to_string(batch_size);
  if (key == "seed") return std::to_string(seed);
  fail(ErrorKind::Config, "unknown config key '" + key + "'");
}

namespace {
const char *const kConfigKeys[] = {
    "task",          "max_len",       "dim",
    "encoder_layers", "heads",        "experts",
    "topk",          "importance_weight", "load_weight",
    "leaky_slope",   "use_cra",       "use_moe",
    "scale_sqrt_dk", "graph_encoder", "learning_rate",
    "adam_beta1",    "adam_beta2",    "adam_epsilon",
    "epochs",        "batch_size",    "seed",
};
}

std::string ModelConfig::to_key_values() const {
  std::ostringstream out;
  bool first = true;
  for (const char *key : kConfigKeys) {
    if (!first) {
      out << ' ';
    }
    first = false;
    out << key << '=' << get(key);
  }
  return out.str();
}

ModelConfig ModelConfig::from_key_values(const std::string &line) {
  ModelConfig config;
  std::istringstream in(line);
  std::string pair;
  while (in >> pair) {
    const std::size_t eq = pair.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::Config, "malformed config pair '" + pair + "'");
    }
    config.set(pair.substr(0, eq), pair.substr(eq + 1));
  }
  config.validate();
  return config;
}

ModelConfig ModelConfig::load_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    fail(ErrorKind::Io, "cannot open config file '" + path + "'");
  }
  ModelConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::Config, "config line " + std::to_string(line_no) +
                                  " is not of the form key = value");
    }
    config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  config.validate();
  return config;
}

} // namespace m2oe
