#include "core/dataset.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/vocab.hpp"

namespace m2oe {

TaskKind task_from_name(const std::string &name) {
  if (name == "classification") {
    return TaskKind::Classification;
  }
  if (name == "regression") {
    return TaskKind::Regression;
  }
  fail(ErrorKind::Config, "unknown task kind '" + name +
                              "' (expected classification or regression)");
}

const char *task_name(TaskKind task) {
  return task == TaskKind::Classification ? "classification" : "regression";
}

namespace {

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
  return line;
}

double parse_label(const std::string &text, TaskKind task, int line_no) {
  if (task == TaskKind::Classification) {
    if (text == "0") {
      return 0.0;
    }
    if (text == "1") {
      return 1.0;
    }
    fail(ErrorKind::Parse, "line " + std::to_string(line_no) +
                               ": classification label must be 0 or 1, got '" +
                               text + "'");
  }
  if (text.empty()) {
    fail(ErrorKind::Parse,
         "line " + std::to_string(line_no) + ": empty regression label");
  }
  char *end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (end == nullptr || *end != '\0') {
    fail(ErrorKind::Parse, "line " + std::to_string(line_no) +
                               ": malformed regression label '" + text + "'");
  }
  return value;
}

void validate_record_sequence(const std::string &sequence, int line_no) {
  if (sequence.empty()) {
    fail(ErrorKind::Validation,
         "line " + std::to_string(line_no) + ": empty sequence");
  }
  if (!valid_sequence(sequence)) {
    fail(ErrorKind::Validation, "line " + std::to_string(line_no) +
                                    ": illegal characters in sequence '" +
                                    sequence + "'");
  }
}

} // namespace

Dataset load_csv_dataset(const std::string &path, TaskKind task) {
  std::ifstream in(path);
  if (!in) {
    fail(ErrorKind::Io, "cannot open dataset file '" + path + "'");
  }
  std::string line;
  if (!std::getline(in, line)) {
    fail(ErrorKind::Parse, "dataset file '" + path + "' is empty");
  }
  if (strip_cr(line) != "sequence,label") {
    fail(ErrorKind::Parse, "expected header 'sequence,label' in '" + path +
                               "', got '" + strip_cr(line) + "'");
  }
  Dataset out;
  out.task = task;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) {
      continue;
    }
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos) {
      fail(ErrorKind::Parse,
           "line " + std::to_string(line_no) + ": missing label column");
    }
    PeptideRecord record;
    record.sequence = line.substr(0, comma);
    validate_record_sequence(record.sequence, line_no);
    record.label = parse_label(line.substr(comma + 1), task, line_no);
    record.id = std::to_string(out.records.size());
    out.records.push_back(std::move(record));
  }
  return out;
}

void save_csv_dataset(const Dataset &dataset, const std::string &path) {
  std::ofstream out(path);
  if (!out) {
    fail(ErrorKind::Io, "cannot write dataset file '" + path + "'");
  }
  out << "sequence,label\n";
  char buf[64];
  for (const PeptideRecord &record : dataset.records) {
    if (dataset.task == TaskKind::Classification) {
      out << record.sequence << ',' << (record.label >= 0.5 ? '1' : '0') << '\n';
    } else {
      std::snprintf(buf, sizeof(buf), "%.17g", record.label);
      out << record.sequence << ',' << buf << '\n';
    }
  }
  if (!out) {
    fail(ErrorKind::Io, "failed while writing dataset file '" + path + "'");
  }
}

std::vector<PeptideRecord> load_sequences_csv(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    fail(ErrorKind::Io, "cannot open input file '" + path + "'");
  }
  std::string line;
  if (!std::getline(in, line)) {
    fail(ErrorKind::Parse, "input file '" + path + "' is empty");
  }
  line = strip_cr(line);
  bool has_label = false;
  if (line == "sequence,label") {
    has_label = true;
  } else if (line != "sequence") {
    fail(ErrorKind::Parse, "expected header 'sequence' or 'sequence,label' in '" +
                               path + "', got '" + line + "'");
  }
  std::vector<PeptideRecord> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) {
      continue;
    }
    PeptideRecord record;
    if (has_label) {
      const std::size_t comma = line.find(',');
      record.sequence = comma == std::string::npos ? line : line.substr(0, comma);
    } else {
      record.sequence = line;
    }
    validate_record_sequence(record.sequence, line_no);
    record.id = std::to_string(out.size());
    out.push_back(std::move(record));
  }
  return out;
}

DatasetSplit split_dataset(const Dataset &dataset, std::uint64_t seed,
                           SplitRatios ratios) {
  if (ratios.train <= 0 || ratios.val <= 0 || ratios.test <= 0) {
    fail(ErrorKind::Validation, "split ratios must be positive");
  }
  const std::size_t n = dataset.size();
  if (n < 3) {
    fail(ErrorKind::Validation, "dataset with " + std::to_string(n) +
                                    " records is too small to split");
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    order[i] = i;
  }
  RngState rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::uint32_t j = rng.next_below(static_cast<std::uint32_t>(i + 1));
    std::swap(order[i], order[j]);
  }

  const std::uint64_t total =
      static_cast<std::uint64_t>(ratios.train) + ratios.val + ratios.test;
  const std::size_t n_train = static_cast<std::size_t>(
      static_cast<std::uint64_t>(n) * ratios.train / total);
  const std::size_t n_val = static_cast<std::size_t>(
      static_cast<std::uint64_t>(n) * ratios.val / total);

  DatasetSplit split;
  split.train.task = split.val.task = split.test.task = dataset.task;
  for (std::size_t i = 0; i < n; ++i) {
    const PeptideRecord &record = dataset.records[order[i]];
    if (i < n_train) {
      split.train.records.push_back(record);
    } else if (i < n_train + n_val) {
      split.val.records.push_back(record);
    } else {
      split.test.records.push_back(record);
    }
  }
  return split;
}

double synth_class_label(const std::string &sequence) {
  int basic = 0;
  for (char c : sequence) {
    if (c == 'K' || c == 'R') {
      ++basic;
    }
  }
  return basic >= 3 ? 1.0 : 0.0;
}

double synth_regression_label(const std::string &sequence) {
  int hydrophobic = 0;
  for (char c : sequence) {
    if (c == 'A' || c == 'I' || c == 'L' || c == 'F' || c == 'V' || c == 'M') {
      ++hydrophobic;
    }
  }
  return static_cast<double>(hydrophobic) / static_cast<double>(sequence.size());
}

Dataset synth_dataset(std::size_t count, std::uint64_t seed, TaskKind task) {
  if (count < 1) {
    fail(ErrorKind::Validation, "synthetic dataset size must be at least 1");
  }
  constexpr int kLength = 10;
  Dataset out;
  out.task = task;
  out.records.reserve(count);
  RngState rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    PeptideRecord record;
    record.id = "s" + std::to_string(i);
    record.sequence.reserve(kLength);
    for (int j = 0; j < kLength; ++j) {
      record.sequence.push_back(kAminoAcidOrder[rng.next_below(20)]);
    }
    record.label = task == TaskKind::Classification
                       ? synth_class_label(record.sequence)
                       : synth_regression_label(record.sequence);
    out.records.push_back(std::move(record));
  }
  return out;
}

} // namespace m2oe
