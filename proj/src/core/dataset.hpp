#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace m2oe {

enum class TaskKind { Classification, Regression };

TaskKind task_from_name(const std::string &name);
const char *task_name(TaskKind task);

struct PeptideRecord {
  std::string id;
  std::string sequence;
  double label = 0.0;
};

struct Dataset {
  TaskKind task = TaskKind::Classification;
  std::vector<PeptideRecord> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
};

// CSV with header "sequence,label", comma separated, no quoting.
Dataset load_csv_dataset(const std::string &path, TaskKind task);
void save_csv_dataset(const Dataset &dataset, const std::string &path);

// Prediction input: header "sequence" or "sequence,label" (label ignored).
std::vector<PeptideRecord> load_sequences_csv(const std::string &path);

struct SplitRatios {
  int train = 8;
  int val = 1;
  int test = 1;
};

struct DatasetSplit {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Seeded shuffle, then integer floor sizes: train = n*a/(a+b+c),
// val = n*b/(a+b+c), test = remainder.
DatasetSplit split_dataset(const Dataset &dataset, std::uint64_t seed,
                           SplitRatios ratios = {});

// Deterministic length-10 random corpus. Classification label: 1 iff the
// sequence holds at least three K/R residues. Regression label: fraction of
// residues in {A, I, L, F, V, M}.
Dataset synth_dataset(std::size_t count, std::uint64_t seed, TaskKind task);

double synth_class_label(const std::string &sequence);
double synth_regression_label(const std::string &sequence);

} // namespace m2oe
