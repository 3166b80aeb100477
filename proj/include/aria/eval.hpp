#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "aria/pipeline.hpp"

namespace aria {

struct ConfusionMatrix {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;

  std::size_t total() const { return tp + tn + fp + fn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

// Positive means a correct formalization. Throws LengthMismatch, and
// std::invalid_argument on empty input.
ConfusionMatrix confusion(const std::vector<bool>& predicted, const std::vector<bool>& truth);

struct Metrics {
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;
};

// Ratios with a zero denominator are 0. Throws EmptyMatrix.
Metrics metrics(const ConfusionMatrix& cm);

// Fraction of problems with a success among their first k attempts.
// Throws InsufficientAttempts when a problem has fewer than k.
double pass_at_k(const std::vector<std::vector<bool>>& outcomes, std::size_t k);

// Percentage rounded to one decimal place (0.8993 -> 89.9).
double percent(double fraction);

struct DatasetRecord {
  std::string id;
  std::string informal_text;
  std::optional<bool> ground_truth_label;
  std::optional<std::string> reference_formal;
};

// Line-delimited {id, informal_text, ground_truth_label?, reference_formal?}.
std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path);

// Line-delimited {id, label} (label a boolean), overriding dataset labels.
std::map<std::string, bool> load_labels(const std::filesystem::path& path);

struct ProblemOutcome {
  std::string id;
  bool compiled = false;
  bool accepted = false;
  std::optional<bool> truth;
  std::optional<double> score;
  std::size_t llm_calls = 0;
  std::size_t retrieval_calls = 0;
  std::size_t compile_calls = 0;
  double wall_time_s = 0.0;
  std::optional<std::string> error;
};

struct BenchmarkReport {
  std::vector<ProblemOutcome> problems;
  double compilation_rate = 0.0;  // fractions in [0,1]
  double final_accuracy = 0.0;
  double mean_llm_calls = 0.0;  // backend misses per problem
  std::optional<ConfusionMatrix> confusion;
  std::optional<Metrics> metrics;
};

struct BenchmarkOptions {
  PipelineOptions pipeline;
  int workers = 1;
};

// Runs the pipeline on every record (scoring always on). Per-problem
// failures are recorded and never abort the run. The confusion matrix
// compares scorer decisions (compiled and accepted) with ground-truth labels
// where present.
BenchmarkReport run_benchmark(const std::vector<DatasetRecord>& dataset, PipelineBackends& backends,
                              const BenchmarkOptions& options, const std::map<std::string, bool>& labels = {});

// Problem outcome from a finished run and the call records tagged with its id.
ProblemOutcome summarize(const FormalizeResult& result, const std::vector<nlohmann::json>& records);

nlohmann::json to_json(const BenchmarkReport& report);
// Fixed-width text table with percentages to one decimal.
std::string format_table(const BenchmarkReport& report);

}  // namespace aria
