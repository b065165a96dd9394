#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "unixkd/dataset.hpp"
#include "unixkd/model.hpp"

namespace unixkd {

struct TraceRecord {
  uint32_t epoch = 0;
  uint32_t iteration = 0;
  uint32_t dataset_index = 0;
};

struct SamplingTrace {
  std::vector<TraceRecord> records;
  std::vector<uint32_t> labels;  // per training sample
  size_t num_classes = 0;
  size_t num_epochs = 0;
};

SamplingTrace load_trace(const std::string& run_dir, const DataSplit& train);

struct CategoryCounts {
  std::vector<uint64_t> totals;                 // per category
  std::vector<std::vector<uint64_t>> per_epoch; // [epoch][category]
};

CategoryCounts category_sampling_counts(const SamplingTrace& trace);

// Per-category top-1 in percent; NaN marks categories absent from the test
// set (excluded from correlations).
std::vector<double> category_accuracy(const Model& model,
                                      const DataSplit& test);

// Spearman rank correlation with average ranks on ties; needs >= 3 points.
double spearman_correlation(const std::vector<double>& x,
                            const std::vector<double>& y);

struct CentroidStats {
  std::vector<double> selected_mean;  // per epoch
  std::vector<double> all_mean;
};

// Distances of penultimate features to their category's online running mean,
// read from features.bin.
CentroidStats centroid_distances(const std::string& run_dir);

struct EntropyStats {
  std::vector<double> selected_mean;  // per epoch
  std::vector<double> random_mean;
};

// Teacher softmax entropies (tau = 1) of the samples actually queried vs the
// recorded random probe, read from teacher_logits.bin.
EntropyStats teacher_entropy_stats(const std::string& run_dir);

// Reads a completed run directory and emits category_counts.csv,
// category_accuracy.csv, correlation.txt, and (when the recordings exist)
// centroid_distance.csv and teacher_entropy.csv.
void analyze_run(const std::string& run_dir);

}  // namespace unixkd
