#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "unixkd/config.hpp"
#include "unixkd/cost.hpp"
#include "unixkd/dataset.hpp"
#include "unixkd/model.hpp"

namespace unixkd {

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

struct EvalResult {
  double top1 = 0.0;  // percent
  double top5 = -1.0; // percent; negative when C < 5
};

// Argmax prediction; ties broken by the lowest class index.
EvalResult evaluate(const Model& model, const DataSplit& test);

struct EpochStats {
  double train_loss = 0.0;
  double test_top1 = 0.0;
  double cumulative_relative_cost = 0.0;  // percent, unrounded
};

struct ExperimentReport {
  TrainConfig config;
  double teacher_test_top1 = -1.0;  // negative when there is no teacher
  std::vector<EpochStats> epochs;
  double final_top1 = 0.0;
  double final_top5 = -1.0;
  LedgerCounts ledger;
  double ledger_energy = 0.0;          // units of FLOPs
  double relative_cost_percent = 0.0;  // unrounded, vs the kd baseline
  uint64_t iterations = 0;
  CostModel cost_model;
  double wall_clock_seconds = 0.0;  // goes to timing.txt, not report.json
};

struct TeacherResult {
  Model model;
  double test_top1 = 0.0;
};

// Cross-entropy training of the teacher spec; deterministic per teacher seed.
TeacherResult train_teacher(const TrainConfig& cfg, const Dataset& data);

// Pretrained path if set, else the on-disk cache (when configured), else a
// fresh deterministic training run.
TeacherResult obtain_teacher(const TrainConfig& cfg, const Dataset& data);

// Runs one distillation (or scratch) experiment. When artifacts_dir is
// non-empty, streams trace.csv (+ features.bin / teacher_logits.bin when
// record_analysis is on) and saves student.params there.
ExperimentReport run_distillation(const TrainConfig& cfg, const Model* teacher,
                                  const Dataset& data,
                                  const std::string& artifacts_dir = "");

// Writes report.json and epochs.csv (byte-identical for identical runs)
// plus timing.txt with the wall clock.
void emit_report(const ExperimentReport& report, const std::string& dir);

void save_params(const Model& model, const std::string& path);
void load_params(Model& model, const std::string& path);

}  // namespace unixkd
