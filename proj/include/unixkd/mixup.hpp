#pragma once

#include <cstdint>
#include <vector>

#include "unixkd/model.hpp"
#include "unixkd/rng.hpp"
#include "unixkd/tensor.hpp"
#include "unixkd/uncertainty.hpp"

namespace unixkd {

// One iteration's mixing plan.
struct MixupPlan {
  double lambda = 0.0;
  double alpha = 0.0;
  double w = 0.0;
  double b = 0.0;                   // sigmoid center, ranking units
  std::vector<size_t> shuffle;      // permutation of [0, batch)
  std::vector<double> corrections;  // c per rank position, non-decreasing
  size_t k = 0;
  std::vector<double> per_sample_lambda;  // empty unless per-sample mode
};

double sample_gamma(double shape, SplitMix64& rng);

// One draw from Beta(alpha, alpha) via two Gamma(alpha, 1) draws.
double sample_beta(double alpha, SplitMix64& rng);

// c = sigmoid(w * (rank_position - b) / batchsize)
double correction_factor(size_t rank_position, size_t batchsize, double w,
                         double b);

// mixed[i] = (1 - c_i*l)*x_sort[i] + c_i*l*x_shuffle[i], output in
// uncertainty-descending order.
Tensor adaptive_mixup(const Tensor& batch, const UncertaintyScores& scores,
                      const MixupPlan& plan);

struct TopK {
  Tensor inputs;                     // first k mixed images
  std::vector<size_t> base_indices;  // batch positions of the sort-side bases
};

TopK select_top_k(const Tensor& mixed, const UncertaintyScores& scores,
                  size_t k);

enum class LambdaMode { beta, forced_zero };
enum class CorrectionMode { sigmoid, constant_one };

struct UnixConfig {
  Criterion criterion = Criterion::entropy;
  double alpha = 1.0;
  double w = 10.0;
  double b = -1.0;  // < 0 means batchsize / 2
  size_t k = 0;
  double score_temperature = 1.0;
  LambdaMode lambda_mode = LambdaMode::beta;
  CorrectionMode correction_mode = CorrectionMode::sigmoid;
  bool per_sample_lambda = false;
  bool want_features = false;  // capture penultimate features of the scoring pass
};

struct UnixBatchResult {
  Tensor inputs;  // the k selected mixed images
  std::vector<size_t> base_indices;
  MixupPlan plan;
  UncertaintyScores scores;
  Tensor penultimate;  // raw-batch features, filled when want_features
};

// Scores the batch with one student forward (no gradients), mixes, selects.
// Never touches the teacher; the caller charges N student-forward samples
// for the scoring pass.
UnixBatchResult unix_batch(const Tensor& batch, const Model& student,
                           const UnixConfig& config, SplitMix64& rng);

std::vector<size_t> random_permutation(size_t n, SplitMix64& rng);

// k distinct indices from [0, n), by partial Fisher-Yates.
std::vector<size_t> random_subset(size_t n, size_t k, SplitMix64& rng);

}  // namespace unixkd
