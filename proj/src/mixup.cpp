#include "unixkd/mixup.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "unixkd/layers.hpp"

namespace unixkd {

double sample_gamma(double shape, SplitMix64& rng) {
  if (!(shape > 0.0)) {
    throw std::invalid_argument("sample_gamma: shape must be positive");
  }
  if (shape < 1.0) {
    // boost to shape+1, scale back by U^(1/shape)
    const double g = sample_gamma(shape + 1.0, rng);
    const double u = rng.next_open_double();
    return g * std::pow(u, 1.0 / shape);
  }
  // Marsaglia-Tsang squeeze
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.next_gaussian();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.next_open_double();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double sample_beta(double alpha, SplitMix64& rng) {
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("sample_beta: alpha must be positive");
  }
  const double g1 = sample_gamma(alpha, rng);
  const double g2 = sample_gamma(alpha, rng);
  if (g1 + g2 <= 0.0) return 0.5;  // both underflowed; center is the safe call
  return g1 / (g1 + g2);
}

double correction_factor(size_t rank_position, size_t batchsize, double w,
                         double b) {
  if (batchsize < 1 || rank_position >= batchsize) {
    throw std::invalid_argument("correction_factor: rank_position out of range");
  }
  const double t = w * (static_cast<double>(rank_position) - b) /
                   static_cast<double>(batchsize);
  return 1.0 / (1.0 + std::exp(-t));
}

namespace {

bool is_permutation_of(const std::vector<size_t>& perm, size_t n) {
  if (perm.size() != n) return false;
  std::vector<bool> seen(n, false);
  for (size_t p : perm) {
    if (p >= n || seen[p]) return false;
    seen[p] = true;
  }
  return true;
}

}  // namespace

Tensor adaptive_mixup(const Tensor& batch, const UncertaintyScores& scores,
                      const MixupPlan& plan) {
  const size_t n = batch.dim(0);
  if (!is_permutation_of(scores.ranking, n)) {
    throw std::invalid_argument("adaptive_mixup: ranking is not a permutation of the batch");
  }
  if (!is_permutation_of(plan.shuffle, n)) {
    throw std::invalid_argument("adaptive_mixup: shuffle is not a permutation of the batch");
  }
  if (plan.corrections.size() != n) {
    throw std::invalid_argument("adaptive_mixup: corrections length mismatch");
  }
  if (!plan.per_sample_lambda.empty() && plan.per_sample_lambda.size() != n) {
    throw std::invalid_argument("adaptive_mixup: per-sample lambda length mismatch");
  }
  const size_t sample = batch.size() / n;
  Tensor mixed(batch.shape);
  for (size_t i = 0; i < n; ++i) {
    const double lambda =
        plan.per_sample_lambda.empty() ? plan.lambda : plan.per_sample_lambda[i];
    const double cl = plan.corrections[i] * lambda;
    const double* sort_side = batch.data.data() + scores.ranking[i] * sample;
    const double* shuf_side = batch.data.data() + plan.shuffle[i] * sample;
    double* out = mixed.data.data() + i * sample;
    for (size_t j = 0; j < sample; ++j) {
      out[j] = (1.0 - cl) * sort_side[j] + cl * shuf_side[j];
    }
  }
  return mixed;
}

TopK select_top_k(const Tensor& mixed, const UncertaintyScores& scores,
                  size_t k) {
  const size_t n = mixed.dim(0);
  if (k < 1 || k > n) {
    throw std::invalid_argument("select_top_k: k = " + std::to_string(k) +
                                " out of [1, " + std::to_string(n) + "]");
  }
  if (scores.ranking.size() != n) {
    throw std::invalid_argument("select_top_k: ranking length mismatch");
  }
  const size_t sample = mixed.size() / n;
  TopK out;
  std::vector<size_t> shape = mixed.shape;
  shape[0] = k;
  out.inputs = Tensor(std::move(shape));
  std::copy(mixed.data.begin(), mixed.data.begin() + k * sample,
            out.inputs.data.begin());
  out.base_indices.assign(scores.ranking.begin(), scores.ranking.begin() + k);
  return out;
}

UnixBatchResult unix_batch(const Tensor& batch, const Model& student,
                           const UnixConfig& config, SplitMix64& rng) {
  const size_t n = batch.dim(0);
  if (config.k < 1 || config.k > n) {
    throw std::invalid_argument("unix_batch: k out of [1, N]");
  }

  UnixBatchResult result;
  Tensor logits;
  if (config.want_features) {
    ForwardTrace trace = model_forward_trace(student, batch, true);
    logits = std::move(trace.logits);
    result.penultimate = std::move(trace.penultimate);
  } else {
    logits = model_forward(student, batch);
  }
  const Tensor probs = softmax(logits, config.score_temperature);
  result.scores = score_uncertainty(probs, config.criterion);

  MixupPlan plan;
  plan.alpha = config.alpha;
  plan.w = config.w;
  plan.b = config.b < 0.0 ? static_cast<double>(n) / 2.0 : config.b;
  plan.k = config.k;
  // draws happen in every mode so ablations stay stream-compatible
  plan.lambda = sample_beta(config.alpha, rng);
  if (config.per_sample_lambda) {
    plan.per_sample_lambda.resize(n);
    plan.per_sample_lambda[0] = plan.lambda;
    for (size_t i = 1; i < n; ++i) {
      plan.per_sample_lambda[i] = sample_beta(config.alpha, rng);
    }
  }
  plan.shuffle = random_permutation(n, rng);
  if (config.lambda_mode == LambdaMode::forced_zero) {
    plan.lambda = 0.0;
    std::fill(plan.per_sample_lambda.begin(), plan.per_sample_lambda.end(), 0.0);
  }
  plan.corrections.resize(n);
  for (size_t i = 0; i < n; ++i) {
    plan.corrections[i] = config.correction_mode == CorrectionMode::constant_one
                              ? 1.0
                              : correction_factor(i, n, plan.w, plan.b);
  }

  const Tensor mixed = adaptive_mixup(batch, result.scores, plan);
  TopK top = select_top_k(mixed, result.scores, config.k);
  result.inputs = std::move(top.inputs);
  result.base_indices = std::move(top.base_indices);
  result.plan = std::move(plan);
  return result;
}

std::vector<size_t> random_permutation(size_t n, SplitMix64& rng) {
  std::vector<size_t> perm(n);
  std::iota(perm.begin(), perm.end(), size_t{0});
  for (size_t i = n; i > 1; --i) {
    const size_t j = rng.next_below(i);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

std::vector<size_t> random_subset(size_t n, size_t k, SplitMix64& rng) {
  if (k > n) throw std::invalid_argument("random_subset: k > n");
  std::vector<size_t> pool(n);
  std::iota(pool.begin(), pool.end(), size_t{0});
  std::vector<size_t> out;
  out.reserve(k);
  for (size_t i = 0; i < k; ++i) {
    const size_t j = i + rng.next_below(n - i);
    std::swap(pool[i], pool[j]);
    out.push_back(pool[i]);
  }
  return out;
}

}  // namespace unixkd
