#pragma once

#include <string>
#include <vector>

#include "unixkd/tensor.hpp"

namespace unixkd {

enum class Criterion { entropy, confidence, margin };

const char* criterion_name(Criterion c);
Criterion parse_criterion(const std::string& name);

// Per-sample scores under one criterion plus the descending ranking.
struct UncertaintyScores {
  Criterion criterion = Criterion::entropy;
  std::vector<double> scores;
  std::vector<size_t> ranking;  // ranking[0] = most uncertain sample
};

// U_e = -sum_i p_i ln p_i, with 0*ln(0) = 0. Range [0, ln C].
std::vector<double> entropy_uncertainty(const Tensor& probs);

// U_c = -max_i p_i. Range [-1, -1/C].
std::vector<double> confidence_uncertainty(const Tensor& probs);

// U_m = -(p_first - p_second). Range [-1, 0]. Needs C >= 2.
std::vector<double> margin_uncertainty(const Tensor& probs);

// Stable descending sort; ties broken by ascending original index.
std::vector<size_t> rank_descending(const std::vector<double>& scores);

UncertaintyScores score_uncertainty(const Tensor& probs, Criterion criterion);

}  // namespace unixkd
