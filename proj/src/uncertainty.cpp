#include "unixkd/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace unixkd {

const char* criterion_name(Criterion c) {
  switch (c) {
    case Criterion::entropy: return "entropy";
    case Criterion::confidence: return "confidence";
    case Criterion::margin: return "margin";
  }
  return "?";
}

Criterion parse_criterion(const std::string& name) {
  if (name == "entropy") return Criterion::entropy;
  if (name == "confidence") return Criterion::confidence;
  if (name == "margin") return Criterion::margin;
  throw std::invalid_argument("unknown uncertainty criterion: " + name);
}

namespace {

void check_distribution(const Tensor& probs) {
  if (probs.rank() != 2 || probs.dim(1) == 0) {
    throw std::invalid_argument("uncertainty: need [batch, C] probabilities");
  }
  const size_t batch = probs.dim(0), classes = probs.dim(1);
  for (size_t b = 0; b < batch; ++b) {
    double sum = 0.0;
    for (size_t i = 0; i < classes; ++i) {
      const double p = probs[b * classes + i];
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw std::invalid_argument("uncertainty: row " + std::to_string(b) +
                                    " has a negative or non-finite entry");
      }
      sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-6) {
      throw std::invalid_argument("uncertainty: row " + std::to_string(b) +
                                  " sums to " + std::to_string(sum));
    }
  }
}

}  // namespace

std::vector<double> entropy_uncertainty(const Tensor& probs) {
  check_distribution(probs);
  const size_t batch = probs.dim(0), classes = probs.dim(1);
  std::vector<double> scores(batch);
  for (size_t b = 0; b < batch; ++b) {
    double h = 0.0;
    for (size_t i = 0; i < classes; ++i) {
      const double p = probs[b * classes + i];
      if (p > 0.0) h -= p * std::log(p);
    }
    scores[b] = h;
  }
  return scores;
}

std::vector<double> confidence_uncertainty(const Tensor& probs) {
  check_distribution(probs);
  const size_t batch = probs.dim(0), classes = probs.dim(1);
  std::vector<double> scores(batch);
  for (size_t b = 0; b < batch; ++b) {
    double best = probs[b * classes];
    for (size_t i = 1; i < classes; ++i) {
      best = std::max(best, probs[b * classes + i]);
    }
    scores[b] = -best;
  }
  return scores;
}

std::vector<double> margin_uncertainty(const Tensor& probs) {
  check_distribution(probs);
  const size_t batch = probs.dim(0), classes = probs.dim(1);
  if (classes < 2) {
    throw std::invalid_argument("margin: needs at least 2 classes");
  }
  std::vector<double> scores(batch);
  for (size_t b = 0; b < batch; ++b) {
    double first = -1.0, second = -1.0;
    for (size_t i = 0; i < classes; ++i) {
      const double p = probs[b * classes + i];
      if (p > first) {
        second = first;
        first = p;
      } else if (p > second) {
        second = p;
      }
    }
    scores[b] = -(first - second);
  }
  return scores;
}

std::vector<size_t> rank_descending(const std::vector<double>& scores) {
  for (double s : scores) {
    if (std::isnan(s)) {
      throw std::invalid_argument("rank_descending: NaN score");
    }
  }
  std::vector<size_t> ranking(scores.size());
  std::iota(ranking.begin(), ranking.end(), size_t{0});
  std::stable_sort(ranking.begin(), ranking.end(),
                   [&scores](size_t a, size_t b) { return scores[a] > scores[b]; });
  return ranking;
}

UncertaintyScores score_uncertainty(const Tensor& probs, Criterion criterion) {
  UncertaintyScores result;
  result.criterion = criterion;
  switch (criterion) {
    case Criterion::entropy: result.scores = entropy_uncertainty(probs); break;
    case Criterion::confidence: result.scores = confidence_uncertainty(probs); break;
    case Criterion::margin: result.scores = margin_uncertainty(probs); break;
  }
  result.ranking = rank_descending(result.scores);
  return result;
}

}  // namespace unixkd
