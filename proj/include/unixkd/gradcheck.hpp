#pragma once

#include <functional>
#include <string>
#include <vector>

#include "unixkd/model.hpp"

namespace unixkd {

struct LossEval {
  double loss = 0.0;
  std::vector<LayerGrads> grads;  // empty unless want_grads
};

using ModelLossFn = std::function<LossEval(Model&, bool want_grads)>;

// Central differences (L(p+h) - L(p-h)) / 2h over every parameter, compared
// against the analytic gradient. Returns max of |a-n| / max(|a|,|n|,1e-8).
double finite_difference_gradcheck(Model& model, const ModelLossFn& loss_fn,
                                   double h);

struct GradcheckCase {
  std::string name;
  double max_rel_error = 0.0;
};

// Every layer kind and every loss (CE, KD at tau 1 and 4, SP, AT) on small
// randomized models, num_seeds seeds each.
std::vector<GradcheckCase> run_gradcheck_suite(size_t num_seeds = 24,
                                               double h = 1e-5);

}  // namespace unixkd
