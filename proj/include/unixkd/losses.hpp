#pragma once

#include <optional>
#include <vector>

#include "unixkd/tensor.hpp"

namespace unixkd {

struct LossConfig {
  double temperature = 4.0;
  double weight_ce = 0.0;
  double weight_kd = 1.0;
  double weight_at = 0.0;
  double weight_sp = 0.0;
  bool kd_tau_squared = true;

  void validate() const;
};

struct KdLoss {
  double value = 0.0;
  Tensor grad_student;  // wrt student logits; teacher side is constant
};

// tau^2 * mean over batch of KL(softmax(z_t/tau) || softmax(z_s/tau)).
// tau_squared=false drops the tau^2 factor.
KdLoss kd_loss(const Tensor& teacher_logits, const Tensor& student_logits,
               double tau, bool tau_squared = true);

struct SpLoss {
  double value = 0.0;
  Tensor grad_student;  // wrt student penultimate features
};

// G = f f^T with L2-normalized rows; L = ||G_t - G_s||_F^2 / b^2.
SpLoss sp_loss(const Tensor& teacher_penult, const Tensor& student_penult);

struct AtLoss {
  double value = 0.0;
  std::vector<Tensor> grad_student;  // one per student map
};

// Attention a = L2-normalized vec(sum_c x_c^2) per sample;
// L = sum over pairs of mean_batch ||a_t - a_s||_2.
AtLoss at_loss(const std::vector<Tensor>& teacher_maps,
               const std::vector<Tensor>& student_maps);

struct LossParts {
  std::optional<double> ce;
  std::optional<double> kd;
  std::optional<double> at;
  std::optional<double> sp;
};

// Weighted sum; a missing part with a nonzero weight is rejected.
double combined_loss(const LossConfig& cfg, const LossParts& parts);

}  // namespace unixkd
