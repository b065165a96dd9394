#include "unixkd/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "unixkd/layers.hpp"

namespace unixkd {

void LossConfig::validate() const {
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("loss config: temperature must be positive");
  }
  if (weight_ce < 0 || weight_kd < 0 || weight_at < 0 || weight_sp < 0) {
    throw std::invalid_argument("loss config: negative weight");
  }
  if (weight_ce + weight_kd + weight_at + weight_sp <= 0.0) {
    throw std::invalid_argument("loss config: at least one weight must be positive");
  }
}

KdLoss kd_loss(const Tensor& teacher_logits, const Tensor& student_logits,
               double tau, bool tau_squared) {
  if (!(tau > 0.0)) {
    throw std::invalid_argument("kd_loss: temperature must be positive");
  }
  if (!teacher_logits.same_shape(student_logits) ||
      teacher_logits.rank() != 2) {
    throw std::invalid_argument("kd_loss: teacher " +
                                shape_to_string(teacher_logits.shape) +
                                " vs student " +
                                shape_to_string(student_logits.shape));
  }
  const size_t batch = teacher_logits.dim(0);
  const size_t classes = teacher_logits.dim(1);
  const Tensor pt = softmax(teacher_logits, tau);
  const Tensor ps = softmax(student_logits, tau);

  double kl_sum = 0.0;
  for (size_t b = 0; b < batch; ++b) {
    for (size_t i = 0; i < classes; ++i) {
      const double t = pt[b * classes + i];
      if (t > 0.0) kl_sum += t * (std::log(t) - std::log(ps[b * classes + i]));
    }
  }
  const double scale = tau_squared ? tau * tau : 1.0;
  KdLoss out;
  out.value = scale * kl_sum / static_cast<double>(batch);
  // d/dz_s of tau^2 * KL is tau * (p_s - p_t)
  out.grad_student = Tensor(student_logits.shape);
  const double gscale = scale / (tau * static_cast<double>(batch));
  for (size_t i = 0; i < out.grad_student.size(); ++i) {
    out.grad_student[i] = gscale * (ps[i] - pt[i]);
  }
  return out;
}

namespace {

// row-normalized Gram matrix of f [b, d], plus the row norms of f f^T
void normalized_gram(const Tensor& f, Tensor& gram_out,
                     std::vector<double>& norms_out) {
  const size_t b = f.dim(0), d = f.dim(1);
  Tensor gram({b, b});
  for (size_t i = 0; i < b; ++i) {
    for (size_t j = 0; j < b; ++j) {
      double acc = 0.0;
      for (size_t x = 0; x < d; ++x) acc += f[i * d + x] * f[j * d + x];
      gram[i * b + j] = acc;
    }
  }
  norms_out.assign(b, 0.0);
  for (size_t i = 0; i < b; ++i) {
    double n2 = 0.0;
    for (size_t j = 0; j < b; ++j) n2 += gram[i * b + j] * gram[i * b + j];
    norms_out[i] = std::sqrt(n2);
    if (norms_out[i] > 0.0) {
      for (size_t j = 0; j < b; ++j) gram[i * b + j] /= norms_out[i];
    }
  }
  gram_out = std::move(gram);
}

}  // namespace

SpLoss sp_loss(const Tensor& teacher_penult, const Tensor& student_penult) {
  if (teacher_penult.rank() != 2 || student_penult.rank() != 2 ||
      teacher_penult.dim(0) != student_penult.dim(0)) {
    throw std::invalid_argument("sp_loss: need [b, d] features with equal batch");
  }
  const size_t b = teacher_penult.dim(0);
  if (b < 2) {
    throw std::invalid_argument("sp_loss: batch must be >= 2");
  }
  Tensor gt, gs;
  std::vector<double> nt, ns;
  normalized_gram(teacher_penult, gt, nt);
  normalized_gram(student_penult, gs, ns);

  const double inv_b2 = 1.0 / (static_cast<double>(b) * static_cast<double>(b));
  double loss = 0.0;
  Tensor diff({b, b});
  for (size_t i = 0; i < b * b; ++i) {
    diff[i] = gs[i] - gt[i];
    loss += diff[i] * diff[i];
  }
  loss *= inv_b2;

  // back through row normalization of G_s = f f^T
  Tensor dgram({b, b});
  for (size_t i = 0; i < b; ++i) {
    if (ns[i] <= 0.0) continue;  // zero row stays zero
    double dot = 0.0;
    for (size_t j = 0; j < b; ++j) {
      dot += 2.0 * inv_b2 * diff[i * b + j] * gs[i * b + j];
    }
    for (size_t j = 0; j < b; ++j) {
      dgram[i * b + j] =
          (2.0 * inv_b2 * diff[i * b + j] - dot * gs[i * b + j]) / ns[i];
    }
  }
  const size_t d = student_penult.dim(1);
  SpLoss out;
  out.value = loss;
  out.grad_student = Tensor(student_penult.shape);
  for (size_t i = 0; i < b; ++i) {
    for (size_t j = 0; j < b; ++j) {
      const double m = dgram[i * b + j];
      const double mt = dgram[j * b + i];
      if (m == 0.0 && mt == 0.0) continue;
      for (size_t x = 0; x < d; ++x) {
        out.grad_student[i * d + x] += (m + mt) * student_penult[j * d + x];
      }
    }
  }
  return out;
}

namespace {

// attention map: L2-normalized vec(sum_c x[c,:,:]^2), one row per sample
Tensor attention_of(const Tensor& map) {
  const size_t b = map.dim(0), c = map.dim(1), hw = map.dim(2) * map.dim(3);
  Tensor att({b, hw});
  for (size_t s = 0; s < b; ++s) {
    double* a = att.data.data() + s * hw;
    for (size_t ch = 0; ch < c; ++ch) {
      const double* x = map.data.data() + (s * c + ch) * hw;
      for (size_t j = 0; j < hw; ++j) a[j] += x[j] * x[j];
    }
    double n2 = 0.0;
    for (size_t j = 0; j < hw; ++j) n2 += a[j] * a[j];
    const double n = std::sqrt(n2);
    if (n > 0.0) {
      for (size_t j = 0; j < hw; ++j) a[j] /= n;
    }
  }
  return att;
}

}  // namespace

AtLoss at_loss(const std::vector<Tensor>& teacher_maps,
               const std::vector<Tensor>& student_maps) {
  if (teacher_maps.size() != student_maps.size() || teacher_maps.empty()) {
    throw std::invalid_argument("at_loss: need equally many paired maps");
  }
  AtLoss out;
  out.grad_student.reserve(student_maps.size());
  for (size_t p = 0; p < teacher_maps.size(); ++p) {
    const Tensor& tm = teacher_maps[p];
    const Tensor& sm = student_maps[p];
    if (tm.rank() != 4 || sm.rank() != 4 || tm.dim(0) != sm.dim(0) ||
        tm.dim(2) != sm.dim(2) || tm.dim(3) != sm.dim(3)) {
      throw std::invalid_argument(
          "at_loss: pair " + std::to_string(p) + " spatial mismatch: teacher " +
          shape_to_string(tm.shape) + " vs student " + shape_to_string(sm.shape));
    }
    const size_t b = sm.dim(0), c = sm.dim(1), hw = sm.dim(2) * sm.dim(3);
    const Tensor at_t = attention_of(tm);
    const Tensor at_s = attention_of(sm);

    Tensor grad(sm.shape);
    double pair_loss = 0.0;
    for (size_t s = 0; s < b; ++s) {
      const double* a_t = at_t.data.data() + s * hw;
      const double* a_s = at_s.data.data() + s * hw;
      double d2 = 0.0;
      for (size_t j = 0; j < hw; ++j) {
        const double dj = a_t[j] - a_s[j];
        d2 += dj * dj;
      }
      const double dist = std::sqrt(d2);
      pair_loss += dist;
      if (dist <= 0.0) continue;

      // raw attention v and its norm for the normalization chain rule
      std::vector<double> v(hw, 0.0);
      for (size_t ch = 0; ch < c; ++ch) {
        const double* x = sm.data.data() + (s * c + ch) * hw;
        for (size_t j = 0; j < hw; ++j) v[j] += x[j] * x[j];
      }
      double vn2 = 0.0;
      for (size_t j = 0; j < hw; ++j) vn2 += v[j] * v[j];
      const double vn = std::sqrt(vn2);
      if (vn <= 0.0) continue;

      // dL/da_s = (a_s - a_t) / (dist * b)
      const double s1 = 1.0 / (dist * static_cast<double>(b));
      double gdota = 0.0;
      std::vector<double> g(hw);
      for (size_t j = 0; j < hw; ++j) {
        g[j] = s1 * (a_s[j] - a_t[j]);
        gdota += g[j] * a_s[j];
      }
      for (size_t j = 0; j < hw; ++j) {
        const double dv = (g[j] - gdota * a_s[j]) / vn;
        for (size_t ch = 0; ch < c; ++ch) {
          const size_t idx = (s * c + ch) * hw + j;
          grad[idx] += dv * 2.0 * sm[idx];
        }
      }
    }
    out.value += pair_loss / static_cast<double>(b);
    out.grad_student.push_back(std::move(grad));
  }
  return out;
}

double combined_loss(const LossConfig& cfg, const LossParts& parts) {
  cfg.validate();
  double total = 0.0;
  auto add = [&total](double weight, const std::optional<double>& part,
                      const char* name) {
    if (weight == 0.0) return;
    if (!part.has_value()) {
      throw std::invalid_argument(std::string("combined_loss: ") + name +
                                  " weight is nonzero but the part is missing");
    }
    total += weight * *part;
  };
  add(cfg.weight_ce, parts.ce, "ce");
  add(cfg.weight_kd, parts.kd, "kd");
  add(cfg.weight_at, parts.at, "at");
  add(cfg.weight_sp, parts.sp, "sp");
  return total;
}

}  // namespace unixkd
