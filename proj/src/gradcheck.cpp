#include "unixkd/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "unixkd/losses.hpp"
#include "unixkd/rng.hpp"

namespace unixkd {

double finite_difference_gradcheck(Model& model, const ModelLossFn& loss_fn,
                                   double h) {
  if (!(h > 0.0)) {
    throw std::invalid_argument("gradcheck: step must be positive");
  }
  const LossEval analytic = loss_fn(model, true);
  double max_err = 0.0;
  for (size_t li = 0; li < model.layers.size(); ++li) {
    LayerState& layer = model.layers[li];
    if (!layer.has_params()) continue;
    const std::pair<Tensor*, const Tensor*> parts[] = {
        {&layer.weight, &analytic.grads[li].weight},
        {&layer.bias, &analytic.grads[li].bias},
    };
    for (auto [param, grad] : parts) {
      for (size_t i = 0; i < param->size(); ++i) {
        const double saved = (*param)[i];
        (*param)[i] = saved + h;
        const double up = loss_fn(model, false).loss;
        (*param)[i] = saved - h;
        const double down = loss_fn(model, false).loss;
        (*param)[i] = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double a = (*grad)[i];
        const double err =
            std::fabs(a - numeric) /
            std::max({std::fabs(a), std::fabs(numeric), 1e-8});
        max_err = std::max(max_err, err);
      }
    }
  }
  return max_err;
}

namespace {

Tensor random_tensor(std::vector<size_t> shape, SplitMix64& rng,
                     double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = (2.0 * rng.next_double() - 1.0) * scale;
  return t;
}

std::vector<uint32_t> random_labels(size_t n, size_t classes, SplitMix64& rng) {
  std::vector<uint32_t> labels(n);
  for (auto& l : labels) l = static_cast<uint32_t>(rng.next_below(classes));
  return labels;
}

ModelLossFn ce_loss_fn(Tensor batch, std::vector<uint32_t> labels) {
  return [batch = std::move(batch), labels = std::move(labels)](
             Model& m, bool want_grads) -> LossEval {
    ForwardTrace trace = model_forward_trace(m, batch, false);
    CrossEntropy ce = cross_entropy(trace.logits, labels);
    LossEval out;
    out.loss = ce.loss;
    if (want_grads) {
      out.grads = model_backward(m, trace, ce.grad).layer_grads;
    }
    return out;
  };
}

ModelLossFn kd_loss_fn(Tensor batch, Tensor teacher_logits, double tau) {
  return [batch = std::move(batch), teacher_logits = std::move(teacher_logits),
          tau](Model& m, bool want_grads) -> LossEval {
    ForwardTrace trace = model_forward_trace(m, batch, false);
    KdLoss kd = kd_loss(teacher_logits, trace.logits, tau);
    LossEval out;
    out.loss = kd.value;
    if (want_grads) {
      out.grads = model_backward(m, trace, kd.grad_student).layer_grads;
    }
    return out;
  };
}

ModelLossFn sp_loss_fn(Tensor batch, Tensor teacher_penult) {
  return [batch = std::move(batch), teacher_penult = std::move(teacher_penult)](
             Model& m, bool want_grads) -> LossEval {
    ForwardTrace trace = model_forward_trace(m, batch, true);
    SpLoss sp = sp_loss(teacher_penult, trace.penultimate);
    LossEval out;
    out.loss = sp.value;
    if (want_grads) {
      Tensor zero_logits(trace.logits.shape);
      out.grads = model_backward(m, trace, zero_logits, nullptr,
                                 &sp.grad_student)
                      .layer_grads;
    }
    return out;
  };
}

ModelLossFn at_loss_fn(Tensor batch, std::vector<Tensor> teacher_maps) {
  return [batch = std::move(batch), teacher_maps = std::move(teacher_maps)](
             Model& m, bool want_grads) -> LossEval {
    ForwardTrace trace = model_forward_trace(m, batch, true);
    AtLoss at = at_loss(teacher_maps, trace.conv_features);
    LossEval out;
    out.loss = at.value;
    if (want_grads) {
      Tensor zero_logits(trace.logits.shape);
      out.grads = model_backward(m, trace, zero_logits, &at.grad_student)
                      .layer_grads;
    }
    return out;
  };
}

ModelSpec dense_spec(uint64_t seed) {
  return {{5}, {{LayerKind::dense, 4}}, 4, seed};
}

ModelSpec deep_dense_spec(uint64_t seed) {
  return {{6},
          {{LayerKind::dense, 8}, {LayerKind::relu, 0}, {LayerKind::dense, 3}},
          3,
          seed};
}

ModelSpec conv_spec(uint64_t seed) {
  return {{2, 4, 4},
          {{LayerKind::conv3x3, 3},
           {LayerKind::relu, 0},
           {LayerKind::flatten, 0},
           {LayerKind::dense, 4}},
          4,
          seed};
}

ModelSpec stack_spec(uint64_t seed) {
  return {{1, 4, 4},
          {{LayerKind::conv3x3, 2},
           {LayerKind::relu, 0},
           {LayerKind::avgpool2x2, 0},
           {LayerKind::conv3x3, 3},
           {LayerKind::relu, 0},
           {LayerKind::flatten, 0},
           {LayerKind::dense, 5},
           {LayerKind::relu, 0},
           {LayerKind::dense, 3}},
          3,
          seed};
}

double check_case(const ModelSpec& spec, uint64_t seed, double h,
                  const std::function<ModelLossFn(Model&, SplitMix64&)>& make) {
  Model model = build_model(spec);
  SplitMix64 rng(SplitMix64::mix(seed) ^ spec_hash(spec));
  // jitter the zero-initialized biases; otherwise a fully-dead sample puts
  // pre-activations exactly on the relu kink, where central differences and
  // the subgradient convention legitimately disagree
  for (LayerState& layer : model.layers) {
    if (!layer.has_params()) continue;
    for (double& v : layer.bias.data) v = 0.2 * (2.0 * rng.next_double() - 1.0);
  }
  ModelLossFn fn = make(model, rng);
  return finite_difference_gradcheck(model, fn, h);
}

}  // namespace

std::vector<GradcheckCase> run_gradcheck_suite(size_t num_seeds, double h) {
  struct Setup {
    const char* name;
    ModelSpec (*spec)(uint64_t);
    std::function<ModelLossFn(Model&, SplitMix64&)> make;
  };

  auto make_ce = [](Model& m, SplitMix64& rng) {
    const size_t batch = 3;
    Tensor x = random_tensor(
        [&] {
          std::vector<size_t> s = m.io_shapes.front();
          s.insert(s.begin(), batch);
          return s;
        }(),
        rng);
    return ce_loss_fn(std::move(x),
                      random_labels(batch, m.spec.num_classes, rng));
  };
  auto make_kd = [](double tau) {
    return [tau](Model& m, SplitMix64& rng) {
      const size_t batch = 3;
      std::vector<size_t> s = m.io_shapes.front();
      s.insert(s.begin(), batch);
      Tensor x = random_tensor(s, rng);
      Tensor zt = random_tensor({batch, m.spec.num_classes}, rng, 2.0);
      return kd_loss_fn(std::move(x), std::move(zt), tau);
    };
  };
  auto make_sp = [](Model& m, SplitMix64& rng) {
    const size_t batch = 4;
    std::vector<size_t> s = m.io_shapes.front();
    s.insert(s.begin(), batch);
    Tensor x = random_tensor(s, rng);
    Tensor ft = random_tensor({batch, 7}, rng);
    return sp_loss_fn(std::move(x), std::move(ft));
  };
  auto make_at = [](Model& m, SplitMix64& rng) {
    const size_t batch = 2;
    std::vector<size_t> s = m.io_shapes.front();
    s.insert(s.begin(), batch);
    Tensor x = random_tensor(s, rng);
    // teacher maps with different channel counts, same spatial sizes
    ForwardTrace probe = model_forward_trace(m, x, true);
    std::vector<Tensor> tmaps;
    for (const Tensor& f : probe.conv_features) {
      tmaps.push_back(
          random_tensor({f.dim(0), f.dim(1) + 2, f.dim(2), f.dim(3)}, rng));
    }
    return at_loss_fn(std::move(x), std::move(tmaps));
  };

  const Setup setups[] = {
      {"dense+ce", dense_spec, make_ce},
      {"dense_relu_dense+ce", deep_dense_spec, make_ce},
      {"conv_relu_dense+ce", conv_spec, make_ce},
      {"conv_pool_stack+ce", stack_spec, make_ce},
      {"dense+kd_tau1", deep_dense_spec, make_kd(1.0)},
      {"conv+kd_tau4", conv_spec, make_kd(4.0)},
      {"stack+kd_tau4", stack_spec, make_kd(4.0)},
      {"stack+sp", stack_spec, make_sp},
      {"conv+at", conv_spec, make_at},
      {"stack+at", stack_spec, make_at},
  };

  std::vector<GradcheckCase> results;
  for (const Setup& setup : setups) {
    double worst = 0.0;
    for (size_t seed = 1; seed <= num_seeds; ++seed) {
      worst = std::max(worst, check_case(setup.spec(seed), seed, h, setup.make));
    }
    results.push_back({setup.name, worst});
  }
  return results;
}

}  // namespace unixkd
