#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "unixkd/cost.hpp"
#include "unixkd/layers.hpp"
#include "unixkd/tensor.hpp"

namespace unixkd {

struct LayerDesc {
  LayerKind kind = LayerKind::relu;
  size_t width = 0;  // dense: out_features; conv3x3: out_channels

  bool operator==(const LayerDesc&) const = default;
};

struct ModelSpec {
  std::vector<size_t> input_shape;  // [channels, h, w] or [features]
  std::vector<LayerDesc> layers;
  size_t num_classes = 0;
  uint64_t seed = 0;

  bool operator==(const ModelSpec&) const = default;
};

// Per-layer input shapes (sample shapes, no batch dim); the final entry is
// the output shape. Throws with the first offending layer index when shapes
// do not compose or the output is not [num_classes].
std::vector<std::vector<size_t>> infer_shapes(const ModelSpec& spec);

struct Model {
  ModelSpec spec;
  std::vector<LayerState> layers;
  std::vector<std::vector<size_t>> io_shapes;
};

// Deterministic: same spec+seed gives bitwise-identical parameters.
// Weights uniform on +-sqrt(6/(fan_in+fan_out)), biases zero.
Model build_model(const ModelSpec& spec);

struct ForwardTrace {
  std::vector<Tensor> inputs;  // input tensor of each layer
  Tensor logits;
  std::vector<Tensor> conv_features;        // post-activation conv maps
  std::vector<size_t> conv_feature_layers;  // layer index of each map
  Tensor penultimate;                       // input of the final dense layer
};

Tensor model_forward(const Model& model, const Tensor& batch);
ForwardTrace model_forward_trace(const Model& model, const Tensor& batch,
                                 bool want_features);

struct BackwardResult {
  Tensor grad_input;
  std::vector<LayerGrads> layer_grads;  // one entry per layer
};

// Backprop from a logits gradient; optional gradients injected at the
// recorded conv feature maps and at the penultimate vector.
BackwardResult model_backward(const Model& model, const ForwardTrace& trace,
                              const Tensor& logits_grad,
                              const std::vector<Tensor>* conv_feature_grads = nullptr,
                              const Tensor* penultimate_grad = nullptr);

void sgd_update(Model& model, const std::vector<LayerGrads>& grads, double lr,
                double momentum, double weight_decay);

struct FlopProfile {
  double forward_flops = 0.0;   // per single sample
  double backward_flops = 0.0;  // backward_multiplier * forward
};

// dense: 2*in*out; conv3x3: 2*9*c_in*c_out*h*w; elementwise/pool/flatten: 0.
FlopProfile flop_count(const ModelSpec& spec, double backward_multiplier = 1.0);

// F_t from the teacher, F_s and B_s from the student. Rejects students with
// zero FLOPs (the F_t/F_s ratio would be undefined).
CostModel cost_model_from(const ModelSpec& teacher_spec,
                          const ModelSpec& student_spec,
                          double backward_multiplier = 1.0);

uint64_t spec_hash(const ModelSpec& spec);

std::vector<double> flatten_params(const Model& model);
void load_flat_params(Model& model, std::span<const double> values);

}  // namespace unixkd
