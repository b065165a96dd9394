#include "unixkd/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "unixkd/rng.hpp"

namespace unixkd {

namespace {

[[noreturn]] void bad_layer(size_t index, const std::string& why) {
  throw std::invalid_argument("model spec: layer " + std::to_string(index) +
                              ": " + why);
}

}  // namespace

std::vector<std::vector<size_t>> infer_shapes(const ModelSpec& spec) {
  if (spec.input_shape.empty() ||
      (spec.input_shape.size() != 1 && spec.input_shape.size() != 3)) {
    throw std::invalid_argument("model spec: input_shape must be [features] or [c,h,w]");
  }
  for (size_t d : spec.input_shape) {
    if (d == 0) throw std::invalid_argument("model spec: zero input dimension");
  }
  if (spec.num_classes == 0) {
    throw std::invalid_argument("model spec: num_classes must be positive");
  }
  if (spec.layers.empty()) {
    throw std::invalid_argument("model spec: at least one layer required");
  }

  std::vector<std::vector<size_t>> shapes;
  shapes.push_back(spec.input_shape);
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerDesc& d = spec.layers[i];
    const std::vector<size_t>& in = shapes.back();
    switch (d.kind) {
      case LayerKind::dense:
        if (in.size() != 1) bad_layer(i, "dense needs a flat [features] input, got " + shape_to_string(in));
        if (d.width == 0) bad_layer(i, "dense needs out_features > 0");
        shapes.push_back({d.width});
        break;
      case LayerKind::conv3x3:
        if (in.size() != 3) bad_layer(i, "conv3x3 needs a [c,h,w] input, got " + shape_to_string(in));
        if (d.width == 0) bad_layer(i, "conv3x3 needs out_channels > 0");
        shapes.push_back({d.width, in[1], in[2]});
        break;
      case LayerKind::relu:
        shapes.push_back(in);
        break;
      case LayerKind::avgpool2x2:
        if (in.size() != 3) bad_layer(i, "avgpool2x2 needs a [c,h,w] input");
        if (in[1] % 2 != 0 || in[2] % 2 != 0) bad_layer(i, "avgpool2x2 needs even spatial dims, got " + shape_to_string(in));
        shapes.push_back({in[0], in[1] / 2, in[2] / 2});
        break;
      case LayerKind::flatten:
        shapes.push_back({shape_product(in)});
        break;
    }
  }
  const size_t last = spec.layers.size() - 1;
  if (spec.layers[last].kind != LayerKind::dense) {
    bad_layer(last, "final layer must be dense (produces the logits)");
  }
  if (shapes.back() != std::vector<size_t>{spec.num_classes}) {
    bad_layer(last, "final output " + shape_to_string(shapes.back()) +
                        " != [" + std::to_string(spec.num_classes) + "] classes");
  }
  return shapes;
}

Model build_model(const ModelSpec& spec) {
  Model model;
  model.spec = spec;
  model.io_shapes = infer_shapes(spec);

  SplitMix64 rng(spec.seed);
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerDesc& d = spec.layers[i];
    LayerState state;
    state.kind = d.kind;
    size_t fan_in = 0, fan_out = 0;
    if (d.kind == LayerKind::dense) {
      const size_t in = model.io_shapes[i][0];
      state.weight = Tensor({d.width, in});
      state.bias = Tensor({d.width});
      fan_in = in;
      fan_out = d.width;
    } else if (d.kind == LayerKind::conv3x3) {
      const size_t c_in = model.io_shapes[i][0];
      state.weight = Tensor({d.width, c_in, 3, 3});
      state.bias = Tensor({d.width});
      fan_in = c_in * 9;
      fan_out = d.width * 9;
    }
    if (state.has_params()) {
      const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      for (double& v : state.weight.data) {
        v = (2.0 * rng.next_double() - 1.0) * limit;
      }
      state.vel_weight = Tensor(state.weight.shape);
      state.vel_bias = Tensor(state.bias.shape);
    }
    model.layers.push_back(std::move(state));
  }
  return model;
}

namespace {

std::vector<size_t> batched(const std::vector<size_t>& sample, size_t batch) {
  std::vector<size_t> s;
  s.reserve(sample.size() + 1);
  s.push_back(batch);
  s.insert(s.end(), sample.begin(), sample.end());
  return s;
}

}  // namespace

ForwardTrace model_forward_trace(const Model& model, const Tensor& batch,
                                 bool want_features) {
  if (batch.rank() < 2) {
    throw std::invalid_argument("model_forward: need batched input");
  }
  const size_t n = batch.dim(0);
  require_shape(batch, batched(model.io_shapes.front(), n), "model_forward input");

  ForwardTrace trace;
  trace.inputs.reserve(model.layers.size());
  Tensor cur = batch;
  for (size_t i = 0; i < model.layers.size(); ++i) {
    trace.inputs.push_back(cur);
    Tensor next = layer_apply(model.layers[i], cur);
    if (want_features && model.layers[i].kind == LayerKind::relu &&
        next.rank() == 4) {
      trace.conv_features.push_back(next);
      trace.conv_feature_layers.push_back(i);
    }
    cur = std::move(next);
  }
  if (want_features) {
    Tensor penult = trace.inputs.back();
    trace.penultimate = penult.rank() == 2 ? penult : flatten_apply(penult);
  }
  trace.logits = std::move(cur);
  return trace;
}

Tensor model_forward(const Model& model, const Tensor& batch) {
  const size_t n = batch.dim(0);
  require_shape(batch, batched(model.io_shapes.front(), n), "model_forward input");
  Tensor cur = batch;
  for (const LayerState& layer : model.layers) {
    cur = layer_apply(layer, cur);
  }
  return cur;
}

BackwardResult model_backward(const Model& model, const ForwardTrace& trace,
                              const Tensor& logits_grad,
                              const std::vector<Tensor>* conv_feature_grads,
                              const Tensor* penultimate_grad) {
  if (trace.inputs.size() != model.layers.size()) {
    throw std::invalid_argument("model_backward: trace does not match model");
  }
  if (!logits_grad.same_shape(trace.logits)) {
    throw std::invalid_argument("model_backward: logits gradient shape mismatch");
  }
  if (conv_feature_grads &&
      conv_feature_grads->size() != trace.conv_features.size()) {
    throw std::invalid_argument("model_backward: feature gradient count mismatch");
  }

  BackwardResult result;
  result.layer_grads.resize(model.layers.size());
  Tensor upstream = logits_grad;
  for (size_t i = model.layers.size(); i-- > 0;) {
    LayerBackward bw = layer_backward(model.layers[i], trace.inputs[i], upstream);
    result.layer_grads[i] = std::move(bw.grads);
    upstream = std::move(bw.grad_x);
    if (penultimate_grad && i + 1 == model.layers.size()) {
      // penultimate = input of the final (dense) layer
      if (penultimate_grad->size() != upstream.size()) {
        throw std::invalid_argument("model_backward: penultimate gradient size mismatch");
      }
      for (size_t j = 0; j < upstream.size(); ++j) {
        upstream[j] += (*penultimate_grad)[j];
      }
    }
    if (conv_feature_grads) {
      // feature maps are layer outputs; inject where layer i-1 produced one
      for (size_t f = 0; f < trace.conv_feature_layers.size(); ++f) {
        if (i > 0 && trace.conv_feature_layers[f] == i - 1) {
          const Tensor& g = (*conv_feature_grads)[f];
          if (!g.same_shape(upstream)) {
            throw std::invalid_argument("model_backward: feature gradient shape mismatch");
          }
          for (size_t j = 0; j < upstream.size(); ++j) upstream[j] += g[j];
        }
      }
    }
  }
  result.grad_input = std::move(upstream);
  return result;
}

void sgd_update(Model& model, const std::vector<LayerGrads>& grads, double lr,
                double momentum, double weight_decay) {
  if (grads.size() != model.layers.size()) {
    throw std::invalid_argument("sgd_update: gradient count mismatch");
  }
  for (size_t i = 0; i < model.layers.size(); ++i) {
    sgd_step(model.layers[i], grads[i], lr, momentum, weight_decay);
  }
}

FlopProfile flop_count(const ModelSpec& spec, double backward_multiplier) {
  if (backward_multiplier < 0.0) {
    throw std::invalid_argument("flop_count: negative backward multiplier");
  }
  const auto shapes = infer_shapes(spec);
  double forward = 0.0;
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerDesc& d = spec.layers[i];
    const std::vector<size_t>& in = shapes[i];
    if (d.kind == LayerKind::dense) {
      forward += 2.0 * static_cast<double>(in[0]) * static_cast<double>(d.width);
    } else if (d.kind == LayerKind::conv3x3) {
      forward += 2.0 * 9.0 * static_cast<double>(in[0]) *
                 static_cast<double>(d.width) * static_cast<double>(in[1]) *
                 static_cast<double>(in[2]);
    }
    // relu / avgpool / flatten counted as 0
  }
  return {forward, backward_multiplier * forward};
}

CostModel cost_model_from(const ModelSpec& teacher_spec,
                          const ModelSpec& student_spec,
                          double backward_multiplier) {
  const FlopProfile teacher = flop_count(teacher_spec, backward_multiplier);
  const FlopProfile student = flop_count(student_spec, backward_multiplier);
  if (student.forward_flops <= 0.0) {
    throw std::invalid_argument("cost_model_from: student has zero FLOPs, F_t/F_s undefined");
  }
  return {teacher.forward_flops, student.forward_flops, student.backward_flops};
}

uint64_t spec_hash(const ModelSpec& spec) {
  uint64_t h = 0xcbf29ce484222325ull;
  auto feed = [&h](uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ull;
    }
  };
  for (size_t d : spec.input_shape) feed(d);
  feed(0xffffffffffffffffull);
  for (const LayerDesc& d : spec.layers) {
    feed(static_cast<uint64_t>(d.kind));
    feed(d.width);
  }
  feed(spec.num_classes);
  feed(spec.seed);
  return h;
}

std::vector<double> flatten_params(const Model& model) {
  std::vector<double> out;
  for (const LayerState& layer : model.layers) {
    out.insert(out.end(), layer.weight.data.begin(), layer.weight.data.end());
    out.insert(out.end(), layer.bias.data.begin(), layer.bias.data.end());
  }
  return out;
}

void load_flat_params(Model& model, std::span<const double> values) {
  size_t pos = 0;
  for (LayerState& layer : model.layers) {
    for (Tensor* t : {&layer.weight, &layer.bias}) {
      if (pos + t->size() > values.size()) {
        throw std::invalid_argument("load_flat_params: too few values");
      }
      std::copy(values.begin() + pos, values.begin() + pos + t->size(),
                t->data.begin());
      pos += t->size();
    }
  }
  if (pos != values.size()) {
    throw std::invalid_argument("load_flat_params: too many values");
  }
}

}  // namespace unixkd
