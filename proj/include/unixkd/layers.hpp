#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "unixkd/tensor.hpp"

namespace unixkd {

enum class LayerKind { dense, conv3x3, relu, avgpool2x2, flatten };

const char* layer_kind_name(LayerKind kind);
LayerKind parse_layer_kind(const std::string& name);

// One layer's parameters plus its SGD momentum buffers. Parameterless kinds
// keep all four tensors empty.
struct LayerState {
  LayerKind kind = LayerKind::relu;
  Tensor weight;
  Tensor bias;
  Tensor vel_weight;
  Tensor vel_bias;

  bool has_params() const {
    return kind == LayerKind::dense || kind == LayerKind::conv3x3;
  }
};

struct LayerGrads {
  Tensor weight;
  Tensor bias;
};

struct LayerBackward {
  Tensor grad_x;
  LayerGrads grads;
};

// y[b,o] = sum_i W[o,i] x[b,i] + bias[o]
Tensor dense_apply(const LayerState& layer, const Tensor& x);
LayerBackward dense_grad(const LayerState& layer, const Tensor& x,
                         const Tensor& upstream);

// Stride-1, zero-padding-1 cross-correlation; spatial size preserved.
Tensor conv3x3_apply(const LayerState& layer, const Tensor& x);
LayerBackward conv3x3_grad(const LayerState& layer, const Tensor& x,
                           const Tensor& upstream);

Tensor relu_apply(const Tensor& x);
Tensor relu_grad(const Tensor& x, const Tensor& upstream);

Tensor avgpool2x2_apply(const Tensor& x);
Tensor avgpool2x2_grad(const Tensor& x, const Tensor& upstream);

Tensor flatten_apply(const Tensor& x);
Tensor flatten_grad(const Tensor& x, const Tensor& upstream);

Tensor layer_apply(const LayerState& layer, const Tensor& x);
LayerBackward layer_backward(const LayerState& layer, const Tensor& x,
                             const Tensor& upstream);

// Row-wise softened softmax with max subtraction.
Tensor softmax(const Tensor& logits, double temperature);

struct CrossEntropy {
  double loss = 0.0;
  Tensor grad;  // (p - onehot) / batch
};
CrossEntropy cross_entropy(const Tensor& logits,
                           const std::vector<uint32_t>& labels);

// v <- momentum*v + grad + weight_decay*param; param <- param - lr*v
void sgd_step(LayerState& layer, const LayerGrads& grads, double lr,
              double momentum, double weight_decay);

}  // namespace unixkd
