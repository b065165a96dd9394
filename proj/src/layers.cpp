#include "unixkd/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace unixkd {

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv3x3: return "conv3x3";
    case LayerKind::relu: return "relu";
    case LayerKind::avgpool2x2: return "avgpool2x2";
    case LayerKind::flatten: return "flatten";
  }
  return "?";
}

LayerKind parse_layer_kind(const std::string& name) {
  if (name == "dense") return LayerKind::dense;
  if (name == "conv3x3") return LayerKind::conv3x3;
  if (name == "relu") return LayerKind::relu;
  if (name == "avgpool2x2") return LayerKind::avgpool2x2;
  if (name == "flatten") return LayerKind::flatten;
  throw std::invalid_argument("unknown layer kind: " + name);
}

Tensor dense_apply(const LayerState& layer, const Tensor& x) {
  const size_t out = layer.weight.dim(0);
  const size_t in = layer.weight.dim(1);
  if (x.rank() != 2 || x.dim(1) != in) {
    throw std::invalid_argument(
        "dense: input shape " + shape_to_string(x.shape) +
        " does not match weight " + shape_to_string(layer.weight.shape));
  }
  const size_t batch = x.dim(0);
  Tensor y({batch, out});
  for (size_t b = 0; b < batch; ++b) {
    const double* xr = x.data.data() + b * in;
    double* yr = y.data.data() + b * out;
    for (size_t o = 0; o < out; ++o) {
      const double* wr = layer.weight.data.data() + o * in;
      double acc = layer.bias[o];
      for (size_t i = 0; i < in; ++i) acc += wr[i] * xr[i];
      yr[o] = acc;
    }
  }
  return y;
}

LayerBackward dense_grad(const LayerState& layer, const Tensor& x,
                         const Tensor& upstream) {
  const size_t out = layer.weight.dim(0);
  const size_t in = layer.weight.dim(1);
  if (x.rank() != 2 || x.dim(1) != in) {
    throw std::invalid_argument("dense grad: bad input shape " +
                                shape_to_string(x.shape));
  }
  const size_t batch = x.dim(0);
  require_shape(upstream, {batch, out}, "dense grad upstream");

  LayerBackward bw;
  bw.grad_x = Tensor({batch, in});
  bw.grads.weight = Tensor({out, in});
  bw.grads.bias = Tensor({out});
  for (size_t b = 0; b < batch; ++b) {
    const double* xr = x.data.data() + b * in;
    const double* ur = upstream.data.data() + b * out;
    double* gxr = bw.grad_x.data.data() + b * in;
    for (size_t o = 0; o < out; ++o) {
      const double u = ur[o];
      const double* wr = layer.weight.data.data() + o * in;
      double* gwr = bw.grads.weight.data.data() + o * in;
      bw.grads.bias[o] += u;
      for (size_t i = 0; i < in; ++i) {
        gxr[i] += u * wr[i];
        gwr[i] += u * xr[i];
      }
    }
  }
  return bw;
}

Tensor conv3x3_apply(const LayerState& layer, const Tensor& x) {
  const size_t c_out = layer.weight.dim(0);
  const size_t c_in = layer.weight.dim(1);
  if (x.rank() != 4 || x.dim(1) != c_in) {
    throw std::invalid_argument(
        "conv3x3: input shape " + shape_to_string(x.shape) +
        " does not match weight " + shape_to_string(layer.weight.shape));
  }
  const size_t batch = x.dim(0), h = x.dim(2), w = x.dim(3);
  Tensor y({batch, c_out, h, w});
  for (size_t b = 0; b < batch; ++b) {
    for (size_t o = 0; o < c_out; ++o) {
      double* yp = y.data.data() + ((b * c_out + o) * h) * w;
      const double bias = layer.bias[o];
      for (size_t i = 0; i < h * w; ++i) yp[i] = bias;
      for (size_t c = 0; c < c_in; ++c) {
        const double* xp = x.data.data() + ((b * c_in + c) * h) * w;
        const double* wp = layer.weight.data.data() + (o * c_in + c) * 9;
        for (size_t i = 0; i < h; ++i) {
          for (size_t u = 0; u < 3; ++u) {
            const size_t xi = i + u;  // input row + 1 (pad offset)
            if (xi < 1 || xi > h) continue;
            const double* xrow = xp + (xi - 1) * w;
            const double* wrow = wp + u * 3;
            double* yrow = yp + i * w;
            for (size_t j = 0; j < w; ++j) {
              double acc = 0.0;
              if (j >= 1) acc += wrow[0] * xrow[j - 1];
              acc += wrow[1] * xrow[j];
              if (j + 1 < w) acc += wrow[2] * xrow[j + 1];
              yrow[j] += acc;
            }
          }
        }
      }
    }
  }
  return y;
}

LayerBackward conv3x3_grad(const LayerState& layer, const Tensor& x,
                           const Tensor& upstream) {
  const size_t c_out = layer.weight.dim(0);
  const size_t c_in = layer.weight.dim(1);
  if (x.rank() != 4 || x.dim(1) != c_in) {
    throw std::invalid_argument("conv3x3 grad: bad input shape " +
                                shape_to_string(x.shape));
  }
  const size_t batch = x.dim(0), h = x.dim(2), w = x.dim(3);
  require_shape(upstream, {batch, c_out, h, w}, "conv3x3 grad upstream");

  LayerBackward bw;
  bw.grad_x = Tensor({batch, c_in, h, w});
  bw.grads.weight = Tensor(layer.weight.shape);
  bw.grads.bias = Tensor({c_out});

  for (size_t b = 0; b < batch; ++b) {
    for (size_t o = 0; o < c_out; ++o) {
      const double* up = upstream.data.data() + ((b * c_out + o) * h) * w;
      double acc_b = 0.0;
      for (size_t i = 0; i < h * w; ++i) acc_b += up[i];
      bw.grads.bias[o] += acc_b;
      for (size_t c = 0; c < c_in; ++c) {
        const double* xp = x.data.data() + ((b * c_in + c) * h) * w;
        const double* wp = layer.weight.data.data() + (o * c_in + c) * 9;
        double* gxp = bw.grad_x.data.data() + ((b * c_in + c) * h) * w;
        double* gwp = bw.grads.weight.data.data() + (o * c_in + c) * 9;
        for (size_t i = 0; i < h; ++i) {
          for (size_t u = 0; u < 3; ++u) {
            const size_t xi = i + u;
            if (xi < 1 || xi > h) continue;
            const size_t xrow = xi - 1;
            for (size_t j = 0; j < w; ++j) {
              const double uv = up[i * w + j];
              for (size_t v = 0; v < 3; ++v) {
                const size_t xj = j + v;
                if (xj < 1 || xj > w) continue;
                const size_t col = xj - 1;
                gxp[xrow * w + col] += uv * wp[u * 3 + v];
                gwp[u * 3 + v] += uv * xp[xrow * w + col];
              }
            }
          }
        }
      }
    }
  }
  return bw;
}

Tensor relu_apply(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor relu_grad(const Tensor& x, const Tensor& upstream) {
  if (!x.same_shape(upstream)) {
    throw std::invalid_argument("relu grad: upstream shape mismatch");
  }
  Tensor g = upstream;
  for (size_t i = 0; i < g.size(); ++i) {
    if (x[i] <= 0.0) g[i] = 0.0;  // subgradient 0 at x == 0
  }
  return g;
}

Tensor avgpool2x2_apply(const Tensor& x) {
  if (x.rank() != 4 || x.dim(2) % 2 != 0 || x.dim(3) % 2 != 0) {
    throw std::invalid_argument("avgpool2x2: need [b,c,h,w] with even h, w, got " +
                                shape_to_string(x.shape));
  }
  const size_t batch = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const size_t oh = h / 2, ow = w / 2;
  Tensor y({batch, c, oh, ow});
  for (size_t bc = 0; bc < batch * c; ++bc) {
    const double* xp = x.data.data() + bc * h * w;
    double* yp = y.data.data() + bc * oh * ow;
    for (size_t i = 0; i < oh; ++i) {
      for (size_t j = 0; j < ow; ++j) {
        yp[i * ow + j] = 0.25 * (xp[(2 * i) * w + 2 * j] +
                                 xp[(2 * i) * w + 2 * j + 1] +
                                 xp[(2 * i + 1) * w + 2 * j] +
                                 xp[(2 * i + 1) * w + 2 * j + 1]);
      }
    }
  }
  return y;
}

Tensor avgpool2x2_grad(const Tensor& x, const Tensor& upstream) {
  const size_t batch = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const size_t oh = h / 2, ow = w / 2;
  require_shape(upstream, {batch, c, oh, ow}, "avgpool2x2 grad upstream");
  Tensor g(x.shape);
  for (size_t bc = 0; bc < batch * c; ++bc) {
    const double* up = upstream.data.data() + bc * oh * ow;
    double* gp = g.data.data() + bc * h * w;
    for (size_t i = 0; i < oh; ++i) {
      for (size_t j = 0; j < ow; ++j) {
        const double v = 0.25 * up[i * ow + j];
        gp[(2 * i) * w + 2 * j] = v;
        gp[(2 * i) * w + 2 * j + 1] = v;
        gp[(2 * i + 1) * w + 2 * j] = v;
        gp[(2 * i + 1) * w + 2 * j + 1] = v;
      }
    }
  }
  return g;
}

Tensor flatten_apply(const Tensor& x) {
  if (x.rank() < 2) {
    throw std::invalid_argument("flatten: need batched input, got " +
                                shape_to_string(x.shape));
  }
  Tensor y = x;
  y.shape = {x.dim(0), x.size() / x.dim(0)};
  return y;
}

Tensor flatten_grad(const Tensor& x, const Tensor& upstream) {
  if (upstream.size() != x.size()) {
    throw std::invalid_argument("flatten grad: size mismatch");
  }
  Tensor g = upstream;
  g.shape = x.shape;
  return g;
}

Tensor layer_apply(const LayerState& layer, const Tensor& x) {
  switch (layer.kind) {
    case LayerKind::dense: return dense_apply(layer, x);
    case LayerKind::conv3x3: return conv3x3_apply(layer, x);
    case LayerKind::relu: return relu_apply(x);
    case LayerKind::avgpool2x2: return avgpool2x2_apply(x);
    case LayerKind::flatten: return flatten_apply(x);
  }
  throw std::logic_error("unreachable layer kind");
}

LayerBackward layer_backward(const LayerState& layer, const Tensor& x,
                             const Tensor& upstream) {
  switch (layer.kind) {
    case LayerKind::dense: return dense_grad(layer, x, upstream);
    case LayerKind::conv3x3: return conv3x3_grad(layer, x, upstream);
    case LayerKind::relu: return {relu_grad(x, upstream), {}};
    case LayerKind::avgpool2x2: return {avgpool2x2_grad(x, upstream), {}};
    case LayerKind::flatten: return {flatten_grad(x, upstream), {}};
  }
  throw std::logic_error("unreachable layer kind");
}

Tensor softmax(const Tensor& logits, double temperature) {
  if (temperature <= 0.0 || !std::isfinite(temperature)) {
    throw std::invalid_argument("softmax: temperature must be positive");
  }
  if (logits.rank() != 2) {
    throw std::invalid_argument("softmax: need [batch, C] logits");
  }
  const size_t batch = logits.dim(0), classes = logits.dim(1);
  Tensor p({batch, classes});
  for (size_t b = 0; b < batch; ++b) {
    const double* z = logits.data.data() + b * classes;
    double* pr = p.data.data() + b * classes;
    double zmax = z[0];
    for (size_t i = 1; i < classes; ++i) zmax = std::max(zmax, z[i]);
    double sum = 0.0;
    for (size_t i = 0; i < classes; ++i) {
      pr[i] = std::exp((z[i] - zmax) / temperature);
      sum += pr[i];
    }
    for (size_t i = 0; i < classes; ++i) pr[i] /= sum;
  }
  return p;
}

CrossEntropy cross_entropy(const Tensor& logits,
                           const std::vector<uint32_t>& labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size()) {
    throw std::invalid_argument("cross_entropy: logits " +
                                shape_to_string(logits.shape) + " vs " +
                                std::to_string(labels.size()) + " labels");
  }
  const size_t batch = logits.dim(0), classes = logits.dim(1);
  for (uint32_t l : labels) {
    if (l >= classes) {
      throw std::invalid_argument("cross_entropy: label " + std::to_string(l) +
                                  " out of range [0, " +
                                  std::to_string(classes) + ")");
    }
  }
  CrossEntropy result;
  result.grad = softmax(logits, 1.0);
  double total = 0.0;
  for (size_t b = 0; b < batch; ++b) {
    const double* z = logits.data.data() + b * classes;
    double zmax = z[0];
    for (size_t i = 1; i < classes; ++i) zmax = std::max(zmax, z[i]);
    double sum = 0.0;
    for (size_t i = 0; i < classes; ++i) sum += std::exp(z[i] - zmax);
    total += zmax + std::log(sum) - z[labels[b]];
  }
  result.loss = total / static_cast<double>(batch);
  for (size_t b = 0; b < batch; ++b) {
    result.grad[b * classes + labels[b]] -= 1.0;
  }
  for (double& g : result.grad.data) g /= static_cast<double>(batch);
  return result;
}

namespace {

void sgd_one(Tensor& param, Tensor& vel, const Tensor& grad, double lr,
             double momentum, double weight_decay, const char* what) {
  if (!param.same_shape(grad) || !param.same_shape(vel)) {
    throw std::invalid_argument(std::string("sgd_step: ") + what +
                                " gradient shape mismatch");
  }
  for (size_t i = 0; i < param.size(); ++i) {
    vel[i] = momentum * vel[i] + grad[i] + weight_decay * param[i];
    param[i] -= lr * vel[i];
  }
}

}  // namespace

void sgd_step(LayerState& layer, const LayerGrads& grads, double lr,
              double momentum, double weight_decay) {
  if (!layer.has_params()) return;
  sgd_one(layer.weight, layer.vel_weight, grads.weight, lr, momentum,
          weight_decay, "weight");
  sgd_one(layer.bias, layer.vel_bias, grads.bias, lr, momentum, weight_decay,
          "bias");
}

}  // namespace unixkd
