#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "unixkd/model.hpp"
#include "unixkd/rng.hpp"

using namespace unixkd;

namespace {

ModelSpec small_conv_spec(uint64_t seed) {
  return {{1, 4, 4},
          {{LayerKind::conv3x3, 2},
           {LayerKind::relu, 0},
           {LayerKind::avgpool2x2, 0},
           {LayerKind::flatten, 0},
           {LayerKind::dense, 3}},
          3,
          seed};
}

}  // namespace

TEST_CASE("build_model determinism") {
  const ModelSpec spec = small_conv_spec(99);
  Model a = build_model(spec);
  Model b = build_model(spec);
  auto pa = flatten_params(a);
  auto pb = flatten_params(b);
  REQUIRE(pa.size() == pb.size());
  for (size_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == pb[i]);

  ModelSpec other = spec;
  other.seed = 100;
  auto pc = flatten_params(build_model(other));
  bool any_diff = false;
  for (size_t i = 0; i < pa.size(); ++i) any_diff |= (pa[i] != pc[i]);
  CHECK(any_diff);
}

TEST_CASE("zero-hidden-layer linear classifier is valid") {
  ModelSpec spec{{6}, {{LayerKind::dense, 4}}, 4, 3};
  Model m = build_model(spec);
  CHECK(m.layers.size() == 1);
  Tensor x({2, 6}, 0.5);
  CHECK(model_forward(m, x).same_shape(Tensor({2, 4})));
}

TEST_CASE("non-composing specs are rejected with the layer index") {
  // dense after conv without flatten
  ModelSpec bad{{1, 4, 4},
                {{LayerKind::conv3x3, 2}, {LayerKind::dense, 3}},
                3,
                0};
  CHECK_THROWS_WITH_AS(build_model(bad),
                       doctest::Contains("layer 1"), std::invalid_argument);

  // odd spatial size into avgpool
  ModelSpec odd{{1, 5, 5},
                {{LayerKind::avgpool2x2, 0},
                 {LayerKind::flatten, 0},
                 {LayerKind::dense, 2}},
                2,
                0};
  CHECK_THROWS_WITH_AS(build_model(odd), doctest::Contains("layer 0"),
                       std::invalid_argument);

  // wrong class count
  ModelSpec wrong{{4}, {{LayerKind::dense, 5}}, 3, 0};
  CHECK_THROWS_AS(build_model(wrong), std::invalid_argument);
}

TEST_CASE("forward matches an independent matrix evaluation") {
  ModelSpec spec{{3},
                 {{LayerKind::dense, 2}, {LayerKind::relu, 0}, {LayerKind::dense, 2}},
                 2,
                 7};
  Model m = build_model(spec);
  // overwrite with fixed params
  m.layers[0].weight = Tensor::of({2, 3}, {1, 0, -1, 2, 1, 0});
  m.layers[0].bias = Tensor::of({2}, {0.5, -1});
  m.layers[2].weight = Tensor::of({2, 2}, {1, 1, -1, 2});
  m.layers[2].bias = Tensor::of({2}, {0, 0.25});

  Tensor x = Tensor::of({1, 3}, {2, -1, 0.5});
  // hand oracle: h = relu(W1 x + b1), y = W2 h + b2
  const double h0 = std::max(0.0, 1 * 2 + 0 * -1 + -1 * 0.5 + 0.5);
  const double h1 = std::max(0.0, 2 * 2 + 1 * -1 + 0 * 0.5 - 1.0);
  const double y0 = h0 + h1;
  const double y1 = -h0 + 2 * h1 + 0.25;
  Tensor y = model_forward(m, x);
  CHECK(y[0] == doctest::Approx(y0).epsilon(1e-15));
  CHECK(y[1] == doctest::Approx(y1).epsilon(1e-15));

  // passthrough identity weights
  ModelSpec id_spec{{2}, {{LayerKind::dense, 2}}, 2, 0};
  Model id = build_model(id_spec);
  id.layers[0].weight = Tensor::of({2, 2}, {1, 0, 0, 1});
  id.layers[0].bias = Tensor({2});
  Tensor xi = Tensor::of({1, 2}, {4.5, -3});
  Tensor yi = model_forward(id, xi);
  CHECK(yi[0] == 4.5);
  CHECK(yi[1] == -3.0);

  // zero input through zero-bias model gives zero logits
  Model z = build_model(id_spec);
  z.layers[0].bias = Tensor({2});
  Tensor yz = model_forward(z, Tensor({3, 2}));
  for (double v : yz.data) CHECK(v == 0.0);
}

TEST_CASE("forward trace collects conv features and the penultimate vector") {
  Model m = build_model(small_conv_spec(5));
  SplitMix64 rng(2);
  Tensor x({2, 1, 4, 4});
  for (double& v : x.data) v = rng.next_double();
  ForwardTrace trace = model_forward_trace(m, x, true);
  REQUIRE(trace.conv_features.size() == 1);
  CHECK(trace.conv_features[0].shape == std::vector<size_t>{2, 2, 4, 4});
  CHECK(trace.penultimate.shape == std::vector<size_t>{2, 8});
  CHECK(trace.logits.shape == std::vector<size_t>{2, 3});
  // penultimate equals the flattened pooled map
  Tensor pooled = avgpool2x2_apply(trace.conv_features[0]);
  Tensor flat = flatten_apply(pooled);
  for (size_t i = 0; i < flat.size(); ++i) {
    CHECK(trace.penultimate[i] == flat[i]);
  }
}

TEST_CASE("flop_count formulas") {
  ModelSpec d{{10}, {{LayerKind::dense, 5}}, 5, 0};
  CHECK(flop_count(d).forward_flops == 100.0);
  CHECK(flop_count(d).backward_flops == 100.0);
  CHECK(flop_count(d, 2.0).backward_flops == 200.0);

  ModelSpec c{{1, 4, 4},
              {{LayerKind::conv3x3, 2}, {LayerKind::flatten, 0}, {LayerKind::dense, 2}},
              2,
              0};
  // conv: 2*9*1*2*16 = 576, dense: 2*32*2 = 128
  CHECK(flop_count(c).forward_flops == 576.0 + 128.0);

  // parameterless layers count zero: relu-only model is impossible (final
  // dense required), so compare with/without relu
  ModelSpec with_relu{{8},
                      {{LayerKind::dense, 8}, {LayerKind::relu, 0}, {LayerKind::dense, 2}},
                      2,
                      0};
  ModelSpec without{{8}, {{LayerKind::dense, 8}, {LayerKind::dense, 2}}, 2, 0};
  CHECK(flop_count(with_relu).forward_flops ==
        flop_count(without).forward_flops);
}

TEST_CASE("flop_count is additive over layer concatenation") {
  ModelSpec head{{6}, {{LayerKind::dense, 4}}, 4, 0};
  ModelSpec tail{{4}, {{LayerKind::dense, 3}}, 3, 0};
  ModelSpec joined{{6}, {{LayerKind::dense, 4}, {LayerKind::dense, 3}}, 3, 0};
  CHECK(flop_count(joined).forward_flops ==
        flop_count(head).forward_flops + flop_count(tail).forward_flops);
}

TEST_CASE("dense-only cost ratios are invariant under uniform width scaling") {
  auto dense_chain = [](size_t s) {
    return ModelSpec{{s},
                     {{LayerKind::dense, 2 * s}, {LayerKind::dense, s}},
                     s,
                     0};
  };
  const double r1 = cost_model_from(dense_chain(40), dense_chain(10)).ratio();
  const double r2 = cost_model_from(dense_chain(120), dense_chain(30)).ratio();
  CHECK(r1 == doctest::Approx(r2).epsilon(1e-12));
}

TEST_CASE("cost model rejects zero-flop students") {
  ModelSpec t{{4}, {{LayerKind::dense, 2}}, 2, 0};
  // a student spec with zero FLOPs cannot exist through infer_shapes (final
  // dense always contributes), so drive flop_count directly
  CHECK_THROWS_AS(cost_model_from(t, ModelSpec{{4}, {}, 2, 0}),
                  std::invalid_argument);
}

TEST_CASE("flat param round trip") {
  Model m = build_model(small_conv_spec(11));
  std::vector<double> params = flatten_params(m);
  Model n = build_model(small_conv_spec(12));
  load_flat_params(n, params);
  CHECK(flatten_params(n) == params);
  params.pop_back();
  CHECK_THROWS_AS(load_flat_params(n, params), std::invalid_argument);
}
