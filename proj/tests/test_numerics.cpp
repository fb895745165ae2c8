#include <gtest/gtest.h>

#include <cmath>

#include "assoc/adam.hpp"
#include "assoc/classifier.hpp"
#include "assoc/errors.hpp"
#include "assoc/gradcheck.hpp"
#include "assoc/mlp.hpp"
#include "assoc/tensor.hpp"
#include "support.hpp"

namespace assoc {
namespace {

using testing::random_tensor;

// Straight-line forward pass written independently of encoder_forward.
Tensor2 reference_forward(const Tensor2& x, const MlpParams& p) {
  Tensor2 h = x;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& layer = p.layers[l];
    Tensor2 next(h.rows(), layer.weight.cols());
    for (std::size_t r = 0; r < h.rows(); ++r) {
      for (std::size_t o = 0; o < layer.weight.cols(); ++o) {
        double acc = layer.bias[o];
        for (std::size_t i = 0; i < layer.weight.rows(); ++i) acc += h(r, i) * layer.weight(i, o);
        if (l + 1 < p.layers.size()) {
          acc = p.activation == Activation::kTanh ? std::tanh(acc) : std::max(0.0, acc);
        }
        next(r, o) = acc;
      }
    }
    h = next;
  }
  return h;
}

TEST(Tensor, MatmulVariantsAgree) {
  std::mt19937_64 rng(1);
  const Tensor2 a = random_tensor(3, 4, rng);
  const Tensor2 b = random_tensor(4, 5, rng);
  const Tensor2 c = matmul(a, b);
  EXPECT_LT(max_abs_diff(c, matmul_tn(transpose(a), b)), 1e-12);
  EXPECT_LT(max_abs_diff(c, matmul_nt(a, transpose(b))), 1e-12);
  EXPECT_NEAR(c(1, 2), dot(a.row(1), transpose(b).row(2)), 1e-12);
}

TEST(Tensor, ShapeMismatchThrows) {
  EXPECT_THROW(matmul(Tensor2(2, 3), Tensor2(2, 3)), DimensionError);
  EXPECT_THROW(Tensor2(2, 2, std::vector<double>{1.0, 2.0, 3.0}), DimensionError);
  EXPECT_THROW(vstack(Tensor2(1, 2), Tensor2(1, 3)), DimensionError);
}

TEST(Tensor, GatherAndStack) {
  const Tensor2 t = Tensor2::from_rows({{1, 2}, {3, 4}, {5, 6}});
  const std::vector<std::size_t> rows{2, 0};
  EXPECT_EQ(gather_rows(t, rows), Tensor2::from_rows({{5, 6}, {1, 2}}));
  EXPECT_EQ(vstack(t, Tensor2::from_rows({{7, 8}})).rows(), 4u);
  EXPECT_DOUBLE_EQ(squared_distance(t.row(0), t.row(1)), 8.0);
}

TEST(EncoderForward, ZeroNetworkGivesZeros) {
  std::mt19937_64 rng(2);
  const std::vector<std::size_t> widths{4, 6, 3};
  const MlpParams zero = init_mlp(widths, Activation::kTanh, rng).zeros_like();
  const Tensor2 out = encoder_forward(random_tensor(5, 4, rng), zero);
  EXPECT_EQ(out, Tensor2(5, 3));
}

TEST(EncoderForward, IdentityLayerPassesThrough) {
  MlpParams p;
  p.layers.push_back({Tensor2::identity(3), std::vector<double>(3, 0.0)});
  std::mt19937_64 rng(3);
  const Tensor2 x = random_tensor(4, 3, rng);
  EXPECT_EQ(encoder_forward(x, p), x);
}

TEST(EncoderForward, MatchesIndependentForward) {
  std::mt19937_64 rng(4);
  const Tensor2 x = random_tensor(3, 4, rng);
  for (Activation act : {Activation::kTanh, Activation::kRelu}) {
    const std::vector<std::size_t> widths{4, 7, 5, 2};
    const MlpParams p = init_mlp(widths, act, rng);
    EXPECT_LT(max_abs_diff(encoder_forward(x, p), reference_forward(x, p)), 1e-12);
  }
}

TEST(EncoderForward, DeterministicBitwise) {
  std::mt19937_64 rng(5);
  const std::vector<std::size_t> widths{4, 8, 3};
  const MlpParams p = init_mlp(widths, Activation::kTanh, rng);
  const Tensor2 x = random_tensor(6, 4, rng);
  EXPECT_EQ(encoder_forward(x, p), encoder_forward(x, p));
}

TEST(EncoderForward, WrongInputWidthThrows) {
  std::mt19937_64 rng(6);
  const std::vector<std::size_t> widths{4, 8, 3};
  const MlpParams p = init_mlp(widths, Activation::kTanh, rng);
  EXPECT_THROW(encoder_forward(Tensor2(2, 5), p), DimensionError);
  EXPECT_THROW(encoder_backward(Tensor2(2, 4), p, Tensor2(2, 2)), DimensionError);
}

TEST(InitMlp, GlorotBoundsAndZeroBias) {
  std::mt19937_64 rng(7);
  const std::vector<std::size_t> widths{10, 30, 5};
  const MlpParams p = init_mlp(widths, Activation::kTanh, rng);
  ASSERT_EQ(p.layers.size(), 2u);
  for (const auto& layer : p.layers) {
    const double a = std::sqrt(6.0 / static_cast<double>(layer.weight.rows() + layer.weight.cols()));
    EXPECT_LE(max_abs(layer.weight.values()), a);
    EXPECT_GT(max_abs(layer.weight.values()), 0.5 * a);
    for (double b : layer.bias) EXPECT_EQ(b, 0.0);
  }
  EXPECT_EQ(p.parameter_count(), 10u * 30 + 30 + 30 * 5 + 5);
}

TEST(EncoderBackward, ZeroUpstreamGivesZeroGradients) {
  std::mt19937_64 rng(8);
  const std::vector<std::size_t> widths{3, 5, 2};
  const MlpParams p = init_mlp(widths, Activation::kTanh, rng);
  const MlpGradients g = encoder_backward(random_tensor(4, 3, rng), p, Tensor2(4, 2));
  EXPECT_EQ(g.params, p.zeros_like());
  EXPECT_EQ(g.input, Tensor2(4, 3));
}

// y = v * tanh(w x + b) + c; dy/dw = v (1 - t^2) x, dy/db = v (1 - t^2),
// dy/dv = t, dy/dc = 1, dy/dx = v (1 - t^2) w.
TEST(EncoderBackward, ScalarChainRuleByHand) {
  MlpParams p;
  p.layers.push_back({Tensor2(1, 1, std::vector<double>{0.7}), {-0.2}});
  p.layers.push_back({Tensor2(1, 1, std::vector<double>{1.3}), {0.4}});
  const double x = 0.9;
  const double t = std::tanh(0.7 * x - 0.2);
  const double upstream = 2.0;
  const MlpGradients g =
      encoder_backward(Tensor2(1, 1, std::vector<double>{x}), p, Tensor2(1, 1, upstream));
  const double dpre = upstream * 1.3 * (1.0 - t * t);
  EXPECT_NEAR(g.params.layers[0].weight(0, 0), dpre * x, 1e-14);
  EXPECT_NEAR(g.params.layers[0].bias[0], dpre, 1e-14);
  EXPECT_NEAR(g.params.layers[1].weight(0, 0), upstream * t, 1e-14);
  EXPECT_NEAR(g.params.layers[1].bias[0], upstream, 1e-14);
  EXPECT_NEAR(g.input(0, 0), dpre * 0.7, 1e-14);
}

TEST(EncoderBackward, MatchesFiniteDifferences) {
  for (Activation act : {Activation::kTanh, Activation::kRelu}) {
    std::mt19937_64 rng(9);
    const std::vector<std::size_t> widths{4, 6, 3};
    MlpParams p = init_mlp(widths, act, rng);
    for (auto& layer : p.layers)
      for (double& b : layer.bias) b = 0.1;
    Tensor2 x = random_tensor(5, 4, rng);
    const Tensor2 upstream = random_tensor(5, 3, rng);
    // loss = <upstream, f(x)>, so d loss / d out = upstream.
    auto loss = [&] { return dot(encoder_forward(x, p).values(), upstream.values()); };
    const MlpGradients g = encoder_backward(x, p, upstream);
    const auto numeric = finite_diff_grad(loss, p.blocks(), 1e-5);
    EXPECT_LT(max_relative_error(g.params.blocks(), numeric), 1e-4);
    const auto numeric_x = finite_diff_grad(loss, x.values(), 1e-5);
    EXPECT_LT(max_relative_error(g.input.values(), numeric_x), 1e-4);
  }
}

TEST(Adam, FirstStepClosedForm) {
  // After one step m_hat = g and v_hat = g^2, so the update is
  // -lr * g / (|g| + eps).
  std::vector<double> p{1.0, -2.0, 0.5, 3.0};
  const std::vector<double> g{0.3, -4.0, 1e-3, 0.0};
  const std::vector<double> start = p;
  OptimizerState state(AdamConfig{0.01, 0.9, 0.999, 1e-8});
  const std::vector<ParamBlock> blocks{{"p", p}};
  const std::vector<ConstParamBlock> grads{{"p", g}};
  adam_step(blocks, grads, state);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double expected = start[i] - 0.01 * g[i] / (std::abs(g[i]) + 1e-8);
    EXPECT_NEAR(p[i], expected, 1e-15);
  }
  EXPECT_EQ(state.step, 1u);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<double> p{1.0, -2.0, 0.5};
  const std::vector<double> start = p;
  const std::vector<double> g(3, 0.0);
  OptimizerState state;
  const std::vector<ParamBlock> blocks{{"p", p}};
  const std::vector<ConstParamBlock> grads{{"p", g}};
  for (int i = 0; i < 50; ++i) adam_step(blocks, grads, state);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(p[i], start[i], 1e-12);
  EXPECT_EQ(state.step, 50u);
}

TEST(Adam, SecondMomentGrowsOnRepeatedGradient) {
  std::vector<double> p{1.0, 2.0};
  const std::vector<double> g{0.5, -0.25};
  OptimizerState state;
  const std::vector<ParamBlock> blocks{{"p", p}};
  const std::vector<ConstParamBlock> grads{{"p", g}};
  adam_step(blocks, grads, state);
  const auto after_one = state.second_moment[0];
  adam_step(blocks, grads, state);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_GT(state.second_moment[0][i], after_one[i]);
}

TEST(Adam, NonFiniteGradientNamesBlock) {
  std::vector<double> a{1.0}, b{2.0};
  const std::vector<double> ga{0.1}, gb{std::nan("")};
  OptimizerState state;
  const std::vector<ParamBlock> blocks{{"alpha", a}, {"beta", b}};
  const std::vector<ConstParamBlock> grads{{"alpha", ga}, {"beta", gb}};
  try {
    adam_step(blocks, grads, state);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("beta"), std::string::npos);
  }
  EXPECT_EQ(a[0], 1.0);
  EXPECT_EQ(b[0], 2.0);
}

TEST(FiniteDiff, QuadraticAndLinear) {
  std::vector<double> p{0.3, -1.2, 2.5};
  auto quadratic = [&] {
    double s = 0.0;
    for (double v : p) s += 0.5 * v * v;
    return s;
  };
  const auto gq = finite_diff_grad(quadratic, p, 1e-5);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(gq[i], p[i], 1e-8);

  const std::vector<double> c{1.5, -0.5, 4.0};
  auto linear = [&] { return dot(c, p); };
  const auto gl = finite_diff_grad(linear, p, 1e-5);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(gl[i], c[i], 1e-9);
}

TEST(FiniteDiff, RestoresParametersAndRejectsNonFinite) {
  std::vector<double> p{0.1, 0.2};
  const std::vector<double> start = p;
  (void)finite_diff_grad([&] { return p[0] * p[1]; }, p, 1e-3);
  EXPECT_EQ(p, start);
  EXPECT_THROW(finite_diff_grad([&] { return std::log(-p[0]); }, p, 1e-5), NumericError);
}

TEST(NormalizeColumns, ThreeFourFive) {
  const ClassifierWeights w{Tensor2::from_rows({{3.0}, {4.0}})};
  const ClassifierWeights n = normalize_columns(w);
  EXPECT_NEAR(n.matrix(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(n.matrix(1, 0), 0.8, 1e-15);
}

TEST(NormalizeColumns, IdempotentAndUnitNorm) {
  std::mt19937_64 rng(10);
  const ClassifierWeights once = normalize_columns({random_tensor(7, 9, rng)});
  EXPECT_TRUE(columns_unit_norm(once, 1e-9));
  EXPECT_LT(max_abs_diff(normalize_columns(once).matrix, once.matrix), 1e-12);
}

TEST(NormalizeColumns, ZeroColumnThrows) {
  EXPECT_THROW(normalize_columns({Tensor2::from_rows({{1.0, 0.0}, {2.0, 0.0}})}), DegenerateError);
}

TEST(Predict, TiesGoToLowestClass) {
  const ClassifierWeights w{Tensor2::from_rows({{1.0, 1.0, 0.0}, {0.0, 0.0, 1.0}})};
  const auto pred = predict(Tensor2::from_rows({{1.0, 0.0}, {0.0, 1.0}}), w);
  EXPECT_EQ(pred, (std::vector<int>{0, 2}));
}

}  // namespace
}  // namespace assoc
