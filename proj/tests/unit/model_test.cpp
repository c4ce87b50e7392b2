#include <gtest/gtest.h>

#include "advbench/errors.hpp"
#include "advbench/losses.hpp"
#include "advbench/model.hpp"
#include "reference.hpp"

using namespace advbench;

TEST(Model, ZeroLinearGivesZeroLogits) {
  auto m = ref::linear_model({{0, 0, 0}, {0, 0, 0}}, {0, 0});
  const auto z = m.logits(std::vector<double>{0.3, 0.9, 0.1});
  EXPECT_EQ(z, (std::vector<double>{0.0, 0.0}));
}

TEST(Model, IdentityLinear) {
  auto m = ref::linear_model({{1, 0}, {0, 1}}, {0, 0});
  const auto z = m.logits(std::vector<double>{0.25, 0.75});
  EXPECT_EQ(z, (std::vector<double>{0.25, 0.75}));
}

TEST(Model, MlpMatchesIndependentForward) {
  for (auto act : {Activation::tanh, Activation::relu}) {
    auto m = init_model(Architecture::mlp, 10, {8, 6}, 3, act, 42);
    const std::vector<double> x(10, 0.5);
    const auto z = m.logits(x);
    const auto r = ref::logits(m, x);
    ASSERT_EQ(z.size(), 3u);
    EXPECT_LT(ref::max_abs_diff(z, r), 1e-12);
  }
}

TEST(Model, ForwardIsPure) {
  auto m = init_model(Architecture::mlp, 5, {7}, 4, Activation::tanh, 3);
  const std::vector<double> x{0.1, 0.2, 0.3, 0.4, 0.5};
  EXPECT_EQ(m.logits(x), m.logits(x));
}

TEST(Model, DimensionMismatchIsConfigError) {
  auto m = init_model(Architecture::linear, 4, {}, 2, Activation::none, 1);
  EXPECT_THROW(m.logits(std::vector<double>{0.1, 0.2}), ConfigError);
  ImageBatch b(2, 3, 2);
  EXPECT_THROW(m.forward(b), ConfigError);
}

TEST(Model, LinearCrossEntropyGradientClosedForm) {
  auto m = init_model(Architecture::linear, 6, {}, 3, Activation::none, 9);
  for (const auto& x : ref::random_points(20, 6, 1)) {
    for (int y = 0; y < 3; ++y) {
      const auto g = m.input_gradient(x, LossSpec::cross_entropy(), y);
      EXPECT_LT(ref::max_abs_diff(g.grad, ref::linear_ce_gradient(m, x, y)), 1e-12);
    }
  }
}

TEST(Model, ConstantLossHasZeroGradient) {
  auto m = init_model(Architecture::mlp, 4, {5}, 3, Activation::tanh, 2);
  const std::vector<double> x{0.2, 0.4, 0.6, 0.8};
  const auto loss = LossSpec::output_direction({0.0, 0.0, 0.0});
  const auto g = m.input_gradient(x, loss, 0);
  for (double v : g.grad) EXPECT_EQ(v, 0.0);
  for (double v : fd_gradient(m, x, loss, 0, 1e-3)) EXPECT_EQ(v, 0.0);
}

TEST(Model, FiniteDifferenceMatchesLinearCrossEntropy) {
  auto m = init_model(Architecture::linear, 5, {}, 2, Activation::none, 5);
  for (const auto& x : ref::random_points(10, 5, 2)) {
    const auto fd = fd_gradient(m, x, LossSpec::cross_entropy(), 1, 1e-4);
    EXPECT_LT(ref::max_abs_diff(fd, ref::linear_ce_gradient(m, x, 1)), 1e-6);
  }
}

TEST(Model, MlpMarginGradientMatchesFiniteDifferences) {
  auto m = init_model(Architecture::mlp, 8, {12}, 4, Activation::tanh, 11);
  int checked = 0;
  for (const auto& x : ref::random_points(100, 8, 3)) {
    const auto z = m.logits(x);
    if (selection_gap(LossSpec::margin(), z, 0) < 1e-2) continue;
    const auto g = m.input_gradient(x, LossSpec::margin(), 0);
    const auto fd = fd_gradient(m, x, LossSpec::margin(), 0, 1e-3);
    EXPECT_LT(ref::relative_error(g.grad, fd), 1e-4);
    ++checked;
  }
  EXPECT_GT(checked, 80);
}

TEST(Model, ShadowCountersTrackPasses) {
  auto m = init_model(Architecture::mlp, 3, {4}, 2, Activation::relu, 1);
  m.reset_call_counts();
  const std::vector<double> x{0.5, 0.5, 0.5};
  m.logits(x);
  m.input_gradient(x, LossSpec::margin(), 1);
  const auto c = m.call_counts();
  EXPECT_EQ(c.forward, 2u);
  EXPECT_EQ(c.backward, 1u);
  Model copy(m);
  EXPECT_EQ(copy.call_counts().forward, 0u);
}

TEST(Model, ReluKinkDistance) {
  DenseLayer h(1, 1);
  h.w(0, 0) = 1.0;
  h.bias[0] = -0.5;
  DenseLayer out(1, 2);
  out.w(0, 0) = 1.0;
  out.w(1, 0) = -1.0;
  auto m = Model::mlp({h, out}, Activation::relu);
  EXPECT_NEAR(m.kink_distance(std::vector<double>{0.75}), 0.25, 1e-12);
  auto lin = init_model(Architecture::linear, 1, {}, 2, Activation::none, 0);
  EXPECT_TRUE(std::isinf(lin.kink_distance(std::vector<double>{0.3})));
}

TEST(Model, ParameterGradientMatchesFiniteDifferenceOnWeights) {
  auto m = init_model(Architecture::mlp, 3, {4}, 3, Activation::tanh, 8);
  const std::vector<double> x{0.3, 0.6, 0.2};
  const auto t = m.trace(x);
  const auto lv = evaluate_loss(LossSpec::cross_entropy(), t.logits(), 2);
  const auto pg = m.parameter_gradient(t, lv.grad);
  const double h = 1e-5;
  for (std::size_t l = 0; l < m.layers().size(); ++l) {
    for (std::size_t k = 0; k < m.layers()[l].weight.size(); ++k) {
      auto layers_p = m.layers();
      auto layers_m = m.layers();
      layers_p[l].weight[k] += h;
      layers_m[l].weight[k] -= h;
      // Perturbed weights are rounded to float32 by the model, so use the
      // actual stored difference.
      Model mp = Model::mlp(layers_p, Activation::tanh);
      Model mm = Model::mlp(layers_m, Activation::tanh);
      const double dw = mp.layers()[l].weight[k] - mm.layers()[l].weight[k];
      const double fd = (cross_entropy(mp.logits(x), 2) - cross_entropy(mm.logits(x), 2)) / dw;
      EXPECT_NEAR(pg[l].weight[k], fd, 1e-5);
    }
  }
}
