#include <gtest/gtest.h>

#include "advbench/errors.hpp"
#include "advbench/init.hpp"
#include "reference.hpp"
#include "rig.hpp"

using namespace advbench;

namespace {

ImageBatch one(const std::vector<double>& x, int y, std::size_t classes) { return ref::batch_of({x}, {y}, classes); }

double direction_value(const Model& m, const std::vector<double>& x, int runner, int y) {
  const auto z = ref::logits(m, x);
  return z[static_cast<std::size_t>(runner)] - z[static_cast<std::size_t>(y)];
}

}  // namespace

TEST(Init, UniformIsFeasibleAndSeeded) {
  const ThreatModel tm(0.1);
  const std::vector<double> x{0.02, 0.5, 0.97};
  for (std::uint64_t s = 0; s < 50; ++s) {
    Rng a(7, s, 0, 1), b(7, s, 0, 1);
    const auto p = uniform_init(x, tm, a);
    EXPECT_EQ(p, uniform_init(x, tm, b));
    EXPECT_TRUE(is_feasible(p, x, tm));
  }
}

TEST(Init, UniformTinyEpsilonStaysAtInput) {
  const ThreatModel tm(1e-12);
  const std::vector<double> x{0.3, 0.6};
  Rng r(1);
  EXPECT_LE(ref::max_abs_diff(uniform_init(x, tm, r), x), 1e-12);
}

TEST(Init, OdiChargesOneBackwardPerStep) {
  ref::Rig rig(ref::identity_linear(3), one({0.9, 0.1, 0.1}, 0, 3), 0.05);
  auto p = rig.probe(0);
  Rng r = p.rng(0, 2);
  const auto x = odi_init(p, rig.origin(0), 2, 0.05, rig.tm, r);
  EXPECT_EQ(rig.ledger.backward(0), 2u);
  EXPECT_EQ(rig.ledger.forward(0), 3u);  // clean pass plus two gradients
  EXPECT_TRUE(is_feasible(x, rig.origin(0), rig.tm));
}

TEST(Init, FullBiasClimbsRunnerUpDirection) {
  const std::vector<double> x{0.6, 0.3, 0.1};
  double previous = direction_value(ref::identity_linear(3), x, 1, 0);
  for (int steps = 1; steps <= 3; ++steps) {
    ref::Rig rig(ref::identity_linear(3), one(x, 0, 3), 0.1);
    auto p = rig.probe(0);
    Rng r = p.rng(0, 2);
    const auto out = biased_odi_init(p, rig.origin(0), steps, 0.02, rig.tm, r, 1.0);
    const double v = direction_value(rig.model, out, 1, 0);
    EXPECT_GT(v, previous);
    previous = v;
  }
}

TEST(Init, ZeroBiasMatchesPlainOdi) {
  ref::Rig a(init_model(Architecture::mlp, 4, {6}, 3, Activation::tanh, 3), one({0.2, 0.4, 0.6, 0.8}, 1, 3), 0.1);
  ref::Rig b(init_model(Architecture::mlp, 4, {6}, 3, Activation::tanh, 3), one({0.2, 0.4, 0.6, 0.8}, 1, 3), 0.1);
  auto pa = a.probe(0);
  auto pb = b.probe(0);
  Rng ra = pa.rng(0, 2), rb = pb.rng(0, 2);
  EXPECT_EQ(odi_init(pa, a.origin(0), 3, 0.03, a.tm, ra), biased_odi_init(pb, b.origin(0), 3, 0.03, b.tm, rb, 0.0));
}

TEST(Init, OdiTinyEpsilonStaysAtInput) {
  ref::Rig rig(init_model(Architecture::mlp, 3, {5}, 3, Activation::tanh, 9), one({0.5, 0.5, 0.5}, 0, 3), 1e-9);
  auto p = rig.probe(0);
  Rng r = p.rng(0, 2);
  const auto out = odi_init(p, rig.origin(0), 2, 1e-9, rig.tm, r);
  EXPECT_LE(ref::max_abs_diff(out, rig.origin(0)), 1e-9 + 1e-15);
}

TEST(Init, OdiStopsOnSuccess) {
  ref::Rig rig(ref::diagonal_split(), one({0.49, 0.49}, 0, 2), 0.1);
  auto p = rig.probe(0);
  Rng r = p.rng(0, 2);
  biased_odi_init(p, rig.origin(0), 10, 0.1, rig.tm, r, 1.0);
  EXPECT_EQ(rig.ctx.state(0).status, SampleStatus::succeeded);
  EXPECT_EQ(rig.ledger.backward(0), 2u);
}

TEST(Init, BiasOutsideUnitRangeRejected) {
  ref::Rig rig(ref::identity_linear(3), one({0.5, 0.2, 0.1}, 0, 3), 0.1);
  auto p = rig.probe(0);
  Rng r(1);
  EXPECT_THROW(biased_odi_init(p, rig.origin(0), 1, 0.1, rig.tm, r, 1.5), ConfigError);
}

TEST(Init, RrtOnOwnImageStaysPut) {
  ref::Rig rig(ref::identity_linear(3), one({0.7, 0.2, 0.4}, 0, 3), 0.1);
  auto p = rig.probe(0);
  Rng r = p.rng(0, 3);
  const auto out = rrt_init(p, rig.origin(0), rig.origin(0), 2, 0.1, rig.tm, r);
  EXPECT_EQ(out, rig.origin(0));
  EXPECT_EQ(rig.ledger.backward(0), 2u);
  EXPECT_EQ(rig.ledger.forward(0), 4u);  // clean, target, two gradients
}

TEST(Init, RrtTargetQueryIsNotRecorded) {
  ref::Rig rig(ref::identity_linear(3), ref::batch_of({{0.7, 0.2, 0.4}, {0.1, 0.9, 0.2}}, {0, 1}, 3), 0.01);
  auto p = rig.probe(0);
  Rng r = p.rng(0, 3);
  const auto before = rig.ctx.state(0).trace.size();
  rrt_init(p, rig.origin(0), rig.origin(1), 0, 0.01, rig.tm, r);
  EXPECT_EQ(rig.ctx.state(0).trace.size(), before);
  EXPECT_EQ(rig.ctx.state(0).status, SampleStatus::active);
}

TEST(Init, RrtZeroLogitsFallBackToUniform) {
  DenseLayer zero(2, 2);
  ref::Rig rig(Model::linear(zero), ref::batch_of({{0.3, 0.3}, {0.6, 0.6}}, {0, 1}, 2), 0.1);
  auto p = rig.probe(1);
  Rng r = p.rng(0, 3);
  Rng copy = r;
  const auto out = rrt_init(p, rig.origin(1), rig.origin(0), 2, 0.1, rig.tm, r);
  EXPECT_EQ(out, uniform_init(rig.origin(1), rig.tm, copy));
}

TEST(Init, RrtTargetHasDifferentLabel) {
  const auto b = ref::batch_of({{0.1}, {0.2}, {0.3}, {0.4}}, {0, 0, 1, 0}, 2);
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng r(s);
    EXPECT_EQ(pick_rrt_target(b, 0, r), 2u);
  }
  const auto same = ref::batch_of({{0.1}, {0.2}}, {1, 1}, 2);
  Rng r(1);
  EXPECT_THROW(pick_rrt_target(same, 0, r), ConfigError);
}

TEST(Init, RestrictedOdiNeedsThreeClasses) {
  ref::Rig rig(ref::diagonal_split(), one({0.2, 0.2}, 0, 2), 0.1);
  auto p = rig.probe(0);
  Rng r(1);
  EXPECT_THROW(restricted_odi_init(p, rig.origin(0), 0.1, rig.tm, r), ConfigError);
}

TEST(Init, RestrictedOdiCostsTenOnRobustSample) {
  ref::Rig rig(ref::identity_linear(3), one({0.9, 0.1, 0.1}, 0, 3), 0.05);
  auto p = rig.probe(0);
  Rng r = p.rng(0, 2);
  restricted_odi_init(p, rig.origin(0), 0.025, rig.tm, r);
  EXPECT_EQ(rig.ledger.backward(0), 10u);
}

TEST(Init, MultiTargetPlanOrdersByLogit) {
  EXPECT_EQ(multi_target_plan(std::vector<double>{3, 1, 2, 0}, 0, 2), (std::vector<int>{2, 1}));
  EXPECT_EQ(multi_target_plan(std::vector<double>{1, 1, 1}, 1, 2), (std::vector<int>{0, 2}));
  EXPECT_EQ(multi_target_plan(std::vector<double>{0.5, 4, 1, 2}, 1, 3), (std::vector<int>{3, 2, 0}));
  EXPECT_THROW(multi_target_plan(std::vector<double>{1, 2, 3}, 0, 3), ConfigError);
}

TEST(Init, KindNamesRoundTrip) {
  for (auto k : {InitKind::none, InitKind::uniform, InitKind::odi, InitKind::biased_odi, InitKind::rrt,
                 InitKind::restricted_odi}) {
    EXPECT_EQ(init_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(init_kind_from_string("gaussian"), ConfigError);
}
