#include <gtest/gtest.h>

#include "advbench/synthetic.hpp"
#include "advbench/training.hpp"

using namespace advbench;

namespace {

ImageBatch separable_blobs() {
  BlobSpec spec;
  spec.rows = 200;
  spec.dim = 2;
  spec.classes = 2;
  spec.spread = 0.05;
  spec.center_low = 0.2;
  spec.center_high = 0.8;
  spec.seed = 12;
  return gaussian_blobs(spec);
}

}  // namespace

TEST(Training, ZeroEpochsReturnsInitialisedModel) {
  const auto data = separable_blobs();
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.seed = 3;
  cfg.hidden = {8};
  const auto m = train_tiny_defense(Architecture::mlp, data, cfg);
  const auto init = init_model(Architecture::mlp, 2, {8}, 2, Activation::tanh, 3);
  for (std::size_t l = 0; l < m.layers().size(); ++l) {
    EXPECT_EQ(m.layers()[l].weight, init.layers()[l].weight);
    EXPECT_EQ(m.layers()[l].bias, init.layers()[l].bias);
  }
}

TEST(Training, SeparableBlobsReachHighCleanAccuracy) {
  const auto data = separable_blobs();
  TrainConfig cfg;
  cfg.seed = 1;
  cfg.hidden = {16};
  const auto m = train_tiny_defense(Architecture::mlp, data, cfg);
  EXPECT_GE(clean_accuracy(m, data), 0.95);
}

TEST(Training, IsDeterministic) {
  const auto data = separable_blobs();
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 7;
  cfg.hidden = {8};
  const auto a = train_tiny_defense(Architecture::mlp, data, cfg);
  const auto b = train_tiny_defense(Architecture::mlp, data, cfg);
  for (std::size_t l = 0; l < a.layers().size(); ++l) EXPECT_EQ(a.layers()[l].weight, b.layers()[l].weight);
}

TEST(Training, AdversarialTrainingImprovesRobustAccuracy) {
  BlobSpec spec;
  spec.rows = 200;
  spec.dim = 2;
  spec.classes = 2;
  spec.spread = 0.08;
  spec.seed = 21;
  const auto data = gaussian_blobs(spec);
  TrainConfig cfg;
  cfg.seed = 2;
  cfg.hidden = {16};
  cfg.epsilon = 0.05;
  cfg.epochs = 0;
  const auto before = train_tiny_defense(Architecture::mlp, data, cfg);
  cfg.epochs = 40;
  const auto after = train_tiny_defense(Architecture::mlp, data, cfg);
  EXPECT_GT(pgd_accuracy(after, data, 0.05, 10, 1), pgd_accuracy(before, data, 0.05, 10, 1));
}
