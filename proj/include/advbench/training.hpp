#pragma once

#include <cstdint>
#include <vector>

#include "advbench/batch.hpp"
#include "advbench/model.hpp"

namespace advbench {

struct TrainConfig {
  std::size_t epochs = 50;
  /// PGD steps used to craft each training example; 0 trains on clean data.
  std::size_t pgd_steps = 7;
  double epsilon = 8.0 / 255.0;
  double lr = 0.05;
  double momentum = 0.9;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden{32};
  Activation activation = Activation::tanh;
};

/// PGD adversarial training with cross-entropy. Deterministic in the seed.
/// Throws TrainingError on a non-finite loss.
Model train_tiny_defense(Architecture arch, const ImageBatch& data, const TrainConfig& config);

/// Fraction of rows classified correctly.
double clean_accuracy(const Model& model, const ImageBatch& data);

/// Accuracy under the PGD attack used for training (cross-entropy, uniform
/// start, step 2.5*eps/steps). Unmetered; for training diagnostics.
double pgd_accuracy(const Model& model, const ImageBatch& data, double epsilon, std::size_t steps,
                    std::uint64_t seed);

}  // namespace advbench
