#include "advbench/training.hpp"

#include <cmath>
#include <numeric>

#include "advbench/errors.hpp"
#include "advbench/rng.hpp"
#include "advbench/threat.hpp"

namespace advbench {

namespace {

/// Cross-entropy PGD from a uniform start; plain model calls, no ledger.
std::vector<double> craft_example(const Model& model, std::span<const double> x, int label, double epsilon,
                                  std::size_t steps, Rng& rng) {
  std::vector<double> adv(x.begin(), x.end());
  if (steps == 0 || epsilon == 0.0) return adv;
  const ThreatModel tm(epsilon);
  for (double& v : adv) v += rng.uniform(-epsilon, epsilon);
  project_inplace(adv, x, tm);
  const double alpha = 2.5 * epsilon / static_cast<double>(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    const auto g = model.input_gradient(adv, LossSpec::cross_entropy(), label);
    for (std::size_t k = 0; k < adv.size(); ++k) {
      adv[k] += alpha * static_cast<double>((g.grad[k] > 0.0) - (g.grad[k] < 0.0));
    }
    project_inplace(adv, x, tm);
  }
  return adv;
}

}  // namespace

Model train_tiny_defense(Architecture arch, const ImageBatch& data, const TrainConfig& config) {
  if (data.empty()) throw ConfigError("training set is empty");
  data.validate();
  if (config.batch_size == 0) throw ConfigError("batch size must be positive");
  Model init = init_model(arch, data.dim, config.hidden, data.num_classes, config.activation, config.seed);
  if (config.epochs == 0) return init;

  const Activation act = init.activation();
  std::vector<DenseLayer> master = init.layers();
  std::vector<DenseLayer> velocity;
  for (const auto& layer : master) velocity.emplace_back(layer.inputs, layer.outputs);

  std::vector<std::size_t> order(data.rows);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle(config.seed, epoch, 0, stream::training);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const Model current(arch, act, master);
      std::vector<DenseLayer> grad;
      for (const auto& layer : master) grad.emplace_back(layer.inputs, layer.outputs);
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t i = order[b];
        Rng rng(config.seed, i, epoch + 1, stream::training);
        const auto x = craft_example(current, data.row(i), data.labels[i], config.epsilon, config.pgd_steps, rng);
        const auto t = current.trace(x);
        const auto lv = evaluate_loss(LossSpec::cross_entropy(), t.logits(), data.labels[i]);
        if (!std::isfinite(lv.value)) throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch));
        const auto g = current.parameter_gradient(t, lv.grad);
        for (std::size_t l = 0; l < g.size(); ++l) {
          for (std::size_t k = 0; k < g[l].weight.size(); ++k) grad[l].weight[k] += g[l].weight[k];
          for (std::size_t k = 0; k < g[l].bias.size(); ++k) grad[l].bias[k] += g[l].bias[k];
        }
      }
      const double scale = 1.0 / static_cast<double>(stop - start);
      for (std::size_t l = 0; l < master.size(); ++l) {
        for (std::size_t k = 0; k < master[l].weight.size(); ++k) {
          velocity[l].weight[k] = config.momentum * velocity[l].weight[k] + scale * grad[l].weight[k];
          master[l].weight[k] -= config.lr * velocity[l].weight[k];
        }
        for (std::size_t k = 0; k < master[l].bias.size(); ++k) {
          velocity[l].bias[k] = config.momentum * velocity[l].bias[k] + scale * grad[l].bias[k];
          master[l].bias[k] -= config.lr * velocity[l].bias[k];
        }
      }
      for (const auto& layer : master) {
        for (double v : layer.weight) {
          if (!std::isfinite(v)) throw TrainingError("weights diverged at epoch " + std::to_string(epoch));
        }
      }
    }
  }
  return Model(arch, act, std::move(master));
}

double clean_accuracy(const Model& model, const ImageBatch& data) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.rows; ++i) {
    if (!misclassified(model.logits(data.row(i)), data.labels[i])) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.rows);
}

double pgd_accuracy(const Model& model, const ImageBatch& data, double epsilon, std::size_t steps,
                    std::uint64_t seed) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.rows; ++i) {
    Rng rng(seed, i, 0, stream::uniform_start);
    const auto x = craft_example(model, data.row(i), data.labels[i], epsilon, steps, rng);
    if (!misclassified(model.logits(x), data.labels[i])) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.rows);
}

}  // namespace advbench
