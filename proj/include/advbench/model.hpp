#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "advbench/batch.hpp"
#include "advbench/losses.hpp"

namespace advbench {

enum class Architecture { linear, mlp };
enum class Activation { none, tanh, relu };

std::string to_string(Architecture a);
std::string to_string(Activation a);
Architecture architecture_from_string(const std::string& name);
Activation activation_from_string(const std::string& name);

/// Affine map. weight is (outputs x inputs), row-major.
struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weight;
  std::vector<double> bias;

  DenseLayer() = default;
  DenseLayer(std::size_t in, std::size_t out)
      : inputs(in), outputs(out), weight(in * out, 0.0), bias(out, 0.0) {}

  double& w(std::size_t o, std::size_t i) { return weight[o * inputs + i]; }
  double w(std::size_t o, std::size_t i) const { return weight[o * inputs + i]; }
};

/// Intermediate values of one forward pass, kept for backprop.
struct ForwardTrace {
  std::vector<std::vector<double>> activations;     // activations[0] is the input
  std::vector<std::vector<double>> preactivations;  // one per layer; the last is the logits
  std::span<const double> logits() const { return preactivations.back(); }
};

struct CallCounts {
  std::uint64_t forward = 0;
  std::uint64_t backward = 0;
};

/// Result of one metered gradient query.
struct GradientEval {
  std::vector<double> logits;
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d x
  bool degenerate = false;
};

/// A linear classifier or an MLP with 1-2 hidden layers. Weights are held
/// at float32 precision so a bundle round trip is exact. Immutable after
/// construction apart from the shadow call counters, which count every
/// forward and backward pass independently of any budget ledger.
///
/// MLP kink set: tanh has none; relu is non-differentiable where a hidden
/// pre-activation is exactly zero.
class Model {
 public:
  Model(Architecture arch, Activation act, std::vector<DenseLayer> layers);
  Model(const Model& other);
  Model& operator=(const Model& other);

  static Model linear(DenseLayer layer) { return Model(Architecture::linear, Activation::none, {std::move(layer)}); }
  static Model mlp(std::vector<DenseLayer> layers, Activation act) { return Model(Architecture::mlp, act, std::move(layers)); }

  Architecture architecture() const { return arch_; }
  Activation activation() const { return act_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::size_t input_dim() const { return layers_.front().inputs; }
  std::size_t num_classes() const { return layers_.back().outputs; }

  std::vector<double> logits(std::span<const double> x) const;
  /// One forward per row. Throws ConfigError on a dimension mismatch.
  Logits forward(const ImageBatch& batch) const;

  ForwardTrace trace(std::span<const double> x) const;
  /// Vector-Jacobian product: d loss / d x given d loss / d logits.
  std::vector<double> backward(const ForwardTrace& t, std::span<const double> grad_logits) const;
  /// d loss / d weights, same layout as layers().
  std::vector<DenseLayer> parameter_gradient(const ForwardTrace& t,
                                             std::span<const double> grad_logits) const;

  /// One forward and one backward pass.
  GradientEval input_gradient(std::span<const double> x, const LossSpec& loss, int label) const;
  double loss_value(std::span<const double> x, const LossSpec& loss, int label) const;

  /// Smallest |pre-activation| over hidden units; distance to the relu kink
  /// set. Infinity for tanh and linear models.
  double kink_distance(std::span<const double> x) const;

  CallCounts call_counts() const;
  void reset_call_counts() const;

 private:
  void check_input(std::span<const double> x) const;
  double activate(double v) const;
  double activate_derivative(double pre) const;

  Architecture arch_;
  Activation act_;
  std::vector<DenseLayer> layers_;
  mutable std::atomic<std::uint64_t> forward_calls_{0};
  mutable std::atomic<std::uint64_t> backward_calls_{0};
};

/// Central differences of the loss, one coordinate at a time. Test and
/// verification path only; never charged to a ledger.
std::vector<double> fd_gradient(const Model& model, std::span<const double> x,
                                const LossSpec& loss, int label, double h);

/// Xavier-uniform weights and zero biases from a seed.
Model init_model(Architecture arch, std::size_t input_dim, std::vector<std::size_t> hidden,
                 std::size_t num_classes, Activation act, std::uint64_t seed);

}  // namespace advbench
