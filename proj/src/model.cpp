#include "advbench/model.hpp"

#include <cmath>
#include <limits>

#include "advbench/errors.hpp"
#include "advbench/rng.hpp"

namespace advbench {

namespace {

double to_float_precision(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

std::string to_string(Architecture a) { return a == Architecture::linear ? "linear" : "mlp"; }

std::string to_string(Activation a) {
  switch (a) {
    case Activation::none:
      return "none";
    case Activation::tanh:
      return "tanh";
    case Activation::relu:
      return "relu";
  }
  return "none";
}

Architecture architecture_from_string(const std::string& name) {
  if (name == "linear") return Architecture::linear;
  if (name == "mlp") return Architecture::mlp;
  throw ConfigError("unknown architecture '" + name + "'");
}

Activation activation_from_string(const std::string& name) {
  if (name == "none") return Activation::none;
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  throw ConfigError("unknown activation '" + name + "'");
}

Model::Model(Architecture arch, Activation act, std::vector<DenseLayer> layers)
    : arch_(arch), act_(act), layers_(std::move(layers)) {
  if (layers_.empty()) throw ConfigError("model needs at least one layer");
  if (arch_ == Architecture::linear) {
    if (layers_.size() != 1) throw ConfigError("a linear model has exactly one layer");
    act_ = Activation::none;
  } else {
    if (layers_.size() < 2 || layers_.size() > 3) throw ConfigError("an MLP has 1 or 2 hidden layers");
    if (act_ == Activation::none) throw ConfigError("an MLP needs an activation");
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    auto& layer = layers_[l];
    if (layer.inputs == 0 || layer.outputs == 0) throw ConfigError("layer with zero width");
    if (layer.weight.size() != layer.inputs * layer.outputs || layer.bias.size() != layer.outputs) {
      throw ConfigError("layer storage does not match its shape");
    }
    if (l > 0 && layers_[l - 1].outputs != layer.inputs) throw ConfigError("layer widths do not chain");
    for (double& v : layer.weight) v = to_float_precision(v);
    for (double& v : layer.bias) v = to_float_precision(v);
    for (double v : layer.weight) {
      if (!std::isfinite(v)) throw ConfigError("non-finite weight");
    }
    for (double v : layer.bias) {
      if (!std::isfinite(v)) throw ConfigError("non-finite bias");
    }
  }
  if (num_classes() < 2) throw ConfigError("a classifier needs at least 2 classes");
}

// Copies start with fresh shadow counters.
Model::Model(const Model& other) : arch_(other.arch_), act_(other.act_), layers_(other.layers_) {}

Model& Model::operator=(const Model& other) {
  arch_ = other.arch_;
  act_ = other.act_;
  layers_ = other.layers_;
  reset_call_counts();
  return *this;
}

void Model::check_input(std::span<const double> x) const {
  if (x.size() != input_dim()) {
    throw ConfigError("input dimension " + std::to_string(x.size()) + " does not match model input " +
                      std::to_string(input_dim()));
  }
}

double Model::activate(double v) const {
  switch (act_) {
    case Activation::tanh:
      return std::tanh(v);
    case Activation::relu:
      return v > 0.0 ? v : 0.0;
    case Activation::none:
      break;
  }
  return v;
}

double Model::activate_derivative(double pre) const {
  switch (act_) {
    case Activation::tanh: {
      const double t = std::tanh(pre);
      return 1.0 - t * t;
    }
    case Activation::relu:
      return pre > 0.0 ? 1.0 : 0.0;
    case Activation::none:
      break;
  }
  return 1.0;
}

ForwardTrace Model::trace(std::span<const double> x) const {
  check_input(x);
  forward_calls_.fetch_add(1, std::memory_order_relaxed);
  ForwardTrace t;
  t.activations.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    const auto& in = t.activations.back();
    std::vector<double> pre(layer.outputs);
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      double acc = layer.bias[o];
      const double* w = layer.weight.data() + o * layer.inputs;
      for (std::size_t i = 0; i < layer.inputs; ++i) acc += w[i] * in[i];
      pre[o] = acc;
    }
    if (l + 1 < layers_.size()) {
      std::vector<double> post(pre.size());
      for (std::size_t o = 0; o < pre.size(); ++o) post[o] = activate(pre[o]);
      t.activations.push_back(std::move(post));
    }
    t.preactivations.push_back(std::move(pre));
  }
  return t;
}

std::vector<double> Model::logits(std::span<const double> x) const {
  auto t = trace(x);
  return std::move(t.preactivations.back());
}

Logits Model::forward(const ImageBatch& batch) const {
  if (batch.dim != input_dim()) throw ConfigError("batch dimension does not match model input");
  Logits out;
  out.rows = batch.rows;
  out.num_classes = num_classes();
  out.values.reserve(batch.rows * num_classes());
  for (std::size_t i = 0; i < batch.rows; ++i) {
    const auto z = logits(batch.row(i));
    out.values.insert(out.values.end(), z.begin(), z.end());
  }
  return out;
}

std::vector<double> Model::backward(const ForwardTrace& t, std::span<const double> grad_logits) const {
  if (grad_logits.size() != num_classes()) throw ConfigError("logit gradient has wrong length");
  backward_calls_.fetch_add(1, std::memory_order_relaxed);
  std::vector<double> delta(grad_logits.begin(), grad_logits.end());
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& layer = layers_[l];
    std::vector<double> g(layer.inputs, 0.0);
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* w = layer.weight.data() + o * layer.inputs;
      for (std::size_t i = 0; i < layer.inputs; ++i) g[i] += w[i] * d;
    }
    if (l > 0) {
      const auto& pre = t.preactivations[l - 1];
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= activate_derivative(pre[i]);
    }
    delta = std::move(g);
  }
  return delta;
}

std::vector<DenseLayer> Model::parameter_gradient(const ForwardTrace& t,
                                                  std::span<const double> grad_logits) const {
  backward_calls_.fetch_add(1, std::memory_order_relaxed);
  std::vector<DenseLayer> grads;
  grads.reserve(layers_.size());
  for (const auto& layer : layers_) grads.emplace_back(layer.inputs, layer.outputs);
  std::vector<double> delta(grad_logits.begin(), grad_logits.end());
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& layer = layers_[l];
    const auto& in = t.activations[l];
    auto& gl = grads[l];
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      gl.bias[o] = delta[o];
      for (std::size_t i = 0; i < layer.inputs; ++i) gl.weight[o * layer.inputs + i] = delta[o] * in[i];
    }
    if (l == 0) break;
    std::vector<double> g(layer.inputs, 0.0);
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      const double* w = layer.weight.data() + o * layer.inputs;
      for (std::size_t i = 0; i < layer.inputs; ++i) g[i] += w[i] * delta[o];
    }
    const auto& pre = t.preactivations[l - 1];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= activate_derivative(pre[i]);
    delta = std::move(g);
  }
  return grads;
}

GradientEval Model::input_gradient(std::span<const double> x, const LossSpec& loss, int label) const {
  const auto t = trace(x);
  const auto lv = evaluate_loss(loss, t.logits(), label);
  GradientEval out;
  out.grad = backward(t, lv.grad);
  out.logits.assign(t.logits().begin(), t.logits().end());
  out.loss = lv.value;
  out.degenerate = lv.degenerate;
  return out;
}

double Model::loss_value(std::span<const double> x, const LossSpec& loss, int label) const {
  const auto z = logits(x);
  return evaluate_loss(loss, z, label).value;
}

double Model::kink_distance(std::span<const double> x) const {
  if (act_ != Activation::relu) return std::numeric_limits<double>::infinity();
  const auto t = trace(x);
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l + 1 < t.preactivations.size(); ++l) {
    for (double v : t.preactivations[l]) d = std::min(d, std::abs(v));
  }
  return d;
}

CallCounts Model::call_counts() const {
  return {forward_calls_.load(), backward_calls_.load()};
}

void Model::reset_call_counts() const {
  forward_calls_.store(0);
  backward_calls_.store(0);
}

std::vector<double> fd_gradient(const Model& model, std::span<const double> x, const LossSpec& loss,
                                int label, double h) {
  if (!(h > 0.0)) throw ConfigError("finite-difference step must be positive");
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    probe[k] = x[k] + h;
    const double up = model.loss_value(probe, loss, label);
    probe[k] = x[k] - h;
    const double down = model.loss_value(probe, loss, label);
    probe[k] = x[k];
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

Model init_model(Architecture arch, std::size_t input_dim, std::vector<std::size_t> hidden,
                 std::size_t num_classes, Activation act, std::uint64_t seed) {
  if (arch == Architecture::linear) hidden.clear();
  std::vector<std::size_t> widths{input_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(num_classes);
  Rng rng(seed, 0, 0, stream::training);
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer(widths[l], widths[l + 1]);
    const double a = std::sqrt(6.0 / static_cast<double>(widths[l] + widths[l + 1]));
    for (double& w : layer.weight) w = rng.uniform(-a, a);
    layers.push_back(std::move(layer));
  }
  return Model(arch, arch == Architecture::linear ? Activation::none : act, std::move(layers));
}

}  // namespace advbench
