#include "advbench/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "advbench/batch.hpp"
#include "advbench/errors.hpp"

namespace advbench {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct KindName {
  LossKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {LossKind::cross_entropy, "cross_entropy"},
    {LossKind::margin, "margin"},
    {LossKind::margin_targeted, "margin_targeted"},
    {LossKind::dlr, "dlr"},
    {LossKind::dlr_targeted, "dlr_targeted"},
    {LossKind::lafeat, "lafeat"},
    {LossKind::lafeat_targeted, "lafeat_targeted"},
    {LossKind::md_phase, "md_phase"},
    {LossKind::rrt_cosine, "rrt_cosine"},
    {LossKind::output_direction, "output_direction"},
};

std::vector<double> softmax(std::span<const double> v) {
  const double top = *std::max_element(v.begin(), v.end());
  std::vector<double> p(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    p[i] = std::exp(v[i] - top);
    sum += p[i];
  }
  for (double& x : p) x /= sum;
  return p;
}

/// Class indices sorted by logit descending; ties keep the lower index first.
std::vector<std::size_t> descending_order(std::span<const double> z) {
  std::vector<std::size_t> order(z.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return z[a] > z[b]; });
  return order;
}

/// Gap between the best and second-best wrong logits. Infinity when fewer
/// than two wrong classes exist.
double wrong_class_gap(std::span<const double> z, int label) {
  double first = -kInf, second = -kInf;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (static_cast<int>(i) == label) continue;
    if (z[i] > first) {
      second = first;
      first = z[i];
    } else if (z[i] > second) {
      second = z[i];
    }
  }
  return std::isinf(second) ? kInf : first - second;
}

/// Smallest adjacent gap among the `depth` largest logits.
double top_order_gap(std::span<const double> z, std::size_t depth) {
  std::vector<double> sorted(z.begin(), z.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double gap = kInf;
  const std::size_t limit = std::min(depth, sorted.size() - 1);
  for (std::size_t i = 0; i < limit; ++i) gap = std::min(gap, sorted[i] - sorted[i + 1]);
  return gap;
}

void require_target(const LossSpec& s) {
  if (s.targets.size() != 1) throw ConfigError(to_string(s.kind) + " needs exactly one target");
}

LossValue eval_cross_entropy(std::span<const double> z, int y) {
  LossValue out;
  out.value = log_sum_exp(z) - z[y];
  out.grad = softmax(z);
  out.grad[y] -= 1.0;
  return out;
}

LossValue eval_margin(std::span<const double> z, int y) {
  LossValue out;
  const std::size_t j = best_wrong_class(z, y);
  out.value = z[j] - z[y];
  out.grad.assign(z.size(), 0.0);
  out.grad[j] += 1.0;
  out.grad[y] -= 1.0;
  return out;
}

LossValue eval_margin_targeted(std::span<const double> z, int y, const std::vector<int>& targets) {
  LossValue out;
  out.grad.assign(z.size(), 0.0);
  for (int t : targets) {
    out.value += z[t] - z[y];
    out.grad[t] += 1.0;
    out.grad[y] -= 1.0;
  }
  return out;
}

LossValue eval_dlr(std::span<const double> z, int y) {
  if (z.size() < 3) throw ConfigError("DLR loss needs at least 3 classes");
  const auto order = descending_order(z);
  const std::size_t j = best_wrong_class(z, y);
  const double num = z[y] - z[j];
  const double den = z[order[0]] - z[order[2]] + kDlrStabilizer;
  LossValue out;
  out.value = -num / den;
  out.grad.assign(z.size(), 0.0);
  out.grad[y] -= 1.0 / den;
  out.grad[j] += 1.0 / den;
  const double k = num / (den * den);
  out.grad[order[0]] += k;
  out.grad[order[2]] -= k;
  return out;
}

LossValue eval_dlr_targeted(std::span<const double> z, int y, int t) {
  if (z.size() < 4) throw ConfigError("targeted DLR loss needs at least 4 classes");
  const auto order = descending_order(z);
  const double num = z[y] - z[t];
  const double den = z[order[0]] - 0.5 * (z[order[2]] + z[order[3]]) + kDlrStabilizer;
  LossValue out;
  out.value = -num / den;
  out.grad.assign(z.size(), 0.0);
  out.grad[y] -= 1.0 / den;
  out.grad[t] += 1.0 / den;
  const double k = num / (den * den);
  out.grad[order[0]] += k;
  out.grad[order[2]] -= 0.5 * k;
  out.grad[order[3]] -= 0.5 * k;
  return out;
}

/// Shared body of both LAFEAT forms. The logits are divided by
/// scale * m, m = z_y - max_{i != y} z_i; then softmax cross-entropy against
/// `cls` is taken, negated for the targeted form.
LossValue eval_lafeat_common(std::span<const double> z, int y, int cls, double scale, bool negate) {
  const std::size_t j = best_wrong_class(z, y);
  double m = z[y] - z[j];
  LossValue out;
  if (m <= 0.0) {
    out.degenerate = true;
    m = std::max(m, kLafeatMarginFloor);
  }
  std::vector<double> v(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) v[i] = z[i] / (scale * m);
  const double sce = log_sum_exp(v) - v[cls];
  std::vector<double> s = softmax(v);
  s[cls] -= 1.0;  // d sce / d v
  const double sign = negate ? -1.0 : 1.0;
  out.value = sign * sce;
  double sv = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) sv += s[i] * v[i];
  out.grad.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out.grad[i] = sign * s[i] / (scale * m);
  out.grad[y] -= sign * sv / m;
  out.grad[j] += sign * sv / m;
  return out;
}

LossValue eval_md_phase(std::span<const double> z, int y, const LossSpec& s) {
  const bool first_half = 2 * s.step < s.steps_per_restart;
  if (!first_half) return eval_margin(z, y);
  LossValue out;
  out.grad.assign(z.size(), 0.0);
  if (s.restart % 2 == 0) {
    const std::size_t j = best_wrong_class(z, y);
    out.value = z[j];
    out.grad[j] = 1.0;
  } else {
    out.value = -z[y];
    out.grad[y] = -1.0;
  }
  return out;
}

LossValue eval_rrt_cosine(std::span<const double> z, std::span<const double> ref) {
  LossValue out;
  out.grad.assign(z.size(), 0.0);
  const double nz = std::sqrt(std::inner_product(z.begin(), z.end(), z.begin(), 0.0));
  const double nr = std::sqrt(std::inner_product(ref.begin(), ref.end(), ref.begin(), 0.0));
  if (nz == 0.0 || nr == 0.0) {
    out.degenerate = true;
    return out;
  }
  const double c = std::inner_product(z.begin(), z.end(), ref.begin(), 0.0) / (nz * nr);
  out.value = c;
  // Parallel directions sit at the maximum; report the exact zero gradient
  // rather than rounding noise so a signed step stays put.
  bool parallel = true;
  for (std::size_t i = 0; i < z.size() && parallel; ++i) parallel = z[i] / nz == ref[i] / nr;
  if (parallel) {
    out.value = 1.0;
    return out;
  }
  for (std::size_t i = 0; i < z.size(); ++i) out.grad[i] = ref[i] / (nz * nr) - c * z[i] / (nz * nz);
  return out;
}

}  // namespace

std::string to_string(LossKind kind) {
  for (const auto& kn : kKindNames) {
    if (kn.kind == kind) return kn.name;
  }
  return "unknown";
}

LossKind loss_kind_from_string(const std::string& name) {
  for (const auto& kn : kKindNames) {
    if (name == kn.name) return kn.kind;
  }
  throw ConfigError("unknown loss kind '" + name + "'");
}

LossSpec LossSpec::margin_targeted(std::vector<int> targets) {
  LossSpec s = with(LossKind::margin_targeted);
  s.targets = std::move(targets);
  return s;
}

LossSpec LossSpec::dlr_targeted(int target) {
  LossSpec s = with(LossKind::dlr_targeted);
  s.targets = {target};
  return s;
}

LossSpec LossSpec::lafeat_targeted(int target, double temperature) {
  LossSpec s = with(LossKind::lafeat_targeted);
  s.targets = {target};
  s.temperature = temperature;
  return s;
}

LossSpec LossSpec::md_phase(int step, int steps_per_restart, int restart) {
  LossSpec s = with(LossKind::md_phase);
  s.step = step;
  s.steps_per_restart = steps_per_restart;
  s.restart = restart;
  return s;
}

LossSpec LossSpec::rrt_cosine(std::vector<double> reference_logits) {
  LossSpec s = with(LossKind::rrt_cosine);
  s.reference = std::move(reference_logits);
  return s;
}

LossSpec LossSpec::output_direction(std::vector<double> direction) {
  LossSpec s = with(LossKind::output_direction);
  s.reference = std::move(direction);
  return s;
}

void LossSpec::validate(std::size_t num_classes, int label) const {
  if (num_classes < 2) throw ConfigError("losses need at least 2 classes");
  if (label < 0 || static_cast<std::size_t>(label) >= num_classes) throw ConfigError("label out of range");
  const bool targeted = kind == LossKind::margin_targeted || kind == LossKind::dlr_targeted ||
                        kind == LossKind::lafeat_targeted;
  if (targeted != !targets.empty()) throw ConfigError("targets are required exactly for targeted losses");
  std::set<int> seen;
  for (int t : targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= num_classes) throw ConfigError("target class out of range");
    if (t == label) throw ConfigError("target class equals the true label");
    if (!seen.insert(t).second) throw ConfigError("duplicate target class");
  }
  switch (kind) {
    case LossKind::dlr:
      if (num_classes < 3) throw ConfigError("DLR loss needs at least 3 classes");
      break;
    case LossKind::dlr_targeted:
      require_target(*this);
      if (num_classes < 4) throw ConfigError("targeted DLR loss needs at least 4 classes");
      break;
    case LossKind::lafeat_targeted:
      require_target(*this);
      if (!(temperature > 0.0)) throw ConfigError("LAFEAT temperature must be positive");
      break;
    case LossKind::md_phase:
      if (steps_per_restart < 1 || step < 0 || step >= steps_per_restart || restart < 1) {
        throw ConfigError("md_phase needs 0 <= k < K and r >= 1");
      }
      break;
    case LossKind::rrt_cosine:
    case LossKind::output_direction:
      if (reference.size() != num_classes) throw ConfigError(to_string(kind) + " reference has wrong length");
      break;
    default:
      break;
  }
}

LossValue evaluate_loss(const LossSpec& spec, std::span<const double> z, int y) {
  switch (spec.kind) {
    case LossKind::cross_entropy:
      return eval_cross_entropy(z, y);
    case LossKind::margin:
      return eval_margin(z, y);
    case LossKind::margin_targeted:
      return eval_margin_targeted(z, y, spec.targets);
    case LossKind::dlr:
      return eval_dlr(z, y);
    case LossKind::dlr_targeted:
      require_target(spec);
      return eval_dlr_targeted(z, y, spec.targets.front());
    case LossKind::lafeat:
      return eval_lafeat_common(z, y, y, 1.0, false);
    case LossKind::lafeat_targeted:
      require_target(spec);
      return eval_lafeat_common(z, y, spec.targets.front(), spec.temperature, true);
    case LossKind::md_phase:
      return eval_md_phase(z, y, spec);
    case LossKind::rrt_cosine:
      return eval_rrt_cosine(z, spec.reference);
    case LossKind::output_direction: {
      LossValue out;
      out.value = std::inner_product(z.begin(), z.end(), spec.reference.begin(), 0.0);
      out.grad = spec.reference;
      return out;
    }
  }
  throw ConfigError("unhandled loss kind");
}

double selection_gap(const LossSpec& spec, std::span<const double> z, int y) {
  switch (spec.kind) {
    case LossKind::cross_entropy:
    case LossKind::margin_targeted:
    case LossKind::output_direction:
      return kInf;
    case LossKind::rrt_cosine: {
      const double nz = std::sqrt(std::inner_product(z.begin(), z.end(), z.begin(), 0.0));
      return nz;
    }
    case LossKind::margin:
      return wrong_class_gap(z, y);
    case LossKind::md_phase:
      return (2 * spec.step < spec.steps_per_restart && spec.restart % 2 == 1) ? kInf : wrong_class_gap(z, y);
    case LossKind::lafeat:
    case LossKind::lafeat_targeted: {
      const double m = z[y] - z[best_wrong_class(z, y)];
      return std::min(m, wrong_class_gap(z, y));
    }
    case LossKind::dlr:
      return std::min(wrong_class_gap(z, y), top_order_gap(z, 3));
    case LossKind::dlr_targeted:
      return top_order_gap(z, 4);
  }
  return 0.0;
}

double log_sum_exp(std::span<const double> v) {
  const double top = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - top);
  return top + std::log(sum);
}

double cross_entropy(std::span<const double> z, int label) { return eval_cross_entropy(z, label).value; }

double margin_loss(std::span<const double> z, int label) {
  return z[best_wrong_class(z, label)] - z[label];
}

double dlr_loss(std::span<const double> z, int label) { return eval_dlr(z, label).value; }

double lafeat_loss(std::span<const double> z, int label) {
  return eval_lafeat_common(z, label, label, 1.0, false).value;
}

double lafeat_targeted(std::span<const double> z, int label, int target, double temperature) {
  return eval_lafeat_common(z, label, target, temperature, true).value;
}

double md_phase_loss(std::span<const double> z, int label, int step, int steps_per_restart, int restart) {
  return eval_md_phase(z, label, LossSpec::md_phase(step, steps_per_restart, restart)).value;
}

double rrt_cosine(std::span<const double> z, std::span<const double> reference) {
  return eval_rrt_cosine(z, reference).value;
}

}  // namespace advbench
