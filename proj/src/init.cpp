#include "advbench/init.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "advbench/errors.hpp"

namespace advbench {

std::string to_string(InitKind kind) {
  switch (kind) {
    case InitKind::none:
      return "none";
    case InitKind::uniform:
      return "uniform";
    case InitKind::odi:
      return "odi";
    case InitKind::biased_odi:
      return "biased_odi";
    case InitKind::rrt:
      return "rrt";
    case InitKind::restricted_odi:
      return "restricted_odi";
  }
  return "none";
}

InitKind init_kind_from_string(const std::string& name) {
  for (auto k : {InitKind::none, InitKind::uniform, InitKind::odi, InitKind::biased_odi, InitKind::rrt,
                 InitKind::restricted_odi}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown init '" + name + "'");
}

std::vector<double> uniform_init(std::span<const double> x, const ThreatModel& tm, Rng& rng) {
  std::vector<double> out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double lo = std::max(tm.box_low, x[k] - tm.epsilon);
    const double hi = std::min(tm.box_high, x[k] + tm.epsilon);
    out[k] = rng.uniform(lo, hi);
  }
  project_inplace(out, x, tm);
  return out;
}

namespace {

std::vector<double> ascend_direction(SampleProbe& probe, std::vector<double> x, const LossSpec& loss, int steps,
                                     double alpha, const ThreatModel& tm) {
  for (int s = 0; s < steps; ++s) {
    if (!probe.active()) break;
    auto g = probe.gradient(x, loss);
    if (!g || !probe.active()) break;
    signed_step(x, g->grad, alpha, probe.origin(), tm);
  }
  return x;
}

std::vector<double> random_direction(std::size_t classes, Rng& rng) {
  std::vector<double> w(classes);
  for (auto& v : w) v = rng.uniform(-1.0, 1.0);
  return w;
}

}  // namespace

std::vector<double> odi_init(SampleProbe& probe, std::vector<double> start, int steps, double alpha,
                             const ThreatModel& tm, Rng& rng) {
  auto w = random_direction(probe.num_classes(), rng);
  return ascend_direction(probe, std::move(start), LossSpec::output_direction(std::move(w)), steps, alpha, tm);
}

std::vector<double> biased_odi_init(SampleProbe& probe, std::vector<double> start, int steps, double alpha,
                                    const ThreatModel& tm, Rng& rng, double bias) {
  if (bias < 0.0 || bias > 1.0) throw ConfigError("ODI bias must lie in [0,1]");
  auto w = random_direction(probe.num_classes(), rng);
  const auto& clean = probe.state().clean_logits;
  if (!clean.empty()) {
    for (auto& v : w) v *= 1.0 - bias;
    w[best_wrong_class(clean, probe.label())] += bias;
    w[static_cast<std::size_t>(probe.label())] -= bias;
  }
  return ascend_direction(probe, std::move(start), LossSpec::output_direction(std::move(w)), steps, alpha, tm);
}

std::vector<double> rrt_init(SampleProbe& probe, std::vector<double> start, std::span<const double> target_image,
                             int steps, double alpha, const ThreatModel& tm, Rng& rng) {
  auto zt = probe.forward(target_image, false);
  double norm = 0.0;
  if (zt) {
    for (double v : *zt) norm += v * v;
  }
  if (!zt || norm == 0.0) return uniform_init(probe.origin(), tm, rng);
  const LossSpec loss = LossSpec::rrt_cosine(*zt);
  std::vector<double> x = std::move(start);
  for (int s = 0; s < steps; ++s) {
    if (!probe.active()) break;
    auto g = probe.gradient(x, loss);
    if (!g || !probe.active()) break;
    if (g->degenerate) return uniform_init(probe.origin(), tm, rng);
    signed_step(x, g->grad, alpha, probe.origin(), tm);
  }
  return x;
}

std::size_t pick_rrt_target(const ImageBatch& batch, std::size_t i, Rng& rng) {
  std::vector<std::size_t> pool;
  for (std::size_t j = 0; j < batch.rows; ++j) {
    if (batch.labels[j] != batch.labels[i]) pool.push_back(j);
  }
  if (pool.empty()) throw ConfigError("RRT needs an image with a different label in the batch");
  return pool[rng.below(pool.size())];
}

std::vector<double> restricted_odi_init(SampleProbe& probe, std::vector<double> start, double alpha,
                                        const ThreatModel& tm, Rng& rng, int odi_steps, int mt_steps) {
  if (probe.num_classes() < 3) throw ConfigError("restricted ODI needs at least 3 classes");
  const auto& clean = probe.state().clean_logits;
  auto targets = multi_target_plan(clean, probe.label(), 2);
  auto x = odi_init(probe, std::move(start), odi_steps, alpha, tm, rng);
  return ascend_direction(probe, std::move(x), LossSpec::margin_targeted(std::move(targets)), mt_steps, alpha, tm);
}

std::vector<int> multi_target_plan(std::span<const double> clean_logits, int label, std::size_t count) {
  const std::size_t c = clean_logits.size();
  if (c < 2 || count > c - 1) {
    throw ConfigError("cannot pick " + std::to_string(count) + " targets among " + std::to_string(c) + " classes");
  }
  std::vector<int> order;
  for (std::size_t j = 0; j < c; ++j) {
    if (static_cast<int>(j) != label) order.push_back(static_cast<int>(j));
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return clean_logits[static_cast<std::size_t>(a)] > clean_logits[static_cast<std::size_t>(b)]; });
  order.resize(count);
  return order;
}

}  // namespace advbench
