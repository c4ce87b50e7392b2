#include "advbench/oracle.hpp"

#include <algorithm>
#include <limits>

#include "advbench/errors.hpp"
#include "advbench/parallel.hpp"

namespace advbench {

namespace {

double true_margin(std::span<const double> z, int y) {
  return z[static_cast<std::size_t>(y)] - z[best_wrong_class(z, y)];
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::attackable:
      return "attackable";
    case Verdict::robust:
      return "robust";
    case Verdict::unknown:
      return "unknown";
  }
  return "unknown";
}

Verdict verdict_from_string(const std::string& name) {
  for (auto v : {Verdict::attackable, Verdict::robust, Verdict::unknown}) {
    if (to_string(v) == name) return v;
  }
  throw ConfigError("unknown verdict '" + name + "'");
}

RobustnessVerdict linear_oracle(const Model& model, std::span<const double> x, int y, const ThreatModel& tm) {
  if (model.architecture() != Architecture::linear) throw ConfigError("linear_oracle needs a linear model");
  const auto& layer = model.layers().front();
  const std::size_t d = layer.inputs;
  const auto yi = static_cast<std::size_t>(y);
  RobustnessVerdict out;
  out.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < layer.outputs; ++j) {
    if (j == yi) continue;
    std::vector<double> p(x.begin(), x.end());
    for (std::size_t k = 0; k < d; ++k) {
      const double dw = layer.w(yi, k) - layer.w(j, k);
      p[k] -= tm.epsilon * (dw > 0.0 ? 1.0 : (dw < 0.0 ? -1.0 : 0.0));
    }
    project_inplace(p, x, tm);
    const auto z = model.logits(p);
    const double m = z[yi] - z[j];
    out.worst_margin = std::min(out.worst_margin, m);
    if (out.witness.empty() && misclassified(z, y)) out.witness = p;
  }
  out.verdict = out.witness.empty() ? Verdict::robust : Verdict::attackable;
  return out;
}

RobustnessVerdict grid_oracle(const Model& model, std::span<const double> x, int y, const ThreatModel& tm,
                              int resolution, std::uint64_t max_points) {
  if (resolution < 2) throw ConfigError("grid resolution must be at least 2");
  const std::size_t d = x.size();
  std::vector<double> lo(d), hi(d);
  std::vector<int> count(d);
  long double total = 1.0L;
  for (std::size_t k = 0; k < d; ++k) {
    lo[k] = std::max(tm.box_low, x[k] - tm.epsilon);
    hi[k] = std::min(tm.box_high, x[k] + tm.epsilon);
    count[k] = hi[k] > lo[k] ? resolution : 1;
    total *= count[k];
  }
  if (total > static_cast<long double>(max_points)) {
    throw ConfigError("grid of " + std::to_string(static_cast<double>(total)) + " points exceeds the cap of " +
                      std::to_string(max_points));
  }
  RobustnessVerdict out;
  out.resolution = resolution;
  out.worst_margin = std::numeric_limits<double>::infinity();
  std::vector<int> idx(d, 0);
  std::vector<double> p(d);
  for (;;) {
    for (std::size_t k = 0; k < d; ++k) {
      p[k] = count[k] == 1 ? lo[k] : lo[k] + (hi[k] - lo[k]) * idx[k] / (count[k] - 1);
    }
    project_inplace(p, x, tm);
    const auto z = model.logits(p);
    out.worst_margin = std::min(out.worst_margin, true_margin(z, y));
    if (misclassified(z, y)) {
      out.verdict = Verdict::attackable;
      out.witness = p;
      return out;
    }
    std::size_t k = 0;
    while (k < d && ++idx[k] == count[k]) idx[k++] = 0;
    if (k == d) break;
  }
  out.verdict = Verdict::robust;
  return out;
}

std::vector<RobustnessVerdict> oracle_batch(const Model& model, const ImageBatch& batch, const ThreatModel& tm,
                                            int resolution, unsigned workers, std::uint64_t max_points) {
  if (batch.dim != model.input_dim()) throw ConfigError("batch dimension does not match the model");
  std::vector<RobustnessVerdict> out(batch.rows);
  const bool linear = model.architecture() == Architecture::linear;
  parallel_for(batch.rows, workers, [&](std::size_t i) {
    out[i] = linear ? linear_oracle(model, batch.row(i), batch.labels[i], tm)
                    : grid_oracle(model, batch.row(i), batch.labels[i], tm, resolution, max_points);
  });
  return out;
}

FilterError measure_filter_error(std::span<const SampleStatus> statuses,
                                 std::span<const RobustnessVerdict> verdicts) {
  if (statuses.size() != verdicts.size()) throw ConfigError("status and verdict vectors differ in length");
  FilterError e;
  for (std::size_t i = 0; i < statuses.size(); ++i) {
    const bool filtered = statuses[i] == SampleStatus::filtered_robust;
    if (verdicts[i].verdict == Verdict::attackable) {
      ++e.attackable;
      if (filtered) ++e.false_negatives;
    } else if (verdicts[i].verdict == Verdict::robust) {
      ++e.robust;
      if (!filtered) ++e.false_positives;
    }
  }
  if (e.attackable > 0) e.false_negative_rate = static_cast<double>(e.false_negatives) / e.attackable;
  if (e.robust > 0) e.false_positive_rate = static_cast<double>(e.false_positives) / e.robust;
  return e;
}

nlohmann::json verdicts_to_json(std::span<const RobustnessVerdict> verdicts) {
  auto arr = nlohmann::json::array();
  for (const auto& v : verdicts) {
    nlohmann::json j;
    j["verdict"] = to_string(v.verdict);
    j["worst_margin"] = v.worst_margin;
    j["resolution"] = v.resolution;
    j["witness"] = v.witness;
    arr.push_back(std::move(j));
  }
  return arr;
}

std::vector<RobustnessVerdict> verdicts_from_json(const nlohmann::json& j) {
  std::vector<RobustnessVerdict> out;
  try {
    for (const auto& e : j) {
      RobustnessVerdict v;
      v.verdict = verdict_from_string(e.at("verdict").get<std::string>());
      v.worst_margin = e.at("worst_margin").get<double>();
      v.resolution = e.at("resolution").get<int>();
      v.witness = e.at("witness").get<std::vector<double>>();
      out.push_back(std::move(v));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw LoadError(std::string("malformed verdict list: ") + ex.what());
  }
  return out;
}

}  // namespace advbench
