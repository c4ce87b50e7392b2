#pragma once

#include <span>
#include <string>
#include <vector>

#include "advbench/probe.hpp"
#include "advbench/rng.hpp"
#include "advbench/threat.hpp"

namespace advbench {

enum class InitKind { none, uniform, odi, biased_odi, rrt, restricted_odi };

std::string to_string(InitKind kind);
InitKind init_kind_from_string(const std::string& name);

/// Starting-point strategy. alpha_eps is the step size in units of epsilon.
struct InitSpec {
  InitKind kind = InitKind::none;
  int steps = 2;
  double alpha_eps = 1.0;
  /// Weight of the (runner-up minus true) component in biased ODI.
  double bias = 0.5;
};

/// Uniform sample of the feasible set; no model queries.
std::vector<double> uniform_init(std::span<const double> x, const ThreatModel& tm, Rng& rng);

/// Output diversified initialisation: ascent on w . f(x) for one random
/// w ~ U(-1,1)^C, `steps` signed steps of size alpha from `start`. Stops
/// early when a step succeeds.
std::vector<double> odi_init(SampleProbe& probe, std::vector<double> start, int steps, double alpha,
                             const ThreatModel& tm, Rng& rng);

/// ODI with the direction pulled toward (runner-up minus true class) of the
/// clean logits: w = (1 - bias) w_rand + bias (e_runnerup - e_y).
std::vector<double> biased_odi_init(SampleProbe& probe, std::vector<double> start, int steps, double alpha,
                                    const ThreatModel& tm, Rng& rng, double bias);

/// Diversified start by ascent on cosine(f(x), f(x_target)). One forward of
/// the target image is charged to this sample. Falls back to uniform_init
/// when either logit vector has zero norm or the budget is gone.
std::vector<double> rrt_init(SampleProbe& probe, std::vector<double> start, std::span<const double> target_image,
                             int steps, double alpha, const ThreatModel& tm, Rng& rng);

/// Index of a random batch image whose label differs from sample i's.
/// Throws ConfigError when every image shares the label.
std::size_t pick_rrt_target(const ImageBatch& batch, std::size_t i, Rng& rng);

/// `odi_steps` ODI steps followed by `mt_steps` steps on the summed margin
/// to the two most likely wrong classes of the clean input. Needs C >= 3.
std::vector<double> restricted_odi_init(SampleProbe& probe, std::vector<double> start, double alpha,
                                        const ThreatModel& tm, Rng& rng, int odi_steps = 5, int mt_steps = 5);

/// Non-true classes ordered by clean logit, highest first, ties to the
/// lowest index. Throws ConfigError when count > C - 1.
std::vector<int> multi_target_plan(std::span<const double> clean_logits, int label, std::size_t count);

}  // namespace advbench
