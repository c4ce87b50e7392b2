#pragma once

#include <span>
#include <vector>

#include "advbench/batch.hpp"

namespace advbench {

/// L-infinity ball of radius epsilon intersected with the [0,1] box.
struct ThreatModel {
  double epsilon = 8.0 / 255.0;
  double box_low = 0.0;
  double box_high = 1.0;

  ThreatModel() = default;
  explicit ThreatModel(double eps);

  /// Same box, radius multiplied by `factor` (the enlarged ball of the
  /// outside-inside attack is a second ThreatModel, not a flag).
  ThreatModel scaled(double factor) const { return ThreatModel(epsilon * factor); }
};

inline constexpr double kFeasibilityTolerance = 1e-6;

/// Coordinate-wise clamp to [x-eps, x+eps] ∩ [low, high]. For an
/// axis-aligned ball and box the intersection is again a box, so this single
/// clamp equals ball-then-box and box-then-ball. NaN coordinates fall back
/// to the original value.
void project_inplace(std::span<double> x_adv, std::span<const double> x_orig, const ThreatModel& tm);
std::vector<double> project(std::span<const double> x_adv, std::span<const double> x_orig,
                            const ThreatModel& tm);
/// Row-wise projection of a whole batch of candidates (n*d values).
std::vector<double> project_batch(std::span<const double> x_adv, const ImageBatch& orig, const ThreatModel& tm);

bool is_feasible(std::span<const double> x_adv, std::span<const double> x_orig, const ThreatModel& tm,
                 double tol = kFeasibilityTolerance);
std::vector<bool> is_feasible_batch(std::span<const double> x_adv, const ImageBatch& orig,
                                    const ThreatModel& tm, double tol = kFeasibilityTolerance);

/// max_k |a_k - b_k|.
double linf_distance(std::span<const double> a, std::span<const double> b);

}  // namespace advbench
