#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "advbench/batch.hpp"
#include "advbench/ledger.hpp"
#include "advbench/model.hpp"
#include "advbench/threat.hpp"
#include "json.hpp"

namespace advbench {

enum class Verdict { attackable, robust, unknown };

std::string to_string(Verdict v);
Verdict verdict_from_string(const std::string& name);

/// Ground truth for one sample. Oracle queries never touch a budget ledger.
struct RobustnessVerdict {
  Verdict verdict = Verdict::unknown;
  /// Feasible, misclassifying point when attackable.
  std::vector<double> witness;
  /// Smallest true-class margin z_y - max_{j != y} z_j found. For the
  /// linear oracle this is exact; for the grid it covers the points
  /// visited (all of them when robust).
  double worst_margin = 0.0;
  /// Points per axis; 0 for the closed form.
  int resolution = 0;
};

/// Exact verdict for a linear model over the ball intersected with the
/// box. For each wrong class j the minimiser of z_y - z_j is the clamp of
/// x - eps * sign(w_y - w_j); attackable iff one of these points is
/// misclassified.
RobustnessVerdict linear_oracle(const Model& model, std::span<const double> x, int y, const ThreatModel& tm);

inline constexpr std::uint64_t kDefaultGridCap = 1ull << 24;

/// Exhaustive search over `resolution` evenly spaced points per axis of the
/// feasible interval, endpoints included. Refuses (ConfigError) grids with
/// more than `max_points` points.
RobustnessVerdict grid_oracle(const Model& model, std::span<const double> x, int y, const ThreatModel& tm,
                              int resolution, std::uint64_t max_points = kDefaultGridCap);

/// linear_oracle for linear models, grid_oracle otherwise.
std::vector<RobustnessVerdict> oracle_batch(const Model& model, const ImageBatch& batch, const ThreatModel& tm,
                                            int resolution, unsigned workers = 1,
                                            std::uint64_t max_points = kDefaultGridCap);

struct FilterError {
  std::size_t false_negatives = 0;  // filtered, but the oracle found a witness
  std::size_t attackable = 0;
  std::size_t false_positives = 0;  // kept, but the oracle proves robustness
  std::size_t robust = 0;
  double false_negative_rate = 0.0;
  double false_positive_rate = 0.0;
};

/// Compares filtered_robust decisions to the oracle. Samples with an
/// unknown verdict are ignored.
FilterError measure_filter_error(std::span<const SampleStatus> statuses,
                                 std::span<const RobustnessVerdict> verdicts);

nlohmann::json verdicts_to_json(std::span<const RobustnessVerdict> verdicts);
std::vector<RobustnessVerdict> verdicts_from_json(const nlohmann::json& j);

}  // namespace advbench
