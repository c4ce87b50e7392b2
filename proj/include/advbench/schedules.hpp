#pragma once

#include <string>

namespace advbench {

enum class ScheduleKind { fixed, sgdr_cosine, cos4, two_stage, kanra_piecewise, cosine_per_restart };

std::string to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(const std::string& name);

/// Step-size schedule. Field meaning per kind:
///  fixed               eta_max
///  sgdr_cosine         eta_max, eta_min, period T (cosine restarts every T steps)
///  cos4                eta_max as base, period I, floor_fraction
///  two_stage           epsilon, stage_boundary, first_factor, second_factor
///  kanra_piecewise     epsilon, period N
///  cosine_per_restart  eta_max as start, eta_min as floor, period I
struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::fixed;
  double eta_max = 0.0;
  double eta_min = 0.0;
  int period = 1;
  double epsilon = 0.0;
  int stage_boundary = 5;
  double first_factor = 2.0;
  double second_factor = 0.25;
  double floor_fraction = 0.01;

  static ScheduleSpec fixed(double eta);
  static ScheduleSpec sgdr_cosine(double eta_max, double eta_min, int period);
  static ScheduleSpec cos4(double eta_base, int iterations, double floor_fraction = 0.01);
  static ScheduleSpec two_stage(double epsilon, int boundary = 5, double first = 2.0, double second = 0.25);
  static ScheduleSpec kanra_piecewise(double epsilon, int total_steps);
  static ScheduleSpec cosine_per_restart(double eta_start, double eta_floor, int iterations);

  /// Throws ConfigError on non-positive step sizes, eta_max < eta_min, or a
  /// period below 1.
  void validate() const;
};

/// Step size at iteration i >= 0. Always strictly positive for a valid spec.
double step_size(const ScheduleSpec& spec, int i);

}  // namespace advbench
