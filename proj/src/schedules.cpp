#include "advbench/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "advbench/errors.hpp"

namespace advbench {

std::string to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::fixed:
      return "fixed";
    case ScheduleKind::sgdr_cosine:
      return "sgdr_cosine";
    case ScheduleKind::cos4:
      return "cos4";
    case ScheduleKind::two_stage:
      return "two_stage";
    case ScheduleKind::kanra_piecewise:
      return "kanra_piecewise";
    case ScheduleKind::cosine_per_restart:
      return "cosine_per_restart";
  }
  return "fixed";
}

ScheduleKind schedule_kind_from_string(const std::string& name) {
  for (auto k : {ScheduleKind::fixed, ScheduleKind::sgdr_cosine, ScheduleKind::cos4, ScheduleKind::two_stage,
                 ScheduleKind::kanra_piecewise, ScheduleKind::cosine_per_restart}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown schedule kind '" + name + "'");
}

ScheduleSpec ScheduleSpec::fixed(double eta) {
  ScheduleSpec s;
  s.eta_max = eta;
  return s;
}

ScheduleSpec ScheduleSpec::sgdr_cosine(double eta_max, double eta_min, int period) {
  ScheduleSpec s;
  s.kind = ScheduleKind::sgdr_cosine;
  s.eta_max = eta_max;
  s.eta_min = eta_min;
  s.period = period;
  return s;
}

ScheduleSpec ScheduleSpec::cos4(double eta_base, int iterations, double floor_fraction) {
  ScheduleSpec s;
  s.kind = ScheduleKind::cos4;
  s.eta_max = eta_base;
  s.period = iterations;
  s.floor_fraction = floor_fraction;
  return s;
}

ScheduleSpec ScheduleSpec::two_stage(double epsilon, int boundary, double first, double second) {
  ScheduleSpec s;
  s.kind = ScheduleKind::two_stage;
  s.epsilon = epsilon;
  s.stage_boundary = boundary;
  s.first_factor = first;
  s.second_factor = second;
  return s;
}

ScheduleSpec ScheduleSpec::kanra_piecewise(double epsilon, int total_steps) {
  ScheduleSpec s;
  s.kind = ScheduleKind::kanra_piecewise;
  s.epsilon = epsilon;
  s.period = total_steps;
  return s;
}

ScheduleSpec ScheduleSpec::cosine_per_restart(double eta_start, double eta_floor, int iterations) {
  ScheduleSpec s;
  s.kind = ScheduleKind::cosine_per_restart;
  s.eta_max = eta_start;
  s.eta_min = eta_floor;
  s.period = iterations;
  return s;
}

void ScheduleSpec::validate() const {
  if (period < 1) throw ConfigError("schedule period must be at least 1");
  switch (kind) {
    case ScheduleKind::fixed:
      if (!(eta_max > 0.0)) throw ConfigError("fixed step size must be positive");
      break;
    case ScheduleKind::sgdr_cosine:
    case ScheduleKind::cosine_per_restart:
      if (!(eta_min > 0.0) || !(eta_max >= eta_min)) throw ConfigError("schedule needs eta_max >= eta_min > 0");
      break;
    case ScheduleKind::cos4:
      if (!(eta_max > 0.0) || !(floor_fraction > 0.0)) throw ConfigError("cos4 needs a positive base and floor");
      break;
    case ScheduleKind::two_stage:
      if (!(epsilon > 0.0) || !(first_factor > 0.0) || !(second_factor > 0.0) || stage_boundary < 0) {
        throw ConfigError("two_stage needs positive epsilon and factors");
      }
      break;
    case ScheduleKind::kanra_piecewise:
      if (!(epsilon > 0.0)) throw ConfigError("kanra_piecewise needs positive epsilon");
      break;
  }
}

double step_size(const ScheduleSpec& s, int i) {
  if (i < 0) throw ConfigError("iteration index must be non-negative");
  switch (s.kind) {
    case ScheduleKind::fixed:
      return s.eta_max;
    case ScheduleKind::sgdr_cosine: {
      const double phase = static_cast<double>(i % s.period) / static_cast<double>(s.period);
      return 0.5 * (s.eta_max - s.eta_min) * (1.0 + std::cos(phase * std::numbers::pi)) + s.eta_min;
    }
    case ScheduleKind::cos4: {
      // cos(4i/I) turns negative past i = pi*I/8; the floor keeps the step an ascent step.
      const double c = std::cos(4.0 * static_cast<double>(i) / static_cast<double>(s.period));
      return s.eta_max * std::max(c, s.floor_fraction);
    }
    case ScheduleKind::two_stage:
      return s.epsilon * (i < s.stage_boundary ? s.first_factor : s.second_factor);
    case ScheduleKind::kanra_piecewise:
      if (4 * static_cast<long>(i) < s.period) return s.epsilon;
      if (2 * static_cast<long>(i) < s.period) return s.epsilon / 3.0;
      return s.epsilon / 8.0;
    case ScheduleKind::cosine_per_restart: {
      if (i >= s.period) return s.eta_min;
      const double phase = static_cast<double>(i) / static_cast<double>(s.period);
      return s.eta_min + (s.eta_max - s.eta_min) * 0.5 * (1.0 + std::cos(phase * std::numbers::pi));
    }
  }
  throw ConfigError("unhandled schedule kind");
}

}  // namespace advbench
