#pragma once

#include <vector>

#include "advbench/attacks.hpp"

namespace advbench::detail {

/// LossSpec for the untargeted kinds that need no extra parameters.
LossSpec untargeted_loss(LossKind kind);

/// Starting point for one restart of one sample. May spend budget.
std::vector<double> start_point(const InitSpec& init, SampleProbe& probe, const ThreatModel& tm,
                                std::uint64_t restart, std::vector<double> from);

/// Any active sample still able to run a backward pass.
bool any_can_backward(AttackContext& ctx);

}  // namespace advbench::detail
