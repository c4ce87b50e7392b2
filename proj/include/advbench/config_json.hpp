#pragma once

#include <string>

#include "advbench/attacks.hpp"
#include "json.hpp"

namespace advbench {

/// Builds a pipeline config from its name and a JSON object of overrides.
/// Keys are the config field names; unknown keys are a ConfigError.
AttackConfig attack_config_from_json(const std::string& pipeline, const nlohmann::json& params);

/// Every field of the config, including defaults.
nlohmann::json attack_config_to_json(const AttackConfig& cfg);

}  // namespace advbench
