#pragma once

#include <string>

#include "setq/sim/highway.hpp"

namespace setq::sim {

// Scenario config file: JSON with keys n, lanes, seed, episode_actions,
// pool_seed (all optional, defaults apply). Extra keys are rejected.
ScenarioConfig load_scenario_config(const std::string& path);
void save_scenario_config(const ScenarioConfig& cfg, const std::string& path);

}  // namespace setq::sim
