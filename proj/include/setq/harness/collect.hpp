#pragma once

#include <cstdint>
#include <string>

#include "setq/sim/highway.hpp"

namespace setq::harness {

struct CollectOptions {
    std::string out_path;
    uint64_t samples = 50000;
    uint64_t seed = 1;
    int lanes = 3;
    int n_min = 30;
    int n_max = 60;
    int episode_actions = 250;
    uint64_t pool_seed = 1000003;
};

struct CollectResult {
    uint64_t samples = 0;
    int episodes = 0;
};

// Runs the data-collection agent: at every action step it picks uniformly
// among the actions the safety module currently allows. Transitions are
// streamed to disk as they happen.
CollectResult collect_dataset(const CollectOptions& opt);

// Deterministic seed for evaluation/collection scenario i at vehicle count n.
uint64_t scenario_seed(uint64_t base, int n, int index);

std::string sim_config_hash(const sim::ScenarioConfig& cfg);

}  // namespace setq::harness
