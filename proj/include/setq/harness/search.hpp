#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "setq/enc/qnet.hpp"
#include "setq/rl/qlearning.hpp"

namespace setq::harness {

// Discrete configuration grid per architecture. Head layers stay at the
// fixed-input optimum (100, 100) for the non-fixed encoders; for the fixed
// input the head itself is what is searched.
std::vector<enc::Arch> enumerate_search_space(enc::EncoderKind kind);

// Uniform sample of `budget` configurations: without replacement when the
// grid is small enough, with replacement otherwise.
std::vector<enc::Arch> sample_configs(enc::EncoderKind kind, int budget, uint64_t seed);

struct SearchOptions {
    std::string dataset_path;
    std::string work_dir;  // per-config checkpoints land here
    int budget = 20;
    uint64_t seed = 1;
    rl::TrainConfig train_cfg;       // reduced budget per config
    std::vector<int> probe_ns = {30, 45, 60};
    int probe_seeds_per_n = 1;
    int probe_episode_actions = 250;
    int lanes = 3;
    uint64_t pool_seed = 1000003;
    int threads = 1;
    bool verbose = false;
};

struct SearchEntry {
    enc::Arch arch;
    double score = 0.0;  // mean probe return
    std::string checkpoint_path;
};

// Trains every sampled configuration on the reduced budget and ranks by
// mean return on the probe sweep, best first.
std::vector<SearchEntry> random_search(enc::EncoderKind kind, const SearchOptions& opt);

}  // namespace setq::harness
