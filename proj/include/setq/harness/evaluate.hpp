#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "setq/enc/qnet.hpp"
#include "setq/sim/highway.hpp"

namespace setq::harness {

struct EvalOptions {
    int lanes = 3;
    std::vector<int> ns;  // empty = the standard 30..90 step 5 sweep
    int seeds_per_n = 20;
    uint64_t eval_seed = 7777;
    uint64_t pool_seed = 1000003;
    int episode_actions = 250;
    enc::NoiseSpec noise{};
    int threads = 1;
    std::string trajectory_path;  // first scenario only, when set

    std::vector<int> effective_ns() const {
        if (!ns.empty()) return ns;
        std::vector<int> out;
        for (int i = 0; i <= 12; ++i) out.push_back(30 + 5 * i);
        return out;
    }
};

struct EvalRow {
    int n = 0;
    int lanes = 0;
    uint64_t seed = 0;
    double episode_return = 0.0;
    int lane_changes = 0;
};

struct Aggregate {
    int n = 0;
    double mean = 0.0;
    double stddev = 0.0;  // sample stddev over seeds
    int count = 0;
};

struct EvalReport {
    std::vector<EvalRow> rows;

    std::vector<Aggregate> aggregates() const;
    double mean_return() const;
    double mean_return_for_n(int n) const;
};

// A policy maps the current simulator state to an action. Separate
// instances are handed to each worker thread, so implementations may keep
// mutable forward caches.
using ScenarioPolicy = std::function<Action(const sim::Simulator&, const enc::ObservationBundle&)>;
using PolicyFactory = std::function<ScenarioPolicy()>;

EvalReport run_sweep(const PolicyFactory& factory, const EvalOptions& opt);

// One scripted scenario from an explicit config, optional trajectory dump.
EvalRow run_single_scenario(const sim::ScenarioConfig& cfg, const ScenarioPolicy& policy,
                            const enc::NoiseSpec& noise = {},
                            const std::string& trajectory_path = {});

// Greedy policy from a checkpoint (dqn or ppo, detected from the
// descriptor).
EvalReport evaluate_checkpoint(const std::string& checkpoint_path, const EvalOptions& opt);

enum class BaselineKind { NoLaneChange, RuleBased };

BaselineKind baseline_kind_from_name(const std::string& name);

EvalReport run_baseline(BaselineKind kind, const EvalOptions& opt);

// Policy factories reused by the CLI: checkpoint-driven or baseline.
PolicyFactory checkpoint_policy_factory(const std::string& checkpoint_path);
PolicyFactory baseline_policy_factory(BaselineKind kind, uint64_t seed);

// CSV: one episode row per scenario, then one aggregate row per n.
// Columns: type,n,lanes,seed,episode_return,return_std,lane_changes
void write_eval_csv(const EvalReport& report, const std::string& path);
EvalReport read_eval_csv(const std::string& path);

}  // namespace setq::harness
