#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "setq/enc/features.hpp"
#include "setq/nn/rng.hpp"

namespace setq {

enum class Action : uint8_t { Keep = 0, Left = 1, Right = 2 };

inline const char* action_name(Action a) {
    switch (a) {
        case Action::Keep: return "keep";
        case Action::Left: return "left";
        case Action::Right: return "right";
    }
    return "?";
}

namespace sim {

struct DriverParams {
    double max_speed = 24.0;
    double lc_speed_gain = 15.0;   // larger = more eager to change lanes
    double lc_cooperative = 0.0;   // probability of yielding to a faster follower
    double accel = 2.6;            // m/s^2
    double decel = 4.5;            // m/s^2, braking rate assumed in the safe-speed rule
    double min_gap = 2.0;          // m
    double headway = 0.5;          // s
    double length = 4.5;           // m
};

// Types 1-4; max speed gets a per-driver offset u ~ U(-5,5) and the
// lane-change eagerness i ~ U(10,20).
std::vector<DriverParams> sample_driver_pool(uint64_t seed, int count = 100);

DriverParams ego_driver();

struct ScenarioConfig {
    int n_vehicles = 30;  // surrounding cars; the ego comes on top
    int lanes = 3;
    uint64_t seed = 1;
    uint64_t pool_seed = 1000003;
    int episode_actions = 250;
    double ring_length = 1000.0;
    double dt = 0.5;
    int steps_per_action = 4;
    int change_steps = 4;  // lane change duration in sim steps
};

struct Vehicle {
    int id = 0;
    double pos = 0.0;  // front bumper, ring coordinate in [0, ring)
    int lane = 0;
    double speed = 0.0;
    DriverParams drv;

    int change_target = -1;   // -1 = not changing
    int change_progress = 0;  // completed sim steps of the maneuver
    int cooldown = 0;         // steps until the next rule-based change

    bool changing() const { return change_target >= 0; }

    double lane_pos(int total_change_steps) const {
        if (!changing()) return lane;
        double frac = static_cast<double>(change_progress) / total_change_steps;
        return lane + frac * (change_target - lane);
    }

    bool occupies(int l) const { return l == lane || (changing() && l == change_target); }
};

// Gap bookkeeping for lane-change decisions; gaps are net bumper-to-bumper
// metres.
struct LaneNeighborInfo {
    bool exists = false;
    bool has_leader = false;
    double leader_gap = 0.0;
    double leader_speed = 0.0;
    bool has_follower = false;
    double follower_gap = 0.0;
    double follower_speed = 0.0;
};

// r(s, a) = 1 - |v_ego - v_desired| / v_desired - p_lc with p_lc = 0.01 for
// lane-change actions.
double reward(double v_ego, double v_desired, Action chosen);

inline constexpr double kLaneChangePenalty = 0.01;

// Krauss-style safe speed for a follower approaching a leader.
double safe_speed(double v_leader, double net_gap, double decel, double headway);

// One next-step speed under the car-following rule (no leader: pass
// has_leader=false).
double follow_speed(const DriverParams& drv, double v, bool has_leader, double leader_gap,
                    double leader_speed, double dt);

// Pure lane-change heuristic. Returns -1/0/+1 relative lane. coop_draw is a
// uniform [0,1) sample consumed by the cooperative-yield branch.
int decide_lane_change(const DriverParams& drv, double v_self, const LaneNeighborInfo& current,
                       const LaneNeighborInfo& left, const LaneNeighborInfo& right, double coop_draw);

bool lane_entry_safe(double v_self, const DriverParams& drv, const LaneNeighborInfo& target);

class Simulator {
public:
    explicit Simulator(const ScenarioConfig& cfg);

    // Explicit placement (vehicle 0 is the ego); used for scripted
    // scenarios and tests.
    Simulator(const ScenarioConfig& cfg, std::vector<Vehicle> vehicles);

    // Applies the agent action for one 2 s period (safety module first),
    // advances the world, returns the reward of the chosen action.
    double step_agent_action(Action chosen);

    Action safety_check(Action a) const;

    enc::Scene scene() const;  // all non-ego vehicles
    enc::EgoState ego_state() const;

    const Vehicle& ego() const { return vehicles_.front(); }
    const std::vector<Vehicle>& vehicles() const { return vehicles_; }
    const ScenarioConfig& config() const { return cfg_; }
    double v_desired() const { return vehicles_.front().drv.max_speed; }
    int actions_taken() const { return actions_taken_; }
    bool episode_done() const { return actions_taken_ >= cfg_.episode_actions; }
    int lane_changes_executed() const { return lane_changes_executed_; }

    // Worst same-lane body overlap seen so far (metres, 0 = none).
    double max_overlap_seen() const { return max_overlap_seen_; }
    bool speed_bounds_ok() const { return speed_bounds_ok_; }

    void set_trajectory_stream(std::ostream* os) { trajectory_ = os; }

    LaneNeighborInfo lane_info(const Vehicle& v, int lane) const;

private:
    void spawn(nn::Rng& rng);
    void sim_step();
    void check_invariants();
    const Vehicle* leader_of(const Vehicle& v, int lane, double* gap_out) const;
    const Vehicle* follower_of(const Vehicle& v, int lane, double* gap_out) const;
    void rebuild_lane_index();

    ScenarioConfig cfg_;
    std::vector<Vehicle> vehicles_;  // index 0 = ego
    std::vector<std::vector<int>> lane_index_;  // per lane, vehicle ids sorted by pos
    nn::Rng rng_;
    int actions_taken_ = 0;
    int step_count_ = 0;
    int lane_changes_executed_ = 0;
    double max_overlap_seen_ = 0.0;
    bool speed_bounds_ok_ = true;
    std::ostream* trajectory_ = nullptr;
};

}  // namespace sim
}  // namespace setq
