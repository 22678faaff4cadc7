#pragma once

// Shared helpers for the test binaries: tiny deterministic nets, toy
// environments and datasets, scratch files.

#include <cstdio>
#include <filesystem>
#include <string>

#include "setq/enc/qnet.hpp"
#include "setq/rl/ppo.hpp"
#include "setq/rl/replay.hpp"

namespace testsupport {

inline std::string scratch_dir() {
    auto dir = std::filesystem::temp_directory_path() / "setq_tests";
    std::filesystem::create_directories(dir);
    return dir.string();
}

inline std::string scratch_path(const std::string& name) { return scratch_dir() + "/" + name; }

inline setq::enc::DynamicFeature feat(float dr, float dv, int dl) {
    setq::enc::DynamicFeature f;
    f.dr = dr;
    f.dv = dv;
    f.dl = dl;
    return f;
}

inline setq::enc::ObservationBundle obs_from_set(const setq::enc::DynamicSet& set,
                                                 setq::enc::StaticFeature stat = {0.5f, 1.0f, 1.0f}) {
    setq::enc::ObservationBundle obs;
    obs.set = set;
    setq::enc::sort_canonical(obs.set);
    obs.stat = stat;
    obs.rel.assign(43, 0.0f);
    obs.occ.assign(400, 0.0f);
    return obs;
}

inline setq::enc::DynamicSet random_set(setq::nn::Rng& rng, int n) {
    setq::enc::DynamicSet set;
    for (int i = 0; i < n; ++i)
        set.push_back(feat(static_cast<float>(rng.uniform(-1, 1)), static_cast<float>(rng.uniform(-1, 1)),
                           rng.uniform_int(-2, 2)));
    return set;
}

// Two-state MDP used by the offline sanity checks. States are told apart by
// the static features; the dynamic set stays empty.
//
//   state A: static (0.25, 1, 0)      state B: static (0.75, 0, 1)
//   transitions/rewards:
//     A keep  -> A, 0.2      B keep  -> B, 0.8
//     A left  -> B, 0.0      B left  -> A, 0.3
//     A right -> A, 0.1      B right -> B, 1.0
struct TwoStateMdp {
    static constexpr double kReward[2][3] = {{0.2, 0.0, 0.1}, {0.8, 0.3, 1.0}};
    static constexpr int kNext[2][3] = {{0, 1, 0}, {1, 0, 1}};

    static setq::enc::StaticFeature stat(int s) {
        return s == 0 ? setq::enc::StaticFeature{0.25f, 1.0f, 0.0f}
                      : setq::enc::StaticFeature{0.75f, 0.0f, 1.0f};
    }

    static setq::enc::ObservationBundle observation(int s) { return obs_from_set({}, stat(s)); }

    // Q* by value iteration (the implementation under test never sees this).
    static std::array<std::array<double, 3>, 2> optimal_q(double gamma) {
        std::array<std::array<double, 3>, 2> q{};
        for (int sweep = 0; sweep < 10000; ++sweep) {
            auto prev = q;
            for (int s = 0; s < 2; ++s) {
                for (int a = 0; a < 3; ++a) {
                    int ns = kNext[s][a];
                    double best = std::max({prev[ns][0], prev[ns][1], prev[ns][2]});
                    q[s][a] = kReward[s][a] + gamma * best;
                }
            }
        }
        return q;
    }

    // Uniform-behavior dataset covering every (s, a) pair.
    static setq::rl::ReplayBuffer dataset(int repeats, uint64_t seed) {
        setq::rl::ReplayBuffer buf(static_cast<size_t>(repeats) * 6, seed);
        for (int rep = 0; rep < repeats; ++rep) {
            for (int s = 0; s < 2; ++s) {
                for (int a = 0; a < 3; ++a) {
                    setq::rl::Transition t;
                    t.state = observation(s);
                    t.action = static_cast<setq::Action>(a);
                    t.reward = static_cast<float>(kReward[s][a]);
                    t.next_state = observation(kNext[s][a]);
                    buf.push(std::move(t));
                }
            }
        }
        return buf;
    }
};

// Stateless 3-armed bandit as an on-policy environment: reward depends only
// on the action, episodes are one horizon long.
class BanditEnv : public setq::rl::Env {
public:
    explicit BanditEnv(int episode_len = 20) : len_(episode_len) {}

    setq::rl::EnvObs reset(uint64_t) override {
        t_ = 0;
        return observe();
    }

    std::pair<setq::rl::EnvObs, double> step(setq::Action a) override {
        ++t_;
        double r = a == setq::Action::Left ? 1.0 : (a == setq::Action::Right ? 0.5 : 0.0);
        return {observe(), r};
    }

    int episode_length() const override { return len_; }

    static setq::Action optimal() { return setq::Action::Left; }

private:
    setq::rl::EnvObs observe() const {
        setq::rl::EnvObs o;
        o.stat = {0.5f, 1.0f, 1.0f};
        return o;
    }

    int len_ = 20;
    int t_ = 0;
};

}  // namespace testsupport
