#pragma once

#include <cstdint>
#include <string>

#include "setq/enc/qnet.hpp"
#include "setq/rl/ppo.hpp"
#include "setq/rl/qlearning.hpp"

namespace setq::harness {

struct DqnTrainOptions {
    std::string dataset_path;
    std::string checkpoint_path;
    std::string metrics_path;  // empty = no metrics file
    enc::Arch arch;
    rl::TrainConfig cfg;
    uint64_t seed = 1;
    int64_t checkpoint_every = 0;  // intermediate saves; 0 = final only
    int64_t log_every = 200;
    bool verbose = false;
};

struct DqnTrainResult {
    double final_loss = 0.0;
    double final_target_mean = 0.0;
    int64_t steps = 0;
};

DqnTrainResult train_dqn(const DqnTrainOptions& opt);

// Checkpoint descriptors carry {"algo", "arch"}; DQN tensors are prefixed
// q1./q2., PPO tensors enc./pi./v.
void save_dqn_checkpoint(const std::string& path, rl::QEnsemble<float>& ensemble);
rl::QEnsemble<float> load_dqn_checkpoint(const std::string& path, const rl::TrainConfig& cfg = {});

struct PpoTrainOptions {
    std::string checkpoint_path;
    std::string metrics_path;
    rl::PpoConfig cfg;
    uint64_t seed = 1;
    int iterations = 100;
    // highway environment settings
    int lanes = 3;
    int n_min = 30;
    int n_max = 60;
    int episode_actions = 250;
    uint64_t pool_seed = 1000003;
    std::vector<int> phi{20, 80};
    std::vector<int> rho{80, 20};
    std::vector<int> head{100, 100};
    bool verbose = false;
};

struct PpoTrainResult {
    double mean_return_last_iter = 0.0;
    int64_t env_steps = 0;
};

PpoTrainResult train_ppo(const PpoTrainOptions& opt);

void save_ppo_checkpoint(const std::string& path, rl::PolicyValueNet<float>& net,
                         const std::vector<int>& phi, const std::vector<int>& rho,
                         const std::vector<int>& head);
rl::PolicyValueNet<float> load_ppo_checkpoint(const std::string& path);

// Generic: inspects the descriptor to tell dqn from ppo.
std::string checkpoint_algo(const std::string& path);

// On-policy adapter around the ring-road simulator; each reset draws a
// fresh scenario with n ~ U[n_min, n_max].
class HighwayEnv : public rl::Env {
public:
    HighwayEnv(int lanes, int n_min, int n_max, int episode_actions, uint64_t pool_seed);

    rl::EnvObs reset(uint64_t seed) override;
    std::pair<rl::EnvObs, double> step(Action a) override;
    int episode_length() const override { return episode_actions_; }

    const sim::Simulator* simulator() const { return sim_.get(); }

private:
    rl::EnvObs observe() const;

    int lanes_, n_min_, n_max_, episode_actions_;
    uint64_t pool_seed_;
    std::unique_ptr<sim::Simulator> sim_;
};

}  // namespace setq::harness
